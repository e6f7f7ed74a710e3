#pragma once

#include <stdexcept>
#include <string>

namespace mh {

enum class errc {
    invalid_input,
    out_of_domain,
    invalid_metric,
    empty_set,
    degenerate_gradient,
    curvature_blowup,
    containment_failure,
    no_contact,
    resolution_limit,
    invalid_step,
    flow_extinct,
    invalid_setup,
    nesting_fault,
    schema_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_input: return "InvalidInput";
        case errc::out_of_domain: return "OutOfDomain";
        case errc::invalid_metric: return "InvalidMetric";
        case errc::empty_set: return "EmptySet";
        case errc::degenerate_gradient: return "DegenerateGradient";
        case errc::curvature_blowup: return "CurvatureBlowup";
        case errc::containment_failure: return "ContainmentFailure";
        case errc::no_contact: return "NoContact";
        case errc::resolution_limit: return "ResolutionLimit";
        case errc::invalid_step: return "InvalidStep";
        case errc::flow_extinct: return "FlowExtinct";
        case errc::invalid_setup: return "InvalidSetup";
        case errc::nesting_fault: return "NestingFault";
        case errc::schema_error: return "SchemaError";
    }
    return "Unknown";
}

/// Domain error carrying a machine-checkable code. `payload` is used by
/// CurvatureBlowup to report the detected blow-up distance.
class Error : public std::runtime_error {
public:
    Error(errc code, std::string msg, double payload = 0.0)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
          code_(code),
          payload_(payload) {}

    errc code() const { return code_; }
    double payload() const { return payload_; }

private:
    errc code_;
    double payload_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg, double payload = 0.0) {
    throw Error(code, msg, payload);
}

inline void require(bool cond, errc code, const std::string& msg) {
    if (!cond) fail(code, msg);
}

}  // namespace mh
