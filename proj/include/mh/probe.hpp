#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "mh/fields.hpp"
#include "mh/linalg.hpp"
#include "mh/util.hpp"

namespace mh {

/// A C^2 test function with derivative adapters. Quadratic probes evaluate
/// exactly; barrier and gridded probes go through finite differences of the
/// underlying field. `proper_tail` records that the probe is interpreted with
/// a proper far-field tail glued on outside a compact set, which never
/// changes values or derivatives near the set under test.
struct TestFunction {
    std::string kind;
    std::string description;
    bool proper_tail = false;
    bool exact = false;

    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<SymMatrix(const Vec&)> hess;

    TestFunction shifted_by_constant(double c) const {
        TestFunction f = *this;
        auto base = value;
        f.value = [base, c](const Vec& p) { return base(p) + c; };
        return f;
    }

    /// Translate x -> f(x - q).
    TestFunction translated(const Vec& q) const {
        TestFunction f = *this;
        auto v = value;
        auto g = grad;
        auto h = hess;
        f.value = [v, q](const Vec& p) { return v(p - q); };
        f.grad = [g, q](const Vec& p) { return g(p - q); };
        f.hess = [h, q](const Vec& p) { return h(p - q); };
        f.description += " translated by " + g17(q);
        return f;
    }

    TestFunction scaled(double c) const {
        TestFunction f = *this;
        auto v = value;
        auto g = grad;
        auto h = hess;
        f.value = [v, c](const Vec& p) { return c * v(p); };
        f.grad = [g, c](const Vec& p) { return c * g(p); };
        f.hess = [h, c](const Vec& p) { return c * h(p); };
        f.description += " scaled by " + g17(c);
        return f;
    }
};

/// f(x) = a0 + b.(x-c) + (x-c)^T A (x-c) / 2; Df = b + A(x-c); D2f = A.
inline TestFunction quadratic_probe(Vec center, Vec lin, SymMatrix a, double a0 = 0.0,
                                    bool proper_tail = false) {
    TestFunction f;
    f.kind = "quadratic";
    f.exact = true;
    f.proper_tail = proper_tail;
    f.description = "quadratic center=" + g17(center);
    auto c = std::make_shared<Vec>(std::move(center));
    auto b = std::make_shared<Vec>(std::move(lin));
    auto m = std::make_shared<SymMatrix>(std::move(a));
    f.value = [c, b, m, a0](const Vec& p) {
        Vec d = p - *c;
        return a0 + dot(*b, d) + 0.5 * dot(d, m->apply(d));
    };
    f.grad = [c, b, m](const Vec& p) { return *b + m->apply(p - *c); };
    f.hess = [m](const Vec&) { return *m; };
    return f;
}

/// Isotropic c | x - center |^2 (A = 2c I), handy in closed-form tests.
inline TestFunction radial_quadratic_probe(const Vec& center, double c) {
    int n = static_cast<int>(center.size());
    TestFunction f =
        quadratic_probe(center, Vec(center.size(), 0.0), (2.0 * c) * SymMatrix::identity(n));
    f.description = "radial-quadratic center=" + g17(center) + " coeff=" + g17(c);
    return f;
}

inline TestFunction exp_barrier_probe(ScalarField u, double alpha, bool proper_tail = true) {
    TestFunction f;
    f.kind = "exp-barrier";
    f.proper_tail = proper_tail;
    f.description = "exp-barrier alpha=" + g17(alpha);
    auto eb = std::make_shared<ExpBarrier>(std::move(u), alpha);
    f.value = [eb](const Vec& p) { return eb->value(p); };
    f.grad = [eb](const Vec& p) { return eb->grad(p); };
    f.hess = [eb](const Vec& p) { return eb->hess(p); };
    return f;
}

inline TestFunction gridded_probe(ScalarField field) {
    TestFunction f;
    f.kind = "gridded";
    f.description = "gridded field";
    auto s = std::make_shared<ScalarField>(std::move(field));
    f.value = [s](const Vec& p) { return s->value(p); };
    f.grad = [s](const Vec& p) { return gradient(*s, p); };
    f.hess = [s](const Vec& p) { return hessian(*s, p); };
    return f;
}

}  // namespace mh
