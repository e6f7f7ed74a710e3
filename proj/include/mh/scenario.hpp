#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mh/fixtures.hpp"
#include "mh/flow.hpp"
#include "mh/io.hpp"
#include "mh/predicate.hpp"
#include "mh/varifold.hpp"

namespace mh::scenario {

using json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "mh 0.1.0";

inline json tolerance_snapshot() {
    json t;
    t["sym_construction"] = tol::sym_construction;
    t["eig_reconstruction"] = tol::eig_reconstruction;
    t["cross_oracle"] = tol::cross_oracle;
    t["max_rel"] = tol::max_rel;
    t["margin_rel"] = tol::margin_rel;
    t["grad_floor"] = tol::grad_floor;
    t["riccati_rel"] = tol::riccati_rel;
    t["blowup_kappa"] = tol::blowup_kappa;
    t["quadrature_rel"] = tol::quadrature_rel;
    t["gap_alpha_eps"] = tol::gap_alpha_eps;
    t["cfl_factor"] = tol::cfl_factor;
    t["reinit_every"] = tol::reinit_every;
    t["limit_window_steps"] = tol::limit_window_steps;
    t["limit_displacement_cells"] = tol::limit_displacement_cells;
    return t;
}

struct RunOutput {
    json verdict;
    std::map<std::string, std::string> artifacts;  // filename -> content
    bool ok = true;          // expected outcome met
    bool violation = false;  // a violation/mismatch surfaced
    bool error = false;
    std::string error_message;

    int exit_code() const { return error ? 1 : (ok ? 0 : 2); }
};

// ---------------------------------------------------------------------------
// Fixture construction.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = {
        "plane (closed set / region)",
        "half-plane (closed set)",
        "sphere (closed set / region / mesh)",
        "cylinder (region)",
        "slab (region)",
        "halfspace (region)",
        "segment (closed set)",
        "singleton (closed set)",
        "ball (closed set / region)",
        "shell (closed set)",
        "square (mesh)",
        "disk (mesh)",
        "plane-multiplicity family (blowup)",
        "bounded-disk family (blowup)",
        "half-plane-weighted family (blowup)",
        "graph-bump family (counterexample)",
    };
    return names;
}

inline Grid grid_from(const json& spec) {
    int n = spec.at("n").get<int>();
    if (spec.contains("lo") && spec.at("lo").is_array()) {
        Vec lo = io::vec_from(spec.at("lo"));
        Vec hi = io::vec_from(spec.at("hi"));
        std::vector<int> nodes = spec.at("nodes").get<std::vector<int>>();
        return Grid(n, lo, hi, nodes);
    }
    return Grid::cube(n, spec.at("lo").get<double>(), spec.at("hi").get<double>(),
                      spec.at("nodes").get<int>());
}

inline ClosedSet closed_set_from(const json& fx) {
    std::string shape = fx.at("shape").get<std::string>();
    if (shape == "plane") {
        int n = fx.value("n", 3);
        int axis = fx.value("axis", n - 1);
        double off = fx.value("offset", 0.0);
        double half = fx.value("half_extent", 1.2);
        double sp = fx.value("spacing", 0.06);
        auto z = ClosedSet::point_cloud(fixtures::sample_plane(n, axis, off, half, sp), sp,
                                        "plane");
        z.clip_window(Vec(static_cast<std::size_t>(n), -half),
                      Vec(static_cast<std::size_t>(n), half));
        return z;
    }
    if (shape == "half-plane") {
        int n = fx.value("n", 3);
        int sheet = fx.value("sheet_axis", n - 1);
        double half = fx.value("half_extent", 1.5);
        double sp = fx.value("spacing", 0.05);
        auto z = ClosedSet::point_cloud(fixtures::sample_halfplane(n, sheet, half, sp), sp,
                                        "half-plane");
        z.clip_window(Vec(static_cast<std::size_t>(n), -half),
                      Vec(static_cast<std::size_t>(n), half));
        return z;
    }
    if (shape == "sphere") {
        int n = fx.value("n", 3);
        Vec c = fx.contains("center") ? io::vec_from(fx.at("center"))
                                      : Vec(static_cast<std::size_t>(n), 0.0);
        double sp = fx.value("spacing", 0.08);
        return ClosedSet::point_cloud(
            fixtures::sample_sphere(n, c, fx.at("radius").get<double>(), sp), sp, "sphere");
    }
    if (shape == "segment") {
        double sp = fx.value("spacing", 0.04);
        return ClosedSet::point_cloud(
            fixtures::sample_segment(io::vec_from(fx.at("a")), io::vec_from(fx.at("b")), sp), sp,
            "segment");
    }
    if (shape == "singleton")
        return ClosedSet::singleton(io::vec_from(fx.at("point")), fx.value("resolution", 0.05));
    if (shape == "ball") {
        int n = fx.value("n", 3);
        Vec c = fx.contains("center") ? io::vec_from(fx.at("center"))
                                      : Vec(static_cast<std::size_t>(n), 0.0);
        double sp = fx.value("spacing", 0.05);
        return ClosedSet::point_cloud(
            fixtures::sample_ball(n, c, fx.at("radius").get<double>(), sp), sp, "ball");
    }
    if (shape == "shell") {
        int n = fx.value("n", 3);
        Vec c = fx.contains("center") ? io::vec_from(fx.at("center"))
                                      : Vec(static_cast<std::size_t>(n), 0.0);
        double sp = fx.value("spacing", 0.05);
        return ClosedSet::point_cloud(
            fixtures::sample_shell(n, c, fx.at("inner").get<double>(),
                                   fx.at("outer").get<double>(), sp),
            sp, "shell");
    }
    fail(errc::schema_error, "unknown closed-set shape: " + shape);
}

inline std::function<double(const Vec&)> sdf_from(const json& fx) {
    std::string shape = fx.at("shape").get<std::string>();
    if (shape == "ball" || shape == "sphere") {
        Vec c = fx.contains("center")
                    ? io::vec_from(fx.at("center"))
                    : Vec(static_cast<std::size_t>(fx.value("n", 3)), 0.0);
        return fixtures::sphere_sdf(c, fx.at("radius").get<double>());
    }
    if (shape == "slab")
        return fixtures::slab_sdf(fx.value("axis", 2), fx.at("half_width").get<double>());
    if (shape == "halfspace")
        return fixtures::halfspace_sdf(fx.value("axis", 0), fx.value("offset", 0.0));
    if (shape == "cylinder") return fixtures::cylinder_sdf(fx.at("radius").get<double>());
    fail(errc::schema_error, "unknown region shape: " + shape);
}

inline DiscreteVarifold mesh_from(const json& fx) {
    std::string mesh = fx.at("mesh").get<std::string>();
    if (mesh == "square") return fixtures::unit_square_mesh(fx.value("theta", 1.0));
    if (mesh == "disk")
        return fixtures::disk_mesh(fx.value("radius", 1.0), fx.value("rings", 16),
                                   fx.value("slices", 66), fx.value("theta", 1.0));
    if (mesh == "sphere")
        return fixtures::sphere_mesh(fx.value("radius", 1.0), fx.value("slices", 64),
                                     fx.value("stacks", 64), fx.value("theta", 1.0));
    if (mesh == "plane")
        return fixtures::plane_mesh_uniform(fx.value("half_extent", 1.2),
                                            fx.value("divisions", 32), fx.value("height", 0.0),
                                            fx.value("theta", 1.0));
    if (mesh == "graph-bump")
        return counterexample_sequence(fx.value("index", 1), fx.value("step", 0.05)).varifold;
    if (mesh == "off") return io::load_varifold(fx.at("path").get<std::string>());
    fail(errc::schema_error, "unknown mesh fixture: " + mesh);
}

// ---------------------------------------------------------------------------
// Expectation matching.
// ---------------------------------------------------------------------------

inline bool approx_ok(double got, const json& spec) {
    double want = spec.at("value").get<double>();
    double rel = spec.value("rel_tol", 0.0);
    double abs = spec.value("abs_tol", 0.0);
    return std::isfinite(got) && std::abs(got - want) <= std::max(rel * std::abs(want), abs);
}

inline json certificate_json(const ViolationCertificate& c) {
    json j;
    j["point"] = io::vec_json(c.point);
    j["probe"] = c.probe;
    j["margin"] = c.margin;
    j["gradient_norm"] = c.gradient_norm;
    j["m"] = c.m;
    j["h"] = c.h;
    j["proper_tail"] = c.proper_tail;
    return j;
}

// ---------------------------------------------------------------------------
// Kind handlers.
// ---------------------------------------------------------------------------

namespace detail {

inline void finish_outcome(RunOutput& out, const json& sc, bool violation_found) {
    out.violation = violation_found;
    if (sc.contains("expect") && sc.at("expect").contains("outcome")) {
        std::string want = sc.at("expect").at("outcome").get<std::string>();
        bool match = (want == "violation") == violation_found;
        out.ok = out.ok && match;
    } else {
        out.ok = out.ok && !violation_found;
    }
}

inline RunOutput run_mh_check(const json& sc, std::uint64_t seed, int workers) {
    RunOutput out;
    ClosedSet z = closed_set_from(sc.at("fixture"));
    const auto& p = sc.at("params");
    int m = p.at("m").get<int>();
    double h = p.at("h").get<double>();
    int budget = p.value("budget", 200);

    ProbeSearchReport rep;
    if (p.value("probe", std::string("family")) == "unit-quadratic") {
        // The canonical centered |x|^2 probe alone: closed-form margins.
        TestFunction f = radial_quadratic_probe(z.centroid(), 1.0);
        auto res = mh_test(z, f, m, h);
        rep.margin_tolerance = res.margin_tolerance;
        rep.worst_margin = res.worst_margin;
        rep.best = res.violation;
        rep.probes_run = 1;
    } else {
        rep = probe_search(z, m, h, budget, seed, workers);
    }

    out.verdict["set"] = z.name();
    out.verdict["samples"] = z.samples().size();
    out.verdict["m"] = m;
    out.verdict["h"] = h;
    out.verdict["budget"] = budget;
    out.verdict["probes_run"] = rep.probes_run;
    out.verdict["outcome"] = rep.violation_found() ? "violation" : "pass";
    out.verdict["worst_margin"] = rep.worst_margin;
    out.verdict["margin_tolerance"] = rep.margin_tolerance;
    out.verdict["contract"] = ProbeSearchReport::contract;
    if (rep.best) out.verdict["certificate"] = certificate_json(*rep.best);

    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("margin") && rep.best)
            out.ok = out.ok && approx_ok(rep.best->margin, e.at("margin"));
        if (e.contains("min_margin"))
            out.ok = out.ok && rep.best && rep.best->margin >= e.at("min_margin").get<double>();
        if (e.contains("worst_margin_below_tolerance"))
            out.ok = out.ok && rep.worst_margin <= rep.margin_tolerance;
    }
    finish_outcome(out, sc, rep.violation_found());
    return out;
}

inline RunOutput run_barrier(const json& sc, std::uint64_t, int) {
    RunOutput out;
    ClosedSet z = closed_set_from(sc.at("fixture"));
    Grid g = grid_from(sc.at("grid"));
    ScalarField u = signed_distance_exact(g, sdf_from(sc.at("region")));
    const auto& p = sc.at("params");
    double excess_tol = p.value("excess_tol", -1.0);
    auto rep = barrier_check(z.samples(), u, p.at("m").get<int>(), p.at("h").get<double>(),
                             excess_tol);
    out.verdict["contact"] = rep.contact;
    out.verdict["touching_points"] = rep.rows.size();
    out.verdict["max_excess"] = rep.max_excess;
    out.verdict["tolerance"] = rep.tolerance;
    out.verdict["pass"] = rep.pass();

    bool violation = rep.contact && !rep.pass();
    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("contact")) out.ok = out.ok && rep.contact == e.at("contact").get<bool>();
        if (e.contains("max_excess")) out.ok = out.ok && approx_ok(rep.max_excess, e.at("max_excess"));
        if (e.contains("pass")) out.ok = out.ok && rep.pass() == e.at("pass").get<bool>();
    }
    finish_outcome(out, sc, violation);
    return out;
}

inline RunOutput run_tube(const json& sc, std::uint64_t, int) {
    RunOutput out;
    const auto& p = sc.at("params");
    SpaceFormAmbient ambient{p.value("n", 3), p.at("K").get<double>()};
    Vec kappa0 = p.at("kappa0").is_array() ? io::vec_from(p.at("kappa0"))
                                           : Vec{p.at("kappa0").get<double>()};
    require(static_cast<int>(kappa0.size()) == ambient.n - 1, errc::schema_error,
            "kappa0 length must be n-1");
    double s = p.at("distance").get<double>();
    int m = p.value("m", 1);
    SymMatrix b0 = SymMatrix::diag(kappa0);

    bool expect_blowup = sc.contains("expect") && sc.at("expect").value("blowup", false);
    try {
        RiccatiTrace trace;
        SymMatrix bs = riccati_propagate(b0, ambient, s, &trace);
        EigenSystem es = eigh(bs);
        Vec closed(kappa0.size());
        double max_rel = 0;
        std::sort(kappa0.begin(), kappa0.end());
        for (std::size_t k = 0; k < kappa0.size(); ++k) {
            closed[k] = riccati_closed_form(kappa0[k], ambient.K, s);
            double denom = std::max(1.0, std::abs(closed[k]));
            max_rel = std::max(max_rel, std::abs(es.values[k] - closed[k]) / denom);
        }
        auto cmp = comparison_check(b0, bs, ambient, s, m);

        out.verdict["blowup"] = false;
        out.verdict["eigenvalues"] = io::vec_json(es.values);
        out.verdict["closed_form"] = io::vec_json(closed);
        out.verdict["max_rel_err"] = max_rel;
        out.verdict["comparison"] = {{"per_eigenvalue", cmp.per_eigenvalue},
                                     {"trace_m", cmp.trace_m_bound},
                                     {"full_trace", cmp.full_trace_bound},
                                     {"eigenvalue_slack", cmp.eigenvalue_slack},
                                     {"trace_m_slack", cmp.trace_m_slack},
                                     {"full_trace_slack", cmp.full_trace_slack}};
        std::string csv = "s";
        for (std::size_t k = 0; k < kappa0.size(); ++k) csv += ",k" + std::to_string(k + 1);
        csv += "\n";
        for (std::size_t r = 0; r < trace.distances.size(); ++r) {
            std::vector<double> row{trace.distances[r]};
            for (double kv : trace.eigenvalues[r]) row.push_back(kv);
            csv += io::csv_line(row);
        }
        out.artifacts["trace.csv"] = csv;

        if (sc.contains("expect")) {
            const auto& e = sc.at("expect");
            if (e.contains("max_rel_err"))
                out.ok = out.ok && max_rel <= e.at("max_rel_err").get<double>();
            if (e.contains("comparison_all")) out.ok = out.ok && cmp.all();
            if (expect_blowup) out.ok = false;
        }
        finish_outcome(out, sc, false);
    } catch (const Error& err) {
        if (err.code() != errc::curvature_blowup) throw;
        out.verdict["blowup"] = true;
        out.verdict["blowup_distance"] = err.payload();
        out.ok = expect_blowup;
        out.violation = !expect_blowup;
    }
    return out;
}

inline RunOutput run_varifold_audit(const json& sc, std::uint64_t, int) {
    RunOutput out;
    DiscreteVarifold v = mesh_from(sc.at("fixture"));
    const auto& p = sc.at("params");
    out.verdict["faces"] = v.face_count();
    bool violation = false;

    if (p.contains("mass_in_ball")) {
        const auto& spec = p.at("mass_in_ball");
        double got = mass(v, Region::ball(io::vec_from(spec.at("center")),
                                          spec.at("radius").get<double>()));
        out.verdict["mass_in_ball"] = got;
        if (spec.contains("expect")) {
            bool ok = approx_ok(got, spec.at("expect"));
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    if (p.contains("total_mass")) {
        double got = mass(v, Region::all());
        out.verdict["total_mass"] = got;
        if (p.at("total_mass").contains("expect")) {
            bool ok = approx_ok(got, p.at("total_mass").at("expect"));
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    if (p.contains("boundary_mass")) {
        double got = boundary_mass(v, Region::all());
        out.verdict["boundary_mass"] = got;
        if (p.at("boundary_mass").contains("expect")) {
            bool ok = approx_ok(got, p.at("boundary_mass").at("expect"));
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    if (p.contains("first_variation_radial")) {
        AnalyticVectorField x;
        x.eval = [](const Vec& q) { return (1.0 / norm(q)) * q; };
        x.jacobian = [](const Vec& q) {
            double r = norm(q);
            std::vector<Vec> j(q.size(), Vec(q.size(), 0.0));
            for (std::size_t i = 0; i < q.size(); ++i)
                for (std::size_t k = 0; k < q.size(); ++k)
                    j[i][k] = ((i == k ? 1.0 : 0.0) - q[i] * q[k] / (r * r)) / r;
            return j;
        };
        double got = first_variation(v, x);
        out.verdict["first_variation_radial"] = got;
        if (p.at("first_variation_radial").contains("expect")) {
            bool ok = approx_ok(got, p.at("first_variation_radial").at("expect"));
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    if (p.contains("density")) {
        json rows = json::array();
        for (const auto& q : p.at("density")) {
            auto est = density(v, io::vec_from(q.at("point")), {q.at("radius").get<double>()});
            json row;
            row["point"] = q.at("point");
            row["theta"] = est[0].theta;
            if (q.contains("expect")) {
                bool ok = approx_ok(est[0].theta, q.at("expect"));
                row["ok"] = ok;
                out.ok = out.ok && ok;
                violation = violation || !ok;
            }
            rows.push_back(row);
        }
        out.verdict["density"] = rows;
    }
    if (p.contains("gap_alpha")) {
        const auto& q = p.at("gap_alpha");
        auto rep = gap_alpha_check(v, q.at("alpha").get<double>());
        out.verdict["gap_alpha"] = {{"holds", rep.holds}, {"offenders", rep.offenders.size()}};
        if (q.contains("expect")) {
            bool ok = rep.holds == q.at("expect").get<bool>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    if (p.contains("divergence_audit")) {
        const auto& q = p.at("divergence_audit");
        TestFunction f = radial_quadratic_probe(
            q.contains("center") ? io::vec_from(q.at("center"))
                                 : Vec(static_cast<std::size_t>(v.ambient_dim()), 0.0),
            q.value("coefficient", 0.5));
        auto rep = divergence_bound_audit(v, f);
        double frac = rep.applicable == 0
                          ? 1.0
                          : static_cast<double>(rep.passed) / static_cast<double>(rep.applicable);
        out.verdict["divergence_audit"] = {{"applicable", rep.applicable},
                                           {"passed", rep.passed},
                                           {"fraction", frac}};
        double want = q.value("min_pass_fraction", 0.99);
        bool ok = frac >= want;
        out.ok = out.ok && ok;
        violation = violation || !ok;
    }
    finish_outcome(out, sc, violation);
    return out;
}

inline RunOutput run_blowup(const json& sc, std::uint64_t, int workers) {
    RunOutput out;
    const auto& fam = sc.at("family");
    std::string kind = fam.at("kind").get<std::string>();
    int count = fam.value("count", 10);
    double half = fam.value("half_extent", 1.2);
    int div = fam.value("divisions", 32);

    std::vector<DiscreteVarifold> family;
    for (int i = 1; i <= count; ++i) {
        if (kind == "plane-multiplicity")
            family.push_back(
                fixtures::plane_mesh_uniform(half, div, 0.0, static_cast<double>(i)));
        else if (kind == "bounded-disk")
            family.push_back(fixtures::disk_mesh(1.0, 8, 24));
        else if (kind == "half-plane-weighted")
            family.push_back(fixtures::plane_mesh(half, div, 0.0, [i](const Vec& c) {
                return c[0] <= 0 ? static_cast<double>(i) : 1.0;
            }));
        else
            fail(errc::schema_error, "unknown blowup family: " + kind);
    }

    Grid eval = grid_from(sc.at("grid"));
    double dx = eval.max_dx();
    double r = sc.at("params").value("radius_cells", 1.2) * dx;
    ThresholdSchedule sched;
    sched.base = sc.at("params").value("schedule_base", 0.0);
    if (sc.at("params").contains("schedule_rate_factor"))
        sched.rate = sc.at("params").at("schedule_rate_factor").get<double>() *
                     fixtures::pi * r * r;
    else
        sched.rate = sc.at("params").value("schedule_rate", 1.0);

    auto est = blowup_set(family, r, sched, eval, workers);
    out.verdict["family"] = kind;
    out.verdict["family_size"] = count;
    out.verdict["schedule"] = est.schedule;
    out.verdict["first_index"] = est.first_index;
    out.verdict["resolution"] = est.resolution;
    out.verdict["marked"] = est.points.size();

    // Hausdorff distance to the family's nominal target, in cells.
    double hausdorff = 0.0;
    bool expect_empty = kind == "bounded-disk";
    if (!expect_empty) {
        auto target_dist = [&](const Vec& q) {
            double d_plane = std::abs(q[2]);
            if (kind == "half-plane-weighted")
                return std::max(d_plane, std::max(q[0], 0.0));
            return d_plane;
        };
        double worst_marked = 0;
        for (const auto& q : est.points) worst_marked = std::max(worst_marked, target_dist(q));
        // Coverage direction: every in-window target node within a cell of a mark.
        double worst_cover = 0;
        std::vector<int> idx(3, 0);
        for (std::size_t k = 0; k < eval.count; ++k, eval.advance(idx)) {
            Vec q = eval.position(idx);
            if (!eval.inside_margin(q, r / dx)) continue;
            if (target_dist(q) > 1e-12) continue;
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : est.points) best = std::min(best, norm(m - q));
            worst_cover = std::max(worst_cover, best);
        }
        hausdorff = std::max(worst_marked, worst_cover) / dx;
        out.verdict["hausdorff_cells"] = hausdorff;
    }

    bool violation = false;
    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("empty")) {
            bool ok = est.points.empty() == e.at("empty").get<bool>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("max_hausdorff_cells")) {
            bool ok = !est.points.empty() &&
                      hausdorff <= e.at("max_hausdorff_cells").get<double>() + 1e-9;
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    finish_outcome(out, sc, violation);
    return out;
}

inline RunOutput run_flow(const json& sc, std::uint64_t, int) {
    RunOutput out;
    Grid g = grid_from(sc.at("grid"));
    const auto& p = sc.at("params");
    double h = p.at("h").get<double>();
    const auto& fx = sc.at("fixture");
    Vec center = fx.contains("center") ? io::vec_from(fx.at("center"))
                                       : Vec(static_cast<std::size_t>(g.n), 0.0);
    auto n0 = verify_h_mean_convex(signed_distance_exact(g, sdf_from(fx)), h);
    out.verdict["h"] = h;
    out.verdict["verified_h_mean_convex"] = n0.verification.verified;
    out.verdict["verification_min_excess"] = n0.verification.min_excess;

    std::optional<std::vector<Vec>> obstacle;
    if (sc.contains("obstacle")) {
        const auto& ob = sc.at("obstacle");
        std::string shape = ob.at("shape").get<std::string>();
        if (shape == "segment")
            obstacle = fixtures::sample_segment(io::vec_from(ob.at("a")),
                                                io::vec_from(ob.at("b")), ob.value("spacing", 0.05));
        else if (shape == "sphere")
            obstacle = fixtures::sample_sphere(
                g.n,
                ob.contains("center") ? io::vec_from(ob.at("center"))
                                      : Vec(static_cast<std::size_t>(g.n), 0.0),
                ob.at("radius").get<double>(), ob.value("spacing", 0.08));
        else
            fail(errc::schema_error, "unknown obstacle shape: " + shape);
    }

    FlowOptions opts;
    opts.max_steps = p.value("max_steps", 200000L);
    opts.constrain_obstacle = p.value("constrained", false);
    auto rep = flow_to_limit(n0, h, obstacle ? &*obstacle : nullptr, opts);

    out.verdict["extinct"] = rep.extinct;
    out.verdict["converged"] = rep.converged;
    out.verdict["final_time"] = rep.final_time;
    out.verdict["total_steps"] = rep.total_steps;
    out.verdict["max_inward_crossing"] = rep.max_inward_crossing;
    out.verdict["constrained"] = rep.constrained;
    if (!rep.extinct) {
        double radius = mean_interface_radius(rep.k_infinity, center);
        out.verdict["equilibrium_radius"] = radius;
        out.verdict["volume"] = region_volume(rep.k_infinity);
    }
    if (obstacle) {
        out.verdict["avoidance_pass"] = rep.avoidance.pass;
        out.verdict["initial_obstacle_distance"] = rep.avoidance.initial_distance;
        out.verdict["obstacle_contained"] = rep.obstacle_contained;
    }

    std::string csv = "t,interface_measure,min_dist_to_obstacle,max_kappa\n";
    for (const auto& row : rep.history)
        csv += io::csv_line(
            {row.time, row.interface_measure, row.min_dist_to_obstacle, row.max_kappa});
    out.artifacts["history.csv"] = csv;
    if (!rep.extinct) {
        out.artifacts["kinfinity.json"] = io::field_header(rep.k_infinity).dump(2) + "\n";
        out.artifacts["kinfinity.bin"] = io::field_bytes(rep.k_infinity);
    }

    bool violation = false;
    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("extinct")) {
            bool ok = rep.extinct == e.at("extinct").get<bool>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("extinction_time")) {
            bool ok = rep.extinct && approx_ok(rep.final_time, e.at("extinction_time"));
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("radius")) {
            double abs_cells = e.at("radius").value("abs_tol_cells", 0.0);
            json spec = e.at("radius");
            if (abs_cells > 0) spec["abs_tol"] = abs_cells * g.max_dx();
            bool ok = !rep.extinct &&
                      approx_ok(out.verdict["equilibrium_radius"].get<double>(), spec);
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("avoidance_pass")) {
            bool ok = obstacle && rep.avoidance.pass == e.at("avoidance_pass").get<bool>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("boundary_hausdorff_cells")) {
            // Strong-barrier configuration: the limit boundary stays on the
            // initial boundary sphere.
            double worst = 0;
            auto samples = fixtures::sample_sphere(g.n, center, fx.at("radius").get<double>(),
                                                   0.1);
            for (const auto& z : samples)
                worst = std::max(worst, std::abs(rep.k_infinity.value(z)));
            out.verdict["boundary_hausdorff_cells"] = worst / g.max_dx();
            bool ok = !rep.extinct &&
                      worst / g.max_dx() <= e.at("boundary_hausdorff_cells").get<double>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
    }
    finish_outcome(out, sc, violation);
    return out;
}

inline RunOutput run_distance_set(const json& sc, std::uint64_t seed, int workers) {
    RunOutput out;
    ClosedSet z = closed_set_from(sc.at("fixture"));
    const auto& p = sc.at("params");
    AmbientKind ambient = AmbientKind::flat;
    double bound = 0;
    if (p.contains("ambient")) {
        std::string kind = p.at("ambient").at("kind").get<std::string>();
        if (kind == "space-form") ambient = AmbientKind::space_form;
        else if (kind == "codim1-ricci") ambient = AmbientKind::codim1_ricci;
        else require(kind == "flat", errc::schema_error, "unknown ambient kind: " + kind);
        bound = p.at("ambient").value("bound", 0.0);
    }
    auto rep = distance_enlargement_check(z, p.at("s").get<double>(), p.at("m").get<int>(),
                                          p.at("h").get<double>(), ambient, bound,
                                          p.value("budget", 60), seed, workers,
                                          p.value("lattice_nodes", 25));
    out.verdict["adjusted_h"] = rep.adjusted_h;
    out.verdict["enlarged_samples"] = rep.enlarged_samples;
    out.verdict["outcome"] = rep.probes.violation_found() ? "violation" : "pass";
    out.verdict["worst_margin"] = rep.probes.worst_margin;
    out.verdict["margin_tolerance"] = rep.probes.margin_tolerance;
    if (rep.probes.best) out.verdict["certificate"] = certificate_json(*rep.probes.best);
    if (rep.comparison)
        out.verdict["comparison"] = {{"per_eigenvalue", rep.comparison->per_eigenvalue},
                                     {"trace_m", rep.comparison->trace_m_bound},
                                     {"full_trace", rep.comparison->full_trace_bound}};

    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("min_margin"))
            out.ok = out.ok && rep.probes.best &&
                     rep.probes.best->margin >= e.at("min_margin").get<double>();
        if (e.contains("comparison_all"))
            out.ok = out.ok && rep.comparison && rep.comparison->all();
    }
    finish_outcome(out, sc, rep.probes.violation_found());
    return out;
}

inline RunOutput run_counterexample(const json& sc, std::uint64_t, int) {
    RunOutput out;
    const auto& p = sc.at("params");
    int index = p.value("index", 1);
    auto cx = counterexample_sequence(index, p.value("step", 0.05));
    out.verdict["index"] = index;
    out.verdict["support_hausdorff_to_axis"] = cx.support_hausdorff_to_axis();
    double jump_pos = cx.max_tangent_jump_near(1.0, p.value("jump_window", 0.12));
    double jump_neg = cx.max_tangent_jump_near(-1.0, p.value("jump_window", 0.12));
    out.verdict["tangent_jump_at_plus1"] = jump_pos;
    out.verdict["tangent_jump_at_minus1"] = jump_neg;
    out.verdict["total_mass"] = mass(cx.varifold, Region::all());

    bool violation = false;
    if (sc.contains("expect")) {
        const auto& e = sc.at("expect");
        if (e.contains("max_hausdorff")) {
            bool ok = cx.support_hausdorff_to_axis() <= e.at("max_hausdorff").get<double>();
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("tangent_jump_positive")) {
            bool ok = jump_pos > 0.0 && jump_neg > 0.0;
            out.ok = out.ok && ok;
            violation = violation || !ok;
        }
        if (e.contains("density_points")) {
            json rows = json::array();
            for (const auto& q : e.at("density_points")) {
                double x = q.at("x").get<double>();
                auto est = density(cx.varifold, {x, 0.0}, {q.value("radius", 0.06)});
                bool ok = approx_ok(est[0].theta, q.at("expect"));
                rows.push_back({{"x", x}, {"theta", est[0].theta}, {"ok", ok}});
                out.ok = out.ok && ok;
                violation = violation || !ok;
            }
            out.verdict["density_profile"] = rows;
        }
    }
    finish_outcome(out, sc, violation);
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entry points.
// ---------------------------------------------------------------------------

inline RunOutput run_scenario(const json& sc, std::optional<std::uint64_t> seed_override,
                              int workers) {
    RunOutput out;
    std::string id = "unknown";
    try {
        require(sc.is_object(), errc::schema_error, "scenario must be a JSON object");
        require(sc.contains("id") && sc.contains("kind"), errc::schema_error,
                "scenario needs 'id' and 'kind'");
        id = sc.at("id").get<std::string>();
        std::string kind = sc.at("kind").get<std::string>();
        std::uint64_t seed = seed_override ? *seed_override : sc.value("seed", 0ULL);

        if (kind == "mh-check") out = detail::run_mh_check(sc, seed, workers);
        else if (kind == "barrier") out = detail::run_barrier(sc, seed, workers);
        else if (kind == "tube") out = detail::run_tube(sc, seed, workers);
        else if (kind == "varifold-audit") out = detail::run_varifold_audit(sc, seed, workers);
        else if (kind == "blowup") out = detail::run_blowup(sc, seed, workers);
        else if (kind == "flow") out = detail::run_flow(sc, seed, workers);
        else if (kind == "distance-set") out = detail::run_distance_set(sc, seed, workers);
        else if (kind == "counterexample") out = detail::run_counterexample(sc, seed, workers);
        else fail(errc::schema_error, "unknown scenario kind: " + kind);

        json verdict;
        verdict["scenario"] = id;
        verdict["kind"] = kind;
        verdict["seed"] = seed;
        verdict["ok"] = out.ok;
        for (auto& [key, value] : out.verdict.items()) verdict[key] = value;
        verdict["version"] = tool_version;
        verdict["tolerances"] = tolerance_snapshot();
        out.verdict = std::move(verdict);
    } catch (const std::exception& e) {
        out.error = true;
        out.ok = false;
        out.error_message = e.what();
        out.verdict = json{{"scenario", id}, {"error", e.what()}, {"version", tool_version}};
    }
    return out;
}

}  // namespace mh::scenario
