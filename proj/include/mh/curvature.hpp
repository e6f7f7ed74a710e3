#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mh/errors.hpp"
#include "mh/fields.hpp"
#include "mh/linalg.hpp"
#include "mh/probe.hpp"
#include "mh/tolerances.hpp"

namespace mh {

/// Constant-curvature ambient. The Riccati tube equation closes here because
/// R(., nu, ., nu) = K g on the normal complement.
struct SpaceFormAmbient {
    int n = 3;       // ambient dimension
    double K = 0.0;  // sectional curvature
    double ricci_lower() const { return (n - 1) * K; }
};

struct PrincipalCurvatures {
    Vec values;  // ascending, with respect to the unit normal pointing into N

    double sum_smallest(int m) const {
        require(m >= 1 && m <= static_cast<int>(values.size()), errc::invalid_input,
                "m out of range");
        double s = 0;
        for (int k = 0; k < m; ++k) s += values[static_cast<std::size_t>(k)];
        return s;
    }
};

struct SecondFundamentalForm {
    SymMatrix form;                  // on the tangent space, dim n-1
    std::vector<Vec> tangent_basis;  // ambient representatives of the frame

    PrincipalCurvatures principal() const {
        return PrincipalCurvatures{eigh(form).values};
    }
};

struct LevelSetCurvatureResult {
    PrincipalCurvatures kappa;
    SecondFundamentalForm second_form;
    Vec inward_normal;
};

/// Principal curvatures of the level set of a signed distance field at p,
/// with u < 0 inside the region. The Hessian eigen-direction aligned with
/// grad u carries the (numerically near-zero) normal eigenvalue and is
/// discarded; the remaining directions span the tangent frame.
inline LevelSetCurvatureResult level_set_curvatures(const ScalarField& u, const Vec& p) {
    Vec du = gradient(u, p);
    double g = norm(du);
    require(g >= 0.5, errc::degenerate_gradient,
            "gradient too small at query point: |grad u| = " + g17(g));
    const int n = u.grid().n;
    Vec nu = (-1.0 / g) * du;  // points into the region

    SymMatrix h = hessian(u, p);
    EigenSystem es = eigh(h);

    // Identify the normal direction among the eigenvectors.
    int normal_idx = 0;
    double best = -1;
    for (int k = 0; k < n; ++k) {
        double a = std::abs(dot(es.columns[static_cast<std::size_t>(k)], nu));
        if (a > best) {
            best = a;
            normal_idx = k;
        }
    }

    // Tangent frame: remaining eigenvectors, projected off nu and
    // re-orthonormalized in a fixed order.
    std::vector<Vec> basis;
    for (int k = 0; k < n; ++k) {
        if (k == normal_idx) continue;
        Vec t = es.columns[static_cast<std::size_t>(k)];
        t = t - dot(t, nu) * nu;
        for (const auto& b : basis) t = t - dot(t, b) * b;
        double len = norm(t);
        if (len > 1e-10) basis.push_back((1.0 / len) * t);
    }
    require(static_cast<int>(basis.size()) == n - 1, errc::degenerate_gradient,
            "tangent frame collapsed");

    SymMatrix b(n - 1);
    for (int a = 0; a < n - 1; ++a)
        for (int c = a; c < n - 1; ++c)
            b.set(a, c, dot(basis[static_cast<std::size_t>(a)],
                            h.apply(basis[static_cast<std::size_t>(c)])));

    LevelSetCurvatureResult out;
    out.second_form = SecondFundamentalForm{b, basis};
    out.kappa = out.second_form.principal();
    out.inward_normal = nu;
    return out;
}

inline ScalarField negated(const ScalarField& f) {
    std::vector<double> v = f.data();
    for (double& x : v) x = -x;
    return ScalarField(f.grid(), std::move(v), f.policy());
}

// ---------------------------------------------------------------------------
// Barrier contact check.
// ---------------------------------------------------------------------------

struct BarrierTouchRow {
    Vec point;
    Vec kappas;
    double h_m;
    double excess;
};

struct BarrierCheckReport {
    bool contact = false;
    double max_excess = 0.0;
    double tolerance = 0.0;
    std::vector<BarrierTouchRow> rows;

    bool pass() const { return !contact || max_excess <= tolerance; }
};

/// For each sample of Z within one cell of the boundary of N (given by its
/// signed distance field), sums the m smallest principal curvatures and
/// compares against h. Z must lie in N up to grid tolerance. The default
/// excess tolerance is the margin scale of the box; fixtures with known
/// discretization error pass a wider one.
inline BarrierCheckReport barrier_check(const std::vector<Vec>& z_samples, const ScalarField& u,
                                        int m, double h, double excess_tolerance = -1.0) {
    require(!z_samples.empty(), errc::empty_set, "no samples in Z");
    const double cell = u.grid().max_dx();
    BarrierCheckReport rep;
    rep.tolerance = excess_tolerance >= 0
                        ? excess_tolerance
                        : tol::margin_rel / std::max(norm(u.grid().hi - u.grid().lo), 1e-12);

    for (const auto& z : z_samples)
        require(u.value(z) <= tol::touching_band_cells * cell + 1e-12, errc::invalid_input,
                "Z leaves the region N");

    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (const auto& z : z_samples) {
        if (std::abs(u.value(z)) > tol::touching_band_cells * cell) continue;
        auto curv = level_set_curvatures(u, z);
        BarrierTouchRow row;
        row.point = z;
        row.kappas = curv.kappa.values;
        row.h_m = curv.kappa.sum_smallest(m);
        row.excess = row.h_m - h;
        rep.max_excess = std::max(rep.max_excess, row.excess);
        rep.rows.push_back(row);
        rep.contact = true;
    }
    if (!rep.contact) rep.max_excess = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Riccati propagation in space forms.
// ---------------------------------------------------------------------------

/// Scalar closed form of k' = K + k^2. Throws CurvatureBlowup with the
/// blow-up distance when the solution escapes before s.
inline double riccati_closed_form(double k0, double K, double s) {
    if (K == 0.0) {
        if (k0 > 0 && s >= 1.0 / k0)
            fail(errc::curvature_blowup, "flat Riccati blow-up", 1.0 / k0);
        return k0 / (1.0 - s * k0);
    }
    if (K > 0.0) {
        double rk = std::sqrt(K);
        double phase = std::atan(k0 / rk);
        double blow = (1.5707963267948966 - phase) / rk;
        if (s >= blow) fail(errc::curvature_blowup, "spherical Riccati blow-up", blow);
        return rk * std::tan(rk * s + phase);
    }
    double k = std::sqrt(-K);
    if (k0 > k) {
        double blow = std::atanh(k / k0) / k;
        if (s >= blow) fail(errc::curvature_blowup, "hyperbolic Riccati blow-up", blow);
    }
    double th = std::tanh(k * s);
    return k * (k0 - k * th) / (k - k0 * th);
}

struct RiccatiTrace {
    std::vector<double> distances;
    std::vector<Vec> eigenvalues;  // ascending per row
};

/// Integrates B' = K I + B^2 with classical fourth-order steps. In a space
/// form the flow preserves the initial eigenbasis, so the closed form above
/// serves as an independent cross-check per eigenvalue.
inline SymMatrix riccati_propagate(const SymMatrix& b0, const SpaceFormAmbient& ambient, double s,
                                   RiccatiTrace* trace = nullptr) {
    require(s >= 0, errc::invalid_input, "propagation distance must be nonnegative");
    require(b0.dim() == ambient.n - 1, errc::invalid_input,
            "form dimension must be ambient dimension minus one");
    const double hstep = std::min(tol::riccati_max_step, s / 100.0);
    const int n = b0.dim();

    auto rhs = [&](const SymMatrix& b) {
        SymMatrix r(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double sq = 0;
                for (int k = 0; k < n; ++k) sq += b(i, k) * b(k, j);
                r.set(i, j, (i == j ? ambient.K : 0.0) + sq);
            }
        return r;
    };

    auto check_magnitude = [&](const SymMatrix& b, double at) {
        EigenSystem es = eigh(b);
        double mag = std::max(std::abs(es.values.front()), std::abs(es.values.back()));
        if (mag > tol::blowup_kappa)
            fail(errc::curvature_blowup, "curvature magnitude exceeded blow-up threshold", at);
        return es;
    };

    SymMatrix b = b0;
    double t = 0;
    if (trace) {
        trace->distances.push_back(0.0);
        trace->eigenvalues.push_back(eigh(b0).values);
    }
    if (s == 0) return b;
    int steps = static_cast<int>(std::ceil(s / hstep));
    double hs = s / steps;
    for (int k = 0; k < steps; ++k) {
        SymMatrix k1 = rhs(b);
        SymMatrix k2 = rhs(b + (0.5 * hs) * k1);
        SymMatrix k3 = rhs(b + (0.5 * hs) * k2);
        SymMatrix k4 = rhs(b + hs * k3);
        b = b + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += hs;
        EigenSystem es = check_magnitude(b, t);
        if (trace) {
            trace->distances.push_back(t);
            trace->eigenvalues.push_back(es.values);
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// Eigenvalue comparison along normal geodesics.
// ---------------------------------------------------------------------------

struct ComparisonReport {
    bool per_eigenvalue = false;
    bool trace_m_bound = false;
    bool full_trace_bound = false;
    double eigenvalue_slack = 0.0;  // min over k
    double trace_m_slack = 0.0;
    double full_trace_slack = 0.0;

    bool all() const { return per_eigenvalue && trace_m_bound && full_trace_bound; }
};

/// The three displayed inequalities comparing curvatures at distance d:
/// per-eigenvalue with K d, Trace_m with m K d, full trace with rho d.
inline ComparisonReport comparison_check(const SymMatrix& b_p, const SymMatrix& b_q,
                                         const SpaceFormAmbient& ambient, double d, int m) {
    require(d > 0, errc::invalid_input, "distance must be positive");
    require(b_p.dim() == b_q.dim(), errc::invalid_input, "dim mismatch");
    require(m >= 1 && m <= b_p.dim(), errc::invalid_input, "m out of range");
    EigenSystem ep = eigh(b_p);
    EigenSystem eq = eigh(b_q);
    const int n = b_p.dim();
    double scale = std::max({1.0, b_p.frobenius(), b_q.frobenius()});
    double slack_tol = tol::dominance_slack * scale;

    ComparisonReport rep;
    rep.eigenvalue_slack = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k)
        rep.eigenvalue_slack =
            std::min(rep.eigenvalue_slack, eq.values[static_cast<std::size_t>(k)] -
                                               ep.values[static_cast<std::size_t>(k)] -
                                               ambient.K * d);
    double tm_p = 0, tm_q = 0;
    for (int k = 0; k < m; ++k) {
        tm_p += ep.values[static_cast<std::size_t>(k)];
        tm_q += eq.values[static_cast<std::size_t>(k)];
    }
    rep.trace_m_slack = tm_q - tm_p - m * ambient.K * d;
    rep.full_trace_slack = b_q.trace() - b_p.trace() - ambient.ricci_lower() * d;

    rep.per_eigenvalue = rep.eigenvalue_slack >= -slack_tol;
    rep.trace_m_bound = rep.trace_m_slack >= -slack_tol;
    rep.full_trace_bound = rep.full_trace_slack >= -slack_tol;
    return rep;
}

/// Near-cut-locus preparation: shrink curvatures toward zero before
/// propagating, mirroring the strict-containment smoothing trick.
inline SymMatrix shrink_for_propagation(const SymMatrix& b, double length_scale) {
    double eps = tol::cut_locus_shrink_rel / std::max(length_scale, 1e-12);
    EigenSystem es = eigh(b);
    SymMatrix out(b.dim());
    for (int k = 0; k < b.dim(); ++k) {
        double v = es.values[static_cast<std::size_t>(k)];
        double shrunk = v - (v > 0 ? eps : (v < 0 ? -eps : 0.0));
        if (v > 0) shrunk = std::max(shrunk, 0.0);
        if (v < 0) shrunk = std::min(shrunk, 0.0);
        for (int i = 0; i < b.dim(); ++i)
            for (int j = 0; j < b.dim(); ++j)
                out(i, j) += shrunk * es.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                             es.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Converse construction: sublevel region through a violation point.
// ---------------------------------------------------------------------------

struct ConverseBarrierResult {
    ScalarField region_sdf;  // signed distance of N = { f <= f(p) }, negative inside
    double h_m;              // sum of the m smallest principal curvatures at p
    Vec kappas;
    double normalization;  // the |Df(p)| divided out
};

/// Builds N = { f <= f(p) } from a normalized violating test function,
/// verifies Z stays inside, and reports H_m(boundary, p).
inline ConverseBarrierResult converse_barrier_build(const std::vector<Vec>& z_samples,
                                                    const Vec& p, const TestFunction& f, int m,
                                                    double h, const Grid& grid) {
    double gn = norm(f.grad(p));
    require(gn > tol::grad_floor, errc::invalid_input,
            "gradient vanishes at p; perturb the test function first");
    double margin = trace_m(f.hess(p), m) - h * gn;
    require(margin > 0, errc::invalid_input,
            "no violation margin at p: margin = " + g17(margin));

    TestFunction fn = f.scaled(1.0 / gn);
    double level = fn.value(p);
    const double cell = grid.max_dx();
    for (const auto& z : z_samples) {
        if (fn.value(z) > level + cell)
            fail(errc::containment_failure, "Z escapes the sublevel region N");
    }

    ScalarField phi = ScalarField::sample(grid, [&](const Vec& x) { return fn.value(x) - level; });
    ScalarField u = signed_distance(phi);

    // Principal curvatures of { f = f(p) } straight from the derivative
    // adapters: tangential Hessian over gradient norm. The redistanced field
    // is returned for region queries but carries interface bias for strongly
    // nonlinear level functions, so it is not used for the curvatures.
    Vec df = fn.grad(p);
    double gnorm = norm(df);
    Vec nu_out = (1.0 / gnorm) * df;
    SymMatrix d2f = fn.hess(p);
    const int n = grid.n;
    std::vector<Vec> frame;
    for (int axis = 0; axis < n && static_cast<int>(frame.size()) < n - 1; ++axis) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(axis)] = 1.0;
        Vec t = e - dot(e, nu_out) * nu_out;
        for (const auto& b : frame) t = t - dot(t, b) * b;
        double len = norm(t);
        if (len > 1e-8) frame.push_back((1.0 / len) * t);
    }
    require(static_cast<int>(frame.size()) == n - 1, errc::invalid_input,
            "could not build a tangent frame at p");
    SymMatrix b(n - 1);
    for (int a = 0; a < n - 1; ++a)
        for (int c = a; c < n - 1; ++c)
            b.set(a, c, dot(frame[static_cast<std::size_t>(a)],
                            d2f.apply(frame[static_cast<std::size_t>(c)])) /
                            gnorm);
    EigenSystem eb = eigh(b);

    ConverseBarrierResult out;
    out.region_sdf = std::move(u);
    out.kappas = eb.values;
    out.h_m = 0;
    for (int k = 0; k < m; ++k) out.h_m += eb.values[static_cast<std::size_t>(k)];
    out.normalization = gn;
    return out;
}

}  // namespace mh
