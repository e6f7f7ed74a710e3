#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mh/curvature.hpp"
#include "mh/errors.hpp"
#include "mh/fields.hpp"
#include "mh/grid.hpp"
#include "mh/tolerances.hpp"

namespace mh {

/// Level-set state of the forced flow: phi < 0 inside K(t), normal velocity
/// kappa - h so mean-convex interfaces move inward.
struct FlowState {
    ScalarField phi;
    double time = 0.0;
    double forcing = 0.0;
    int steps_since_reinit = 0;
    long total_steps = 0;
};

inline double cfl_limit(const Grid& g, double h) {
    double dx = g.max_dx();
    return dx * dx / (2.0 * g.n * (1.0 + h * dx));
}

inline double default_dt(const Grid& g) {
    return tol::cfl_factor * g.max_dx() * g.max_dx() / (2.0 * g.n);
}

/// One explicit step phi += dt (kappa - h) |grad phi|, central differences,
/// curvature clamped at the grid scale. Boundary ring nodes are frozen; the
/// periodic reinitialization repairs them from the interface.
inline FlowState step(const FlowState& state, double dt) {
    const Grid& g = state.phi.grid();
    require(g.n <= 3, errc::invalid_input, "flows run in dimension 2 or 3");
    require(dt > 0 && dt <= cfl_limit(g, state.forcing) + 1e-15, errc::invalid_step,
            "time step violates the parabolic stability bound");

    const auto& in = state.phi.data();
    std::vector<double> out = in;
    const int n = g.n;
    const double kappa_cap = 1.0 / g.max_dx();
    const double floor2 = tol::flow_grad_floor * tol::flow_grad_floor;

    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<std::size_t> stride = g.strides;
    double d1[3], d2[3];
    for (std::size_t k = 0; k < g.count; ++k) {
        bool interior = true;
        for (int a = 0; a < n; ++a) {
            int i = idx[static_cast<std::size_t>(a)];
            if (i < 1 || i > g.shape[static_cast<std::size_t>(a)] - 2) interior = false;
        }
        if (interior) {
            double g2 = 0, lap = 0;
            for (int a = 0; a < n; ++a) {
                double h_a = g.dx[static_cast<std::size_t>(a)];
                double fp = in[k + stride[static_cast<std::size_t>(a)]];
                double fm = in[k - stride[static_cast<std::size_t>(a)]];
                d1[a] = (fp - fm) / (2.0 * h_a);
                d2[a] = (fp - 2.0 * in[k] + fm) / (h_a * h_a);
                g2 += d1[a] * d1[a];
                lap += d2[a];
            }
            double kappa = 0.0;
            if (g2 > floor2) {
                double quad = 0;
                for (int a = 0; a < n; ++a) {
                    quad += d1[a] * d1[a] * d2[a];
                    for (int b = a + 1; b < n; ++b) {
                        double hab = 4.0 * g.dx[static_cast<std::size_t>(a)] *
                                     g.dx[static_cast<std::size_t>(b)];
                        double mixed =
                            (in[k + stride[static_cast<std::size_t>(a)] +
                                stride[static_cast<std::size_t>(b)]] -
                             in[k + stride[static_cast<std::size_t>(a)] -
                                stride[static_cast<std::size_t>(b)]] -
                             in[k - stride[static_cast<std::size_t>(a)] +
                                stride[static_cast<std::size_t>(b)]] +
                             in[k - stride[static_cast<std::size_t>(a)] -
                                stride[static_cast<std::size_t>(b)]]) /
                            hab;
                        quad += 2.0 * d1[a] * d1[b] * mixed;
                    }
                }
                double gn = std::sqrt(g2);
                kappa = (lap * g2 - quad) / (g2 * gn);
                kappa = std::max(-kappa_cap, std::min(kappa, kappa_cap));
                out[k] = in[k] + dt * (kappa - state.forcing) * gn;
            }
        }
        g.advance(idx);
    }

    FlowState next;
    next.phi = ScalarField(g, std::move(out), state.phi.policy());
    next.time = state.time + dt;
    next.forcing = state.forcing;
    next.steps_since_reinit = state.steps_since_reinit + 1;
    next.total_steps = state.total_steps + 1;
    return next;
}

/// Redistances phi; an empty zero set, or a region everywhere shallower than
/// a cell (below grid resolution), reports extinction instead of a field.
inline std::optional<FlowState> reinitialize(const FlowState& state) {
    bool neg = false, pos = false;
    for (double v : state.phi.data()) {
        if (v < 0) neg = true;
        if (v > 0) pos = true;
    }
    if (!neg || !pos) return std::nullopt;  // FlowExtinct
    FlowState next = state;
    next.phi = signed_distance(state.phi);
    next.steps_since_reinit = 0;
    double deepest = 0;
    for (double v : next.phi.data()) deepest = std::min(deepest, v);
    if (deepest > -0.75 * state.phi.grid().max_dx()) return std::nullopt;
    return next;
}

inline double smoothed_heaviside(double x, double eps) {
    if (x <= -eps) return 1.0;
    if (x >= eps) return 0.0;
    return 0.5 * (1.0 - x / eps - std::sin(3.141592653589793 * x / eps) / 3.141592653589793);
}

/// Volume of { phi < 0 } by a smoothed indicator.
inline double region_volume(const ScalarField& phi) {
    const Grid& g = phi.grid();
    double eps = 1.5 * g.max_dx();
    double cell = 1.0;
    for (int a = 0; a < g.n; ++a) cell *= g.dx[static_cast<std::size_t>(a)];
    double v = 0;
    for (double x : phi.data()) v += smoothed_heaviside(x, eps);
    return v * cell;
}

/// Largest |kappa| over interface-band nodes (clamped at the grid scale,
/// like the step itself).
inline double max_band_curvature(const ScalarField& phi) {
    const Grid& g = phi.grid();
    const auto& v = phi.data();
    const double cell = g.max_dx();
    const double cap = 1.0 / cell;
    const double floor2 = tol::flow_grad_floor * tol::flow_grad_floor;
    double worst = 0;
    std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
    double d1[3], d2[3];
    for (std::size_t k = 0; k < g.count; ++k, g.advance(idx)) {
        if (std::abs(v[k]) > 2 * cell) continue;
        bool interior = true;
        for (int a = 0; a < g.n; ++a)
            if (idx[static_cast<std::size_t>(a)] < 1 ||
                idx[static_cast<std::size_t>(a)] > g.shape[static_cast<std::size_t>(a)] - 2)
                interior = false;
        if (!interior) continue;
        double g2 = 0, lap = 0;
        for (int a = 0; a < g.n; ++a) {
            double h_a = g.dx[static_cast<std::size_t>(a)];
            double fp = v[k + g.strides[static_cast<std::size_t>(a)]];
            double fm = v[k - g.strides[static_cast<std::size_t>(a)]];
            d1[a] = (fp - fm) / (2.0 * h_a);
            d2[a] = (fp - 2.0 * v[k] + fm) / (h_a * h_a);
            g2 += d1[a] * d1[a];
            lap += d2[a];
        }
        if (g2 <= floor2) continue;
        double quad = 0;
        for (int a = 0; a < g.n; ++a) {
            quad += d1[a] * d1[a] * d2[a];
            for (int b = a + 1; b < g.n; ++b) {
                double hab =
                    4.0 * g.dx[static_cast<std::size_t>(a)] * g.dx[static_cast<std::size_t>(b)];
                double mixed = (v[k + g.strides[static_cast<std::size_t>(a)] +
                                  g.strides[static_cast<std::size_t>(b)]] -
                                v[k + g.strides[static_cast<std::size_t>(a)] -
                                  g.strides[static_cast<std::size_t>(b)]] -
                                v[k - g.strides[static_cast<std::size_t>(a)] +
                                  g.strides[static_cast<std::size_t>(b)]] +
                                v[k - g.strides[static_cast<std::size_t>(a)] -
                                  g.strides[static_cast<std::size_t>(b)]]) /
                               hab;
                quad += 2.0 * d1[a] * d1[b] * mixed;
            }
        }
        double kappa = (lap * g2 - quad) / (g2 * std::sqrt(g2));
        worst = std::max(worst, std::min(std::abs(kappa), cap));
    }
    return worst;
}

/// Surface measure of { phi = 0 } by a smoothed delta against |grad phi|.
inline double interface_measure(const ScalarField& phi) {
    const Grid& g = phi.grid();
    double eps = 1.5 * g.max_dx();
    double cell = 1.0;
    for (int a = 0; a < g.n; ++a) cell *= g.dx[static_cast<std::size_t>(a)];
    const auto& v = phi.data();
    double total = 0;
    std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
    for (std::size_t k = 0; k < g.count; ++k) {
        bool interior = true;
        for (int a = 0; a < g.n; ++a)
            if (idx[static_cast<std::size_t>(a)] < 1 ||
                idx[static_cast<std::size_t>(a)] > g.shape[static_cast<std::size_t>(a)] - 2)
                interior = false;
        if (interior && std::abs(v[k]) < eps) {
            double delta =
                0.5 / eps * (1.0 + std::cos(3.141592653589793 * v[k] / eps));
            double g2 = 0;
            for (int a = 0; a < g.n; ++a) {
                double d = (v[k + g.strides[static_cast<std::size_t>(a)]] -
                            v[k - g.strides[static_cast<std::size_t>(a)]]) /
                           (2.0 * g.dx[static_cast<std::size_t>(a)]);
                g2 += d * d;
            }
            total += delta * std::sqrt(g2);
        }
        g.advance(idx);
    }
    return total * cell;
}

// ---------------------------------------------------------------------------
// h-mean-convex regions.
// ---------------------------------------------------------------------------

struct ConvexityVerification {
    bool verified = false;
    double min_excess = 0.0;  // min over samples of H - h
    std::size_t samples = 0;
};

struct HMeanConvexRegion {
    ScalarField sdf;  // negative inside N
    double h = 0.0;
    ConvexityVerification verification;
};

/// Samples boundary-band nodes and checks H (sum of all principal
/// curvatures, inward convention) >= h - tol.
inline HMeanConvexRegion verify_h_mean_convex(ScalarField sdf, double h, double slack = -1.0) {
    const Grid& g = sdf.grid();
    double cell = g.max_dx();
    if (slack < 0) slack = 0.05 * std::max(std::abs(h), 1.0 / norm(g.hi - g.lo));
    ConvexityVerification ver;
    ver.min_excess = std::numeric_limits<double>::infinity();

    std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
    std::size_t stridep = std::max<std::size_t>(1, g.count / 40000);
    for (std::size_t k = 0; k < g.count; ++k, g.advance(idx)) {
        if (k % stridep) continue;
        if (std::abs(sdf.node(k)) > 0.5 * cell) continue;
        Vec p = g.position(idx);
        if (!g.inside_margin(p, 2.5)) continue;
        auto curv = level_set_curvatures(sdf, p);
        double big_h = 0;
        for (double kp : curv.kappa.values) big_h += kp;
        ver.min_excess = std::min(ver.min_excess, big_h - h);
        ++ver.samples;
    }
    require(ver.samples > 0, errc::invalid_setup, "no boundary samples found");
    ver.verified = ver.min_excess >= -slack;
    return HMeanConvexRegion{std::move(sdf), h, ver};
}

// ---------------------------------------------------------------------------
// Avoidance monitoring.
// ---------------------------------------------------------------------------

struct AvoidanceSeries {
    std::vector<double> times;
    std::vector<double> distances;
    double initial_distance = 0;
    bool pass = true;
};

/// Tracks the minimum distance from the interface to a fixed obstacle; the
/// verdict fails if the interface approaches by more than one cell.
class AvoidanceMonitor {
public:
    AvoidanceMonitor(std::vector<Vec> obstacle, const ScalarField& phi0)
        : obstacle_(std::move(obstacle)) {
        double cell = phi0.grid().max_dx();
        series_.initial_distance = min_distance(phi0);
        require(series_.initial_distance >= 2.0 * cell, errc::invalid_setup,
                "obstacle not separated from the initial interface by two cells");
        record(0.0, phi0);
    }

    void record(double t, const ScalarField& phi) {
        double d = min_distance(phi);
        series_.times.push_back(t);
        series_.distances.push_back(d);
        if (d < series_.initial_distance - phi.grid().max_dx()) series_.pass = false;
    }

    const AvoidanceSeries& series() const { return series_; }

private:
    double min_distance(const ScalarField& phi) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& z : obstacle_) best = std::min(best, std::abs(phi.value(z)));
        return best;
    }

    std::vector<Vec> obstacle_;
    AvoidanceSeries series_;
};

/// Offline form over a recorded run.
inline AvoidanceSeries avoidance_monitor(const std::vector<FlowState>& history,
                                         const std::vector<Vec>& obstacle) {
    require(!history.empty(), errc::invalid_setup, "empty history");
    AvoidanceMonitor mon(obstacle, history.front().phi);
    for (std::size_t k = 1; k < history.size(); ++k)
        mon.record(history[k].time, history[k].phi);
    return mon.series();
}

// ---------------------------------------------------------------------------
// Flow to the limit region.
// ---------------------------------------------------------------------------

struct FlowStepRow {
    double time;
    double interface_measure;
    double min_dist_to_obstacle;  // NaN when no obstacle
    double max_kappa;
};

struct FlowLimitReport {
    bool extinct = false;
    bool converged = false;
    double final_time = 0;
    long total_steps = 0;
    ScalarField k_infinity;  // valid when not extinct
    std::vector<FlowStepRow> history;
    AvoidanceSeries avoidance;  // empty when no obstacle
    bool obstacle_given = false;
    bool constrained = false;
    bool obstacle_contained = true;   // Z subset of K_infinity, when given
    double max_inward_crossing = 0.0; // worst outside-to-inside jump, length units
};

struct FlowOptions {
    double dt = 0;                   // 0: default CFL fraction
    long max_steps = 200000;
    double stop_displacement_cells = tol::limit_displacement_cells;
    int window = tol::limit_window_steps;
    bool constrain_obstacle = false; // clip phi against the obstacle distance
    int record_every = 10;
};

/// Runs the forced flow from a verified h-mean-convex region until the
/// interface settles, goes extinct, or the step budget runs out. Nesting is
/// enforced: a node jumping from clearly outside to clearly inside aborts.
inline FlowLimitReport flow_to_limit(const HMeanConvexRegion& n0, double h,
                                     const std::vector<Vec>* obstacle = nullptr,
                                     const FlowOptions& opts = {}) {
    require(n0.verification.verified, errc::invalid_setup,
            "initial region failed h-mean-convex verification");
    const Grid& g = n0.sdf.grid();
    const double cell = g.max_dx();

    FlowState state{n0.sdf, 0.0, h, 0, 0};
    FlowLimitReport rep;
    rep.obstacle_given = obstacle != nullptr;
    rep.constrained = opts.constrain_obstacle && obstacle;

    std::optional<AvoidanceMonitor> monitor;
    std::vector<double> obstacle_dist;  // distance field to the obstacle samples
    if (obstacle) {
        monitor.emplace(*obstacle, state.phi);
        if (opts.constrain_obstacle) {
            obstacle_dist.resize(g.count);
            std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
            for (std::size_t k = 0; k < g.count; ++k, g.advance(idx)) {
                Vec p = g.position(idx);
                double best = std::numeric_limits<double>::infinity();
                for (const auto& z : *obstacle) best = std::min(best, norm(p - z));
                obstacle_dist[k] = best;
            }
        }
    }

    double dt = opts.dt > 0 ? opts.dt : default_dt(g);
    ScalarField window_ref = state.phi;
    long window_start = 0;

    auto record_row = [&](const FlowState& s) {
        FlowStepRow row;
        row.time = s.time;
        row.interface_measure = interface_measure(s.phi);
        row.min_dist_to_obstacle =
            monitor ? monitor->series().distances.back() : std::numeric_limits<double>::quiet_NaN();
        row.max_kappa = max_band_curvature(s.phi);
        rep.history.push_back(row);
    };

    record_row(state);
    for (long it = 0; it < opts.max_steps; ++it) {
        FlowState next = step(state, dt);

        // Nesting: outside nodes must not jump inside.
        const auto& before = state.phi.data();
        const auto& after = next.phi.data();
        for (std::size_t k = 0; k < g.count; ++k) {
            if (before[k] > 1e-12 && after[k] < -1e-12) {
                double jump = std::min(before[k], -after[k]);
                rep.max_inward_crossing = std::max(rep.max_inward_crossing, jump);
                if (jump > cell)
                    fail(errc::nesting_fault, "interface crossed inward by more than a cell",
                         jump);
            }
        }

        if (opts.constrain_obstacle && obstacle) {
            auto& data = next.phi.data();
            for (std::size_t k = 0; k < g.count; ++k)
                data[k] = std::min(data[k], obstacle_dist[k] - cell);
        }

        state = std::move(next);

        if (state.steps_since_reinit >= tol::reinit_every) {
            auto re = reinitialize(state);
            if (!re) {
                rep.extinct = true;
                rep.final_time = state.time;
                rep.total_steps = state.total_steps;
                if (monitor) rep.avoidance = monitor->series();
                rep.obstacle_contained = !obstacle;
                return rep;
            }
            state = std::move(*re);

            // Convergence is judged between post-reinit snapshots only, so
            // the systematic redistancing offset cancels and the comparison
            // sees actual interface motion.
            if (state.total_steps - window_start >= opts.window) {
                double disp = 0;
                const auto& now = state.phi.data();
                const auto& ref = window_ref.data();
                for (std::size_t k = 0; k < g.count; ++k)
                    if (std::abs(now[k]) < 5 * cell)
                        disp = std::max(disp, std::abs(now[k] - ref[k]));
                if (disp < opts.stop_displacement_cells * cell) {
                    rep.converged = true;
                    if (monitor) monitor->record(state.time, state.phi);
                    break;
                }
                window_ref = state.phi;
                window_start = state.total_steps;
            }
        }

        if (monitor) monitor->record(state.time, state.phi);
        if (state.total_steps % opts.record_every == 0) record_row(state);
    }

    // Final reinitialization for a clean distance field.
    auto fin = reinitialize(state);
    if (!fin) {
        rep.extinct = true;
        rep.final_time = state.time;
        rep.total_steps = state.total_steps;
        if (monitor) rep.avoidance = monitor->series();
        rep.obstacle_contained = !obstacle;
        return rep;
    }
    state = std::move(*fin);

    rep.final_time = state.time;
    rep.total_steps = state.total_steps;
    rep.k_infinity = state.phi;
    if (monitor) rep.avoidance = monitor->series();
    if (obstacle) {
        for (const auto& z : *obstacle)
            if (state.phi.value(z) > cell) rep.obstacle_contained = false;
    }
    return rep;
}

/// Radius of a near-spherical region from its volume.
inline double equivalent_radius(const ScalarField& phi) {
    double v = region_volume(phi);
    int n = phi.grid().n;
    if (n == 2) return std::sqrt(v / 3.141592653589793);
    return std::cbrt(v / (4.0 / 3.0 * 3.141592653589793));
}

/// Mean distance from a center to the interface, measured at axis-aligned
/// zero crossings. Unbiased for near-spherical interfaces down to a few
/// cells, unlike the volume route.
inline double mean_interface_radius(const ScalarField& phi, const Vec& center) {
    const Grid& g = phi.grid();
    const auto& v = phi.data();
    double sum = 0;
    std::size_t cnt = 0;
    std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
    for (std::size_t k = 0; k < g.count; ++k, g.advance(idx)) {
        for (int a = 0; a < g.n; ++a) {
            if (idx[static_cast<std::size_t>(a)] >= g.shape[static_cast<std::size_t>(a)] - 1)
                continue;
            double f0 = v[k];
            double f1 = v[k + g.strides[static_cast<std::size_t>(a)]];
            if ((f0 < 0) == (f1 < 0)) continue;
            double frac = std::abs(f0) / (std::abs(f0) + std::abs(f1));
            Vec p = g.position(idx);
            p[static_cast<std::size_t>(a)] += frac * g.dx[static_cast<std::size_t>(a)];
            sum += norm(p - center);
            ++cnt;
        }
    }
    require(cnt > 0, errc::flow_extinct, "no interface crossings");
    return sum / static_cast<double>(cnt);
}

}  // namespace mh
