#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mh/curvature.hpp"
#include "mh/errors.hpp"
#include "mh/fields.hpp"
#include "mh/fixtures.hpp"
#include "mh/linalg.hpp"
#include "mh/probe.hpp"
#include "mh/rng.hpp"
#include "mh/tolerances.hpp"
#include "mh/util.hpp"
#include "mh/varifold.hpp"

namespace mh {

// ---------------------------------------------------------------------------
// Closed sets as finite samples with a resolution radius.
// ---------------------------------------------------------------------------

/// A closed set represented by samples at a known resolution. Sets clipped
/// out of an unbounded fixture carry the clip window; restricted maxima at
/// the window rim are sampling artifacts and are excluded.
class ClosedSet {
public:
    static ClosedSet point_cloud(std::vector<Vec> samples, double resolution,
                                 std::string name = "cloud") {
        require(!samples.empty(), errc::empty_set, "empty sample set");
        require(resolution > 0, errc::invalid_input, "resolution must be positive");
        ClosedSet z;
        z.samples_ = std::move(samples);
        z.resolution_ = resolution;
        z.name_ = std::move(name);
        z.n_ = static_cast<int>(z.samples_.front().size());
        z.build_index();
        return z;
    }

    static ClosedSet singleton(Vec p, double resolution) {
        return point_cloud({std::move(p)}, resolution, "singleton");
    }

    /// Marks the samples as a window clip of an unbounded set; local maxima
    /// within 3 resolutions of the window faces are discarded.
    ClosedSet& clip_window(Vec lo, Vec hi) {
        clip_lo_ = std::move(lo);
        clip_hi_ = std::move(hi);
        return *this;
    }

    int dim() const { return n_; }
    double resolution() const { return resolution_; }
    const std::vector<Vec>& samples() const { return samples_; }
    const std::string& name() const { return name_; }
    bool clipped() const { return !clip_lo_.empty(); }

    bool near_clip_rim(const Vec& p) const {
        if (clip_lo_.empty()) return false;
        double band = 3.0 * resolution_;
        for (std::size_t a = 0; a < p.size(); ++a)
            if (p[a] < clip_lo_[a] + band || p[a] > clip_hi_[a] - band) return true;
        return false;
    }

    Vec centroid() const {
        Vec c(static_cast<std::size_t>(n_), 0.0);
        for (const auto& p : samples_) c = c + p;
        return (1.0 / static_cast<double>(samples_.size())) * c;
    }

    double bounding_radius() const {
        Vec c = centroid();
        double r = 0;
        for (const auto& p : samples_) r = std::max(r, norm(p - c));
        return r;
    }

    /// Length scale used for margin tolerances.
    double length_scale() const { return std::max(2.0 * bounding_radius(), resolution_); }

    /// Indices of samples within `radius` of p.
    template <typename Fn>
    void for_neighbors(const Vec& p, double radius, Fn&& fn) const {
        std::vector<long> lo(static_cast<std::size_t>(n_)), hi(static_cast<std::size_t>(n_));
        for (int a = 0; a < n_; ++a) {
            lo[static_cast<std::size_t>(a)] = cell_coord(p[static_cast<std::size_t>(a)] - radius);
            hi[static_cast<std::size_t>(a)] = cell_coord(p[static_cast<std::size_t>(a)] + radius);
        }
        std::vector<long> it = lo;
        for (;;) {
            auto bucket = index_.find(it);
            if (bucket != index_.end())
                for (std::size_t k : bucket->second)
                    if (norm(samples_[k] - p) <= radius) fn(k);
            int a = n_ - 1;
            for (; a >= 0; --a) {
                if (++it[static_cast<std::size_t>(a)] <= hi[static_cast<std::size_t>(a)]) break;
                it[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)];
            }
            if (a < 0) break;
        }
    }

    double min_distance(const Vec& p) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& z : samples_) best = std::min(best, norm(z - p));
        return best;
    }

private:
    long cell_coord(double x) const { return static_cast<long>(std::floor(x / bucket_size_)); }

    void build_index() {
        bucket_size_ = 3.0 * resolution_;
        for (std::size_t k = 0; k < samples_.size(); ++k) {
            std::vector<long> key(static_cast<std::size_t>(n_));
            for (int a = 0; a < n_; ++a)
                key[static_cast<std::size_t>(a)] =
                    cell_coord(samples_[k][static_cast<std::size_t>(a)]);
            index_[key].push_back(k);
        }
    }

    std::vector<Vec> samples_;
    double resolution_ = 0;
    double bucket_size_ = 0;
    int n_ = 0;
    std::string name_;
    Vec clip_lo_, clip_hi_;
    std::map<std::vector<long>, std::vector<std::size_t>> index_;
};

// ---------------------------------------------------------------------------
// Restricted maxima.
// ---------------------------------------------------------------------------

struct RestrictedMax {
    Vec point;
    double value;
};

/// All samples p of Z whose value is within the plateau tolerance of the
/// best value in their 3-resolution neighborhood, ordered by descending f
/// (ties broken lexicographically by point).
inline std::vector<RestrictedMax> restricted_max(const TestFunction& f, const ClosedSet& z) {
    const auto& pts = z.samples();
    std::vector<double> vals(pts.size());
    double fscale = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        vals[k] = f.value(pts[k]);
        fscale = std::max(fscale, std::abs(vals[k]));
    }
    double plateau = tol::max_rel * std::max(fscale, 1e-12);
    double radius = 3.0 * z.resolution();

    std::vector<RestrictedMax> out;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        bool is_max = true;
        z.for_neighbors(pts[k], radius, [&](std::size_t j) {
            if (vals[j] > vals[k] + plateau) is_max = false;
        });
        if (!is_max) continue;
        if (z.near_clip_rim(pts[k])) continue;
        out.push_back({pts[k], vals[k]});
    }
    std::sort(out.begin(), out.end(), [](const RestrictedMax& a, const RestrictedMax& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.point < b.point;
    });
    return out;
}

// ---------------------------------------------------------------------------
// The (m,h) test.
// ---------------------------------------------------------------------------

struct ViolationCertificate {
    Vec point;
    std::string probe;
    double margin;         // Trace_m(D2f(p)) - h |Df(p)|
    double gradient_norm;  // |Df(p)|
    int m;
    double h;
    bool proper_tail;
};

struct MhTestResult {
    std::optional<ViolationCertificate> violation;
    double worst_margin = -std::numeric_limits<double>::infinity();
    double margin_tolerance = 0;
    std::size_t maxima_count = 0;

    bool passed() const { return !violation.has_value(); }
};

namespace detail {

struct MarginEval {
    double margin;
    double grad_norm;
};

inline double interp_metric(const MetricField& metric, const Vec& p, int i, int j) {
    const Grid& g = metric.grid();
    std::vector<int> base;
    Vec frac;
    g.locate(p, base, frac);
    double acc = 0;
    const int corners = 1 << g.n;
    for (int c = 0; c < corners; ++c) {
        std::vector<int> idx = base;
        double w = 1.0;
        for (int a = 0; a < g.n; ++a) {
            if (c & (1 << a)) {
                idx[static_cast<std::size_t>(a)] += 1;
                w *= frac[static_cast<std::size_t>(a)];
            } else {
                w *= 1.0 - frac[static_cast<std::size_t>(a)];
            }
        }
        acc += w * metric.entry(g.flat(idx), i, j);
    }
    return acc;
}

inline MarginEval margin_at(const TestFunction& f, const Vec& p, int m, double h,
                            const MetricField* metric) {
    SymMatrix hess_p = f.hess(p);
    Vec grad_p = f.grad(p);
    double gn;
    if (metric) {
        const Grid& mg = metric->grid();
        SymMatrix g(mg.n);
        for (int i = 0; i < mg.n; ++i)
            for (int j = i; j < mg.n; ++j) g.set(i, j, interp_metric(*metric, p, i, j));
        hess_p = orthonormalize(hess_p, g);
        EigenSystem eg = eigh(g);
        double s = 0;
        for (int k = 0; k < g.dim(); ++k) {
            double proj = dot(eg.columns[static_cast<std::size_t>(k)], grad_p);
            s += proj * proj / eg.values[static_cast<std::size_t>(k)];
        }
        gn = std::sqrt(s);
    } else {
        gn = norm(grad_p);
    }
    return {trace_m(hess_p, m) - h * gn, gn};
}

}  // namespace detail

/// Evaluates the defining inequality at every restricted maximum of f on Z.
/// Returns the largest-margin violation above the margin tolerance, or a
/// pass result carrying the worst (closest to violating) margin.
inline MhTestResult mh_test(const ClosedSet& z, const TestFunction& f, int m, double h,
                            const MetricField* metric = nullptr) {
    require(h >= 0, errc::invalid_input, "h must be nonnegative");
    require(m >= 1 && m <= z.dim(), errc::invalid_input, "m out of range");
    MhTestResult res;
    res.margin_tolerance = tol::margin_rel / z.length_scale();

    auto maxima = restricted_max(f, z);
    res.maxima_count = maxima.size();
    for (const auto& mx : maxima) {
        auto ev = detail::margin_at(f, mx.point, m, h, metric);
        if (ev.margin > res.worst_margin) {
            res.worst_margin = ev.margin;
            if (ev.margin > res.margin_tolerance) {
                // Certificates are normalized so the restricted maximum
                // value reads zero; a constant shift changes no derivative.
                res.violation = ViolationCertificate{
                    mx.point, f.description + " (normalized to max 0)",
                    ev.margin, ev.grad_norm, m, h, f.proper_tail};
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Gradient perturbation.
// ---------------------------------------------------------------------------

struct PerturbResult {
    enum class Status { unchanged, translated, search_exhausted };
    Status status;
    TestFunction f;
    Vec point;
    double gradient_norm;
    double margin;
};

/// If the violating test function has a vanishing gradient at p, subtract a
/// small centered paraboloid (making the maximum strict) and search nearby
/// translates until the new restricted maximum carries a nonzero gradient
/// while the violation persists.
inline PerturbResult perturb_to_nonvanishing_gradient(const TestFunction& f, const ClosedSet& z,
                                                      const Vec& p, int m, double h,
                                                      std::uint64_t seed = 0) {
    auto ev0 = detail::margin_at(f, p, m, h, nullptr);
    if (ev0.grad_norm > tol::grad_floor)
        return {PerturbResult::Status::unchanged, f, p, ev0.grad_norm, ev0.margin};

    const int n = z.dim();
    double margin_tol = tol::margin_rel / z.length_scale();
    // Small enough to keep the margin essentially intact, large enough to
    // make the maximum strict relative to the margin tolerance.
    double eps = std::max(margin_tol, 1e-3 * ev0.margin) / (2.0 * m);

    // Concavified copy: strict maximum at p, isolated critical point.
    TestFunction base = f;
    {
        auto v = f.value;
        auto g = f.grad;
        auto hs = f.hess;
        Vec centre = p;
        base.value = [v, centre, eps](const Vec& x) { return v(x) - eps * dot(x - centre, x - centre); };
        base.grad = [g, centre, eps](const Vec& x) { return g(x) - (2.0 * eps) * (x - centre); };
        base.hess = [hs, centre, eps](const Vec& x) {
            return hs(x).plus_scaled_identity(-2.0 * eps);
        };
        base.description = f.description + " concavified eps=" + g17(eps);
    }

    std::vector<Vec> dirs;
    for (int a = 0; a < n; ++a) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(a)] = 1.0;
        dirs.push_back(e);
        dirs.push_back(-1.0 * e);
    }
    Rng rng(seed + 17);
    for (int k = 0; k < 4; ++k) dirs.push_back(rng.unit_vec(n));

    for (double delta : {0.5 * z.resolution(), z.resolution(), 2.0 * z.resolution(),
                         4.0 * z.resolution()}) {
        for (const auto& dir : dirs) {
            TestFunction cand = base.translated(delta * dir);
            auto maxima = restricted_max(cand, z);
            if (maxima.empty()) continue;
            const Vec& q = maxima.front().point;
            auto ev = detail::margin_at(cand, q, m, h, nullptr);
            if (ev.grad_norm > tol::grad_floor && ev.margin > margin_tol)
                return {PerturbResult::Status::translated, cand, q, ev.grad_norm, ev.margin};
        }
    }
    return {PerturbResult::Status::search_exhausted, f, p, ev0.grad_norm, ev0.margin};
}

// ---------------------------------------------------------------------------
// Probe search.
// ---------------------------------------------------------------------------

struct ProbeSearchReport {
    std::optional<ViolationCertificate> best;
    double worst_margin = -std::numeric_limits<double>::infinity();
    double margin_tolerance = 0;
    int probes_run = 0;
    // A pass is evidence from a finite family, not a membership proof.
    static constexpr const char* contract = "falsifier-only";

    bool violation_found() const { return best.has_value(); }
};

namespace detail {

/// The halfplane-style probe at the extreme sample in direction v:
/// f = t + t^2 + sum of squares of the last n-m frame coordinates,
/// t the v-coordinate centered at the extreme point.
inline TestFunction support_probe(const ClosedSet& z, const Vec& v, int m) {
    const int n = z.dim();
    const auto& pts = z.samples();
    std::size_t best = 0;
    double bestdot = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        double d = dot(pts[k], v);
        if (d > bestdot) {
            bestdot = d;
            best = k;
        }
    }
    Vec p_star = pts[best];

    // Orthonormal frame starting with v.
    std::vector<Vec> frame{v};
    for (int a = 0; a < n && static_cast<int>(frame.size()) < n; ++a) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(a)] = 1.0;
        for (const auto& b : frame) e = e - dot(e, b) * b;
        double len = norm(e);
        if (len > 1e-10) frame.push_back((1.0 / len) * e);
    }

    SymMatrix a(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 2.0 * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
            for (int w = m; w < n; ++w)
                s += 2.0 * frame[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] *
                     frame[static_cast<std::size_t>(w)][static_cast<std::size_t>(j)];
            a.set(i, j, s);
        }
    TestFunction f = quadratic_probe(p_star, v, a, 0.0, true);
    f.description = "support-probe dir=" + g17(v) + " at " + g17(p_star);
    return f;
}

}  // namespace detail

/// Sweeps the documented probe family: calibrated and random quadratics,
/// support probes along axis and random directions, and exponential barriers
/// on enclosing spheres. Probes are normalized (maximum value zero, proper
/// tail recorded). Deterministic for a fixed seed; workers only split the
/// probe list.
inline ProbeSearchReport probe_search(const ClosedSet& z, int m, double h, int budget,
                                      std::uint64_t seed = 0, int workers = 1,
                                      const MetricField* metric = nullptr) {
    require(budget >= 1, errc::invalid_input, "budget must be at least 1");
    const int n = z.dim();
    Vec c = z.centroid();
    double rho = std::max(z.bounding_radius(), z.resolution());

    std::vector<TestFunction> probes;

    // Calibrated radial quadratics; coefficient 1 is always present so
    // closed-form margins are reproduced exactly.
    for (double coeff : {1.0, 1.0 / rho, -1.0, -1.0 / rho})
        probes.push_back(radial_quadratic_probe(c, coeff));

    // Support probes along +-axes.
    for (int a = 0; a < n; ++a) {
        Vec e(static_cast<std::size_t>(n), 0.0);
        e[static_cast<std::size_t>(a)] = 1.0;
        probes.push_back(detail::support_probe(z, e, m));
        probes.push_back(detail::support_probe(z, -1.0 * e, m));
    }

    // Exponential barriers on enclosing spheres (n <= 3 keeps the field
    // sampling cheap; quadratics cover n = 4 probing).
    if (n <= 3) {
        double big = rho + 6.0 * z.resolution();
        Grid g = Grid::cube(n, -1.0, 1.0, 49);
        {
            Vec lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
            for (int a = 0; a < n; ++a) {
                lo[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] - big - 4 * z.resolution();
                hi[static_cast<std::size_t>(a)] = c[static_cast<std::size_t>(a)] + big + 4 * z.resolution();
            }
            g = Grid(n, lo, hi, std::vector<int>(static_cast<std::size_t>(n), 49));
        }
        for (double factor : {1.0, 1.15}) {
            double radius = rho * factor;
            if (radius <= 0) continue;
            ScalarField u = signed_distance_exact(g, fixtures::sphere_sdf(c, radius));
            probes.push_back(exp_barrier_probe(std::move(u), 10.0 / radius));
        }
    }

    // Random quadratics up to the budget.
    Rng rng(seed);
    const auto& pts = z.samples();
    while (static_cast<int>(probes.size()) < budget) {
        Vec center = pts[static_cast<std::size_t>(rng.next_u64() % pts.size())];
        for (int a = 0; a < n; ++a)
            center[static_cast<std::size_t>(a)] += rho * 0.2 * rng.normal();
        SymMatrix a(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) a.set(i, j, rng.normal() / rho);
        Vec b = rng.normal_vec(n);
        if (rng.uniform() < 0.5) {
            probes.push_back(quadratic_probe(center, b, a, 0.0, true));
        } else {
            probes.push_back(detail::support_probe(z, rng.unit_vec(n), m));
        }
    }
    if (static_cast<int>(probes.size()) > budget) probes.resize(static_cast<std::size_t>(budget));

    std::vector<MhTestResult> results(probes.size());
    parallel_for(probes.size(), workers,
                 [&](std::size_t k) { results[k] = mh_test(z, probes[k], m, h, metric); });

    ProbeSearchReport rep;
    rep.margin_tolerance = tol::margin_rel / z.length_scale();
    rep.probes_run = static_cast<int>(probes.size());
    for (const auto& r : results) {
        if (r.worst_margin > rep.worst_margin &&
            r.worst_margin > -std::numeric_limits<double>::infinity())
            rep.worst_margin = r.worst_margin;
        if (r.violation) {
            if (!rep.best || r.violation->margin > rep.best->margin ||
                (r.violation->margin == rep.best->margin && r.violation->point < rep.best->point))
                rep.best = r.violation;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Distance enlargement.
// ---------------------------------------------------------------------------

enum class AmbientKind { flat, space_form, codim1_ricci };

struct DistanceSetReport {
    double adjusted_h = 0;
    std::size_t enlarged_samples = 0;
    ProbeSearchReport probes;
    std::optional<ComparisonReport> comparison;
};

/// Builds Z(s) = { x : dist(x, Z) <= s } on a lattice and probes it with the
/// curvature-adjusted threshold: h (flat), h - m K s (space form lower bound
/// K), h - rho s (codimension-one with Ricci lower bound rho). Curved
/// ambients also audit the tube comparison inequalities at the enclosing
/// sphere's curvature.
inline DistanceSetReport distance_enlargement_check(const ClosedSet& z, double s, int m, double h,
                                                    AmbientKind ambient, double curvature_bound,
                                                    int budget, std::uint64_t seed = 0,
                                                    int workers = 1, int lattice_nodes = 29,
                                                    const Grid* domain = nullptr) {
    require(s > 0, errc::invalid_input, "s must be positive");
    const int n = z.dim();

    // Lattice covering Z(s) with a safety margin.
    Vec lo(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    Vec hi(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
    for (const auto& p : z.samples())
        for (int a = 0; a < n; ++a) {
            lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)],
                                                       p[static_cast<std::size_t>(a)]);
            hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)],
                                                       p[static_cast<std::size_t>(a)]);
        }
    double pad = s + 3.0 * z.resolution();
    if (domain) {
        // The enlarged set has to fit the declared computational box.
        for (int a = 0; a < n; ++a)
            require(lo[static_cast<std::size_t>(a)] - pad >=
                            domain->lo[static_cast<std::size_t>(a)] - 1e-12 &&
                        hi[static_cast<std::size_t>(a)] + pad <=
                            domain->hi[static_cast<std::size_t>(a)] + 1e-12,
                    errc::out_of_domain, "enlargement radius exceeds the box margin");
    }
    for (int a = 0; a < n; ++a) {
        lo[static_cast<std::size_t>(a)] -= pad;
        hi[static_cast<std::size_t>(a)] += pad;
    }
    Grid lattice(n, lo, hi, std::vector<int>(static_cast<std::size_t>(n), lattice_nodes));

    // Mark nodes within s of a sample by rasterizing sample balls.
    std::vector<char> mask(lattice.count, 0);
    for (const auto& p : z.samples()) {
        std::vector<int> lo_idx(static_cast<std::size_t>(n)), hi_idx(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            double t0 = (p[static_cast<std::size_t>(a)] - s - lattice.lo[static_cast<std::size_t>(a)]) /
                        lattice.dx[static_cast<std::size_t>(a)];
            double t1 = (p[static_cast<std::size_t>(a)] + s - lattice.lo[static_cast<std::size_t>(a)]) /
                        lattice.dx[static_cast<std::size_t>(a)];
            lo_idx[static_cast<std::size_t>(a)] =
                std::max(0, static_cast<int>(std::ceil(t0 - 1e-12)));
            hi_idx[static_cast<std::size_t>(a)] = std::min(
                lattice.shape[static_cast<std::size_t>(a)] - 1,
                static_cast<int>(std::floor(t1 + 1e-12)));
        }
        std::vector<int> it = lo_idx;
        bool any = true;
        for (int a = 0; a < n; ++a)
            if (lo_idx[static_cast<std::size_t>(a)] > hi_idx[static_cast<std::size_t>(a)]) any = false;
        while (any) {
            Vec q = lattice.position(it);
            if (norm(q - p) <= s + 1e-12) mask[lattice.flat(it)] = 1;
            int a = n - 1;
            for (; a >= 0; --a) {
                if (++it[static_cast<std::size_t>(a)] <= hi_idx[static_cast<std::size_t>(a)]) break;
                it[static_cast<std::size_t>(a)] = lo_idx[static_cast<std::size_t>(a)];
            }
            if (a < 0) break;
        }
    }

    std::vector<Vec> enlarged;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < lattice.count; ++k) {
        if (mask[k]) enlarged.push_back(lattice.position(idx));
        lattice.advance(idx);
    }
    require(!enlarged.empty(), errc::empty_set, "enlargement produced no nodes");

    ClosedSet zs = ClosedSet::point_cloud(std::move(enlarged), lattice.max_dx(),
                                          z.name() + "(s=" + g17(s) + ")");
    if (z.clipped()) zs.clip_window(lattice.lo, lattice.hi);

    DistanceSetReport rep;
    rep.enlarged_samples = zs.samples().size();
    switch (ambient) {
        case AmbientKind::flat: rep.adjusted_h = h; break;
        case AmbientKind::space_form: rep.adjusted_h = h - m * curvature_bound * s; break;
        case AmbientKind::codim1_ricci: rep.adjusted_h = h - curvature_bound * s; break;
    }
    require(rep.adjusted_h >= 0, errc::invalid_input,
            "adjusted h is negative; fixture outside the checkable range");
    rep.probes = probe_search(zs, m, rep.adjusted_h, budget, seed, workers);

    if (ambient != AmbientKind::flat) {
        double k_ambient =
            ambient == AmbientKind::space_form ? curvature_bound : curvature_bound / (n - 1);
        SpaceFormAmbient sf{n, k_ambient};
        double rho_encl = std::max(z.bounding_radius(), z.resolution());
        SymMatrix b0 = (1.0 / rho_encl) * SymMatrix::identity(n - 1);
        b0 = shrink_for_propagation(b0, rho_encl);
        SymMatrix bs = riccati_propagate(b0, sf, s);
        rep.comparison = comparison_check(b0, bs, sf, s, m);
    }
    return rep;
}

}  // namespace mh
