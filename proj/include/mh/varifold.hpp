#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mh/errors.hpp"
#include "mh/grid.hpp"
#include "mh/linalg.hpp"
#include "mh/probe.hpp"
#include "mh/tolerances.hpp"
#include "mh/util.hpp"

namespace mh {

// Volumes of unit balls, m <= 4.
inline double unit_ball_volume(int m) {
    switch (m) {
        case 1: return 2.0;
        case 2: return 3.141592653589793238462643383279503;
        case 3: return 4.188790204786390984616857844372671;  // 4 pi / 3
        case 4: return 4.934802200544679309417245124645047;  // pi^2 / 2
    }
    fail(errc::invalid_input, "unit ball volume tabulated only for m <= 4");
}

namespace detail {

inline double det_small(const std::vector<Vec>& g) {
    switch (g.size()) {
        case 1: return g[0][0];
        case 2: return g[0][0] * g[1][1] - g[0][1] * g[1][0];
        case 3:
            return g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                   g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                   g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    }
    fail(errc::invalid_input, "determinant helper limited to 3x3");
}

}  // namespace detail

/// m-volume of a simplex spanned by verts (m+1 points in R^n), via the Gram
/// determinant of its edge vectors.
inline double simplex_measure(const std::vector<Vec>& verts) {
    const int m = static_cast<int>(verts.size()) - 1;
    if (m == 0) return 1.0;  // points carry unit counting measure
    std::vector<Vec> e;
    e.reserve(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) e.push_back(verts[static_cast<std::size_t>(i)] - verts[0]);
    std::vector<Vec> gram(static_cast<std::size_t>(m), Vec(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            gram[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                dot(e[static_cast<std::size_t>(i)], e[static_cast<std::size_t>(j)]);
    double d = detail::det_small(gram);
    if (d <= 0) return 0.0;
    double fact = 1.0;
    for (int k = 2; k <= m; ++k) fact *= k;
    return std::sqrt(d) / fact;
}

inline Vec simplex_centroid(const std::vector<Vec>& verts) {
    Vec c(verts[0].size(), 0.0);
    for (const auto& v : verts) c = c + v;
    return (1.0 / static_cast<double>(verts.size())) * c;
}

inline double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
    Vec ab = b - a;
    double len2 = dot(ab, ab);
    if (len2 < 1e-30) return norm(p - a);
    double t = std::max(0.0, std::min(1.0, dot(p - a, ab) / len2));
    return norm(p - (a + t * ab));
}

inline double simplex_circumradius_bound(const std::vector<Vec>& verts) {
    Vec c = simplex_centroid(verts);
    double r = 0;
    for (const auto& v : verts) r = std::max(r, norm(v - c));
    return r;
}

/// Orthonormal basis of the simplex plane (deterministic Gram-Schmidt on
/// edge vectors from vertex 0).
inline std::vector<Vec> tangent_basis(const std::vector<Vec>& verts) {
    const int m = static_cast<int>(verts.size()) - 1;
    std::vector<Vec> basis;
    for (int i = 1; i <= m; ++i) {
        Vec e = verts[static_cast<std::size_t>(i)] - verts[0];
        for (const auto& b : basis) e = e - dot(e, b) * b;
        double len = norm(e);
        if (len > 1e-14) basis.push_back((1.0 / len) * e);
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Regions.
// ---------------------------------------------------------------------------

/// Membership predicate over R^n with conservative classification hooks used
/// to prune the face-subdivision quadrature.
class Region {
public:
    enum class Side { inside, outside, straddle };

    static Region all() {
        Region r;
        r.contains_ = [](const Vec&) { return true; };
        r.classify_ = [](const Vec&, double, const std::vector<Vec>&) { return Side::inside; };
        r.name_ = "all";
        return r;
    }

    static Region ball(Vec center, double radius) {
        Region r;
        auto c = std::make_shared<Vec>(std::move(center));
        r.contains_ = [c, radius](const Vec& p) { return norm(p - *c) <= radius; };
        r.classify_ = [c, radius](const Vec& centroid, double rad, const std::vector<Vec>&) {
            double d = norm(centroid - *c);
            if (d + rad <= radius) return Side::inside;
            if (d - rad > radius) return Side::outside;
            return Side::straddle;
        };
        r.name_ = "ball";
        return r;
    }

    static Region box(Vec lo, Vec hi) {
        Region r;
        auto l = std::make_shared<Vec>(std::move(lo));
        auto h = std::make_shared<Vec>(std::move(hi));
        r.contains_ = [l, h](const Vec& p) {
            for (std::size_t a = 0; a < p.size(); ++a)
                if (p[a] < (*l)[a] || p[a] > (*h)[a]) return false;
            return true;
        };
        r.classify_ = [l, h](const Vec& centroid, double rad, const std::vector<Vec>&) {
            bool in_all = true, out_any = false;
            for (std::size_t a = 0; a < centroid.size(); ++a) {
                if (centroid[a] - rad < (*l)[a] || centroid[a] + rad > (*h)[a]) in_all = false;
                if (centroid[a] + rad < (*l)[a] || centroid[a] - rad > (*h)[a]) out_any = true;
            }
            if (in_all) return Side::inside;
            if (out_any) return Side::outside;
            return Side::straddle;
        };
        r.name_ = "box";
        return r;
    }

    /// { x : normal . x <= offset }
    static Region halfspace(Vec normal, double offset) {
        Region r;
        auto nrm = std::make_shared<Vec>(std::move(normal));
        r.contains_ = [nrm, offset](const Vec& p) { return dot(p, *nrm) <= offset; };
        r.classify_ = [nrm, offset](const Vec& centroid, double rad, const std::vector<Vec>&) {
            double d = dot(centroid, *nrm) - offset;
            double scale = norm(*nrm) * rad;
            if (d + scale <= 0) return Side::inside;
            if (d - scale > 0) return Side::outside;
            return Side::straddle;
        };
        r.name_ = "halfspace";
        return r;
    }

    /// { x : u(x) <= level } for a distance-like sampled field. Classification
    /// stays conservative by a two-cell safety margin.
    static Region sublevel(ScalarField u, double level) {
        Region r;
        auto f = std::make_shared<ScalarField>(std::move(u));
        double cell = f->grid().max_dx();
        r.contains_ = [f, level](const Vec& p) { return f->value(p) <= level; };
        r.classify_ = [f, level, cell](const Vec& centroid, double rad, const std::vector<Vec>&) {
            double v = f->value(centroid) - level;
            if (v + rad + 2 * cell <= 0) return Side::inside;
            if (v - rad - 2 * cell > 0) return Side::outside;
            return Side::straddle;
        };
        r.name_ = "sublevel";
        return r;
    }

    bool contains(const Vec& p) const { return contains_(p); }

    Side classify(const Vec& centroid, double circumradius, const std::vector<Vec>& verts) const {
        return classify_(centroid, circumradius, verts);
    }

    const std::string& name() const { return name_; }

private:
    std::function<bool(const Vec&)> contains_;
    std::function<Side(const Vec&, double, const std::vector<Vec>&)> classify_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Discrete varifolds.
// ---------------------------------------------------------------------------

struct BoundaryFacet {
    std::vector<int> verts;  // canonical ascending order
    double weight;           // signed net multiplicity
};

/// Triangulated m-complex in R^n with per-face multiplicities and an
/// (m-1)-boundary chain.
class DiscreteVarifold {
public:
    DiscreteVarifold(int ambient_dim, int surface_dim, std::vector<Vec> vertices,
                     std::vector<std::vector<int>> faces, std::vector<double> multiplicities,
                     std::vector<BoundaryFacet> boundary_chain)
        : n_(ambient_dim),
          m_(surface_dim),
          verts_(std::move(vertices)),
          faces_(std::move(faces)),
          theta_(std::move(multiplicities)),
          boundary_(std::move(boundary_chain)) {
        require(m_ >= 1 && m_ < n_, errc::invalid_input, "need 1 <= m < n");
        require(faces_.size() == theta_.size(), errc::invalid_input,
                "one multiplicity per face required");
        double scale = bbox_diagonal();
        double min_area = tol::face_degenerate_rel * std::pow(std::max(scale, 1e-30), m_);
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            require(static_cast<int>(faces_[f].size()) == m_ + 1, errc::invalid_input,
                    "face vertex count mismatch");
            require(theta_[f] >= 0, errc::invalid_input, "multiplicities must be nonnegative");
            require(simplex_measure(face_verts(f)) > min_area, errc::invalid_input,
                    "degenerate face");
        }
    }

    /// Builds the boundary chain as the algebraic boundary of the weighted
    /// complex. Valid when multiplicities are locally constant.
    static std::vector<BoundaryFacet> algebraic_boundary(const std::vector<std::vector<int>>& faces,
                                                         const std::vector<double>& theta) {
        std::map<std::vector<int>, double> acc;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const auto& fv = faces[f];
            const int m1 = static_cast<int>(fv.size());
            for (int k = 0; k < m1; ++k) {
                std::vector<int> facet;
                facet.reserve(static_cast<std::size_t>(m1 - 1));
                for (int i = 0; i < m1; ++i)
                    if (i != k) facet.push_back(fv[static_cast<std::size_t>(i)]);
                // parity of the sort permutation
                std::vector<int> sorted = facet;
                int swaps = 0;
                for (std::size_t a = 0; a < sorted.size(); ++a)
                    for (std::size_t b = a + 1; b < sorted.size(); ++b)
                        if (sorted[a] > sorted[b]) {
                            std::swap(sorted[a], sorted[b]);
                            ++swaps;
                        }
                double sign = ((k + swaps) % 2 == 0) ? 1.0 : -1.0;
                acc[sorted] += sign * theta[f];
            }
        }
        std::vector<BoundaryFacet> chain;
        for (auto& [key, w] : acc)
            if (std::abs(w) > 1e-12) chain.push_back({key, w});
        return chain;
    }

    static DiscreteVarifold from_complex(int ambient_dim, int surface_dim,
                                         std::vector<Vec> vertices,
                                         std::vector<std::vector<int>> faces,
                                         std::vector<double> multiplicities) {
        auto chain = algebraic_boundary(faces, multiplicities);
        return DiscreteVarifold(ambient_dim, surface_dim, std::move(vertices), std::move(faces),
                                std::move(multiplicities), std::move(chain));
    }

    int ambient_dim() const { return n_; }
    int surface_dim() const { return m_; }
    std::size_t face_count() const { return faces_.size(); }
    const std::vector<Vec>& vertices() const { return verts_; }
    const std::vector<std::vector<int>>& faces() const { return faces_; }
    const std::vector<double>& multiplicities() const { return theta_; }
    const std::vector<BoundaryFacet>& boundary_chain() const { return boundary_; }

    std::vector<Vec> face_verts(std::size_t f) const {
        std::vector<Vec> v;
        v.reserve(faces_[f].size());
        for (int i : faces_[f]) v.push_back(verts_[static_cast<std::size_t>(i)]);
        return v;
    }

    double multiplicity(std::size_t f) const { return theta_[f]; }

    DiscreteVarifold with_scaled_multiplicity(double c) const {
        std::vector<double> th = theta_;
        for (double& t : th) t *= c;
        std::vector<BoundaryFacet> bc = boundary_;
        for (auto& b : bc) b.weight *= c;
        return DiscreteVarifold(n_, m_, verts_, faces_, std::move(th), std::move(bc));
    }

    double bbox_diagonal() const {
        if (verts_.empty()) return 0.0;
        Vec lo = verts_[0], hi = verts_[0];
        for (const auto& v : verts_)
            for (std::size_t a = 0; a < v.size(); ++a) {
                lo[a] = std::min(lo[a], v[a]);
                hi[a] = std::max(hi[a], v[a]);
            }
        return norm(hi - lo);
    }

    double max_edge_length() const {
        double e = 0;
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            auto fv = face_verts(f);
            for (std::size_t a = 0; a < fv.size(); ++a)
                for (std::size_t b = a + 1; b < fv.size(); ++b)
                    e = std::max(e, norm(fv[a] - fv[b]));
        }
        return e;
    }

private:
    int n_, m_;
    std::vector<Vec> verts_;
    std::vector<std::vector<int>> faces_;
    std::vector<double> theta_;
    std::vector<BoundaryFacet> boundary_;
};

// ---------------------------------------------------------------------------
// Quadrature over faces.
// ---------------------------------------------------------------------------

namespace detail {

/// Children of the 2^m midpoint subdivision.
inline std::vector<std::vector<Vec>> subdivide(const std::vector<Vec>& v) {
    const int m = static_cast<int>(v.size()) - 1;
    auto mid = [](const Vec& a, const Vec& b) { return 0.5 * (a + b); };
    std::vector<std::vector<Vec>> out;
    if (m == 1) {
        Vec m01 = mid(v[0], v[1]);
        out.push_back({v[0], m01});
        out.push_back({m01, v[1]});
    } else if (m == 2) {
        Vec m01 = mid(v[0], v[1]), m12 = mid(v[1], v[2]), m02 = mid(v[0], v[2]);
        out.push_back({v[0], m01, m02});
        out.push_back({m01, v[1], m12});
        out.push_back({m02, m12, v[2]});
        out.push_back({m01, m12, m02});
    } else if (m == 3) {
        Vec m01 = mid(v[0], v[1]), m02 = mid(v[0], v[2]), m03 = mid(v[0], v[3]);
        Vec m12 = mid(v[1], v[2]), m13 = mid(v[1], v[3]), m23 = mid(v[2], v[3]);
        out.push_back({v[0], m01, m02, m03});
        out.push_back({m01, v[1], m12, m13});
        out.push_back({m02, m12, v[2], m23});
        out.push_back({m03, m13, m23, v[3]});
        // interior octahedron split along the fixed diagonal m01-m23
        out.push_back({m01, m02, m03, m23});
        out.push_back({m01, m02, m12, m23});
        out.push_back({m01, m03, m13, m23});
        out.push_back({m01, m12, m13, m23});
    } else {
        fail(errc::invalid_input, "subdivision limited to m <= 3");
    }
    return out;
}

inline double face_mass_in_region(const std::vector<Vec>& verts, const Region& u, int depth) {
    Vec c = simplex_centroid(verts);
    double rad = simplex_circumradius_bound(verts);
    Region::Side side = u.classify(c, rad, verts);
    if (side == Region::Side::inside) return simplex_measure(verts);
    if (side == Region::Side::outside) return 0.0;
    if (depth == 0) return u.contains(c) ? simplex_measure(verts) : 0.0;
    double s = 0;
    for (const auto& child : subdivide(verts)) s += face_mass_in_region(child, u, depth - 1);
    return s;
}

}  // namespace detail

/// Multiplicity-weighted m-area of V inside the region.
inline double mass(const DiscreteVarifold& v, const Region& u) {
    double total = 0;
    for (std::size_t f = 0; f < v.face_count(); ++f) {
        double th = v.multiplicity(f);
        if (th == 0.0) continue;
        total += th * detail::face_mass_in_region(v.face_verts(f), u, tol::subdivision_levels);
    }
    return total;
}

/// (m-1)-area of the boundary chain inside the region, weighted by |net|.
inline double boundary_mass(const DiscreteVarifold& v, const Region& u) {
    double total = 0;
    for (const auto& b : v.boundary_chain()) {
        std::vector<Vec> verts;
        verts.reserve(b.verts.size());
        for (int i : b.verts) verts.push_back(v.vertices()[static_cast<std::size_t>(i)]);
        if (verts.size() == 1) {
            // 0-chain: counting measure
            if (u.contains(verts[0])) total += std::abs(b.weight);
            continue;
        }
        total += std::abs(b.weight) * detail::face_mass_in_region(verts, u, tol::subdivision_levels);
    }
    return total;
}

// ---------------------------------------------------------------------------
// First variation.
// ---------------------------------------------------------------------------

/// Analytic ambient vectorfield with a user-supplied Jacobian (rows J[i] are
/// gradients of the components X_i).
struct AnalyticVectorField {
    std::function<Vec(const Vec&)> eval;
    std::function<std::vector<Vec>(const Vec&)> jacobian;
};

inline AnalyticVectorField sampled_adapter(const VectorField& x) {
    AnalyticVectorField a;
    a.eval = [&x](const Vec& p) { return x.eval(p); };
    a.jacobian = [&x](const Vec& p) {
        std::vector<Vec> j;
        j.reserve(static_cast<std::size_t>(x.grid().n));
        for (int c = 0; c < x.grid().n; ++c) j.push_back(gradient(x.component(c), p));
        return j;
    };
    return a;
}

namespace detail {

inline double tangential_divergence(const std::vector<Vec>& basis, const std::vector<Vec>& jac) {
    double div = 0;
    for (const auto& t : basis) {
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = 0; j < t.size(); ++j) div += t[i] * jac[i][j] * t[j];
    }
    return div;
}

template <typename XF>
double face_first_variation(const std::vector<Vec>& verts, const XF& x, int depth) {
    if (depth == 0) {
        Vec c = simplex_centroid(verts);
        return simplex_measure(verts) * tangential_divergence(tangent_basis(verts), x.jacobian(c));
    }
    double s = 0;
    for (const auto& child : subdivide(verts)) s += face_first_variation(child, x, depth - 1);
    return s;
}

}  // namespace detail

/// delta V(X): integral of the tangential divergence of X, theta-weighted.
template <typename XF>
double first_variation(const DiscreteVarifold& v, const XF& x) {
    double total = 0;
    for (std::size_t f = 0; f < v.face_count(); ++f) {
        double th = v.multiplicity(f);
        if (th == 0.0) continue;
        total += th * detail::face_first_variation(v.face_verts(f), x, tol::subdivision_levels);
    }
    return total;
}

inline double first_variation(const DiscreteVarifold& v, const VectorField& x) {
    return first_variation(v, sampled_adapter(x));
}

namespace detail {

template <typename Fn>
double face_scalar_integral(const std::vector<Vec>& verts, const Fn& fn, int depth) {
    if (depth == 0) return simplex_measure(verts) * fn(simplex_centroid(verts));
    double s = 0;
    for (const auto& child : subdivide(verts)) s += face_scalar_integral(child, fn, depth - 1);
    return s;
}

}  // namespace detail

/// Theta-weighted integral of a scalar over the complex.
template <typename Fn>
double integrate_scalar(const DiscreteVarifold& v, const Fn& fn,
                        int depth = tol::subdivision_levels) {
    double total = 0;
    for (std::size_t f = 0; f < v.face_count(); ++f) {
        double th = v.multiplicity(f);
        if (th == 0.0) continue;
        total += th * detail::face_scalar_integral(v.face_verts(f), fn, depth);
    }
    return total;
}

/// Integral of (|H| - h)^+ against the weighted area measure, with the mean
/// curvature magnitude supplied by an oracle (discrete H estimation is out of
/// scope; meshed fixtures carry analytic curvatures).
template <typename HFn>
double curvature_excess_integral(const DiscreteVarifold& v, double h, const HFn& h_magnitude) {
    return integrate_scalar(v, [&](const Vec& p) { return std::max(h_magnitude(p) - h, 0.0); });
}

// ---------------------------------------------------------------------------
// Divergence-bound audit.
// ---------------------------------------------------------------------------

struct DivergenceAuditRow {
    std::size_t face;
    double f_value;
    double div_tangential;   // div_M X with X = f grad f
    double trace_m_dx;       // Trace_m(DX)
    double f_trace_m_d2f;    // f Trace_m(D2 f)
    bool applicable;         // f >= 0 at the face sample
    bool chain_ok;
};

struct DivergenceAuditReport {
    std::vector<DivergenceAuditRow> rows;
    std::size_t applicable = 0;
    std::size_t passed = 0;
    double tolerance = 0;
};

/// Per-face check of div_M X >= Trace_m(DX) >= f Trace_m(D2f) for
/// X = grad(f^2/2) = f grad f, wherever f >= 0.
inline DivergenceAuditReport divergence_bound_audit(const DiscreteVarifold& v,
                                                    const TestFunction& f) {
    DivergenceAuditReport rep;
    const int m = v.surface_dim();
    rep.tolerance = 1e-2 * std::max(1.0, v.bbox_diagonal());
    for (std::size_t fi = 0; fi < v.face_count(); ++fi) {
        auto verts = v.face_verts(fi);
        Vec c = simplex_centroid(verts);
        double fv = f.value(c);
        Vec df = f.grad(c);
        SymMatrix d2f = f.hess(c);
        const int n = d2f.dim();
        SymMatrix dx(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                dx.set(i, j, fv * d2f(i, j) + df[static_cast<std::size_t>(i)] *
                                                  df[static_cast<std::size_t>(j)]);
        std::vector<Vec> jac(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n)));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = dx(i, j);
        double div = detail::tangential_divergence(tangent_basis(verts), jac);
        double tm_dx = trace_m(dx, m);
        double f_tm = fv * trace_m(d2f, m);

        DivergenceAuditRow row;
        row.face = fi;
        row.f_value = fv;
        row.div_tangential = div;
        row.trace_m_dx = tm_dx;
        row.f_trace_m_d2f = f_tm;
        row.applicable = fv >= 0;
        row.chain_ok = !row.applicable ||
                       (div >= tm_dx - rep.tolerance && tm_dx >= f_tm - rep.tolerance);
        if (row.applicable) {
            ++rep.applicable;
            if (row.chain_ok) ++rep.passed;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Density and multiplicity structure.
// ---------------------------------------------------------------------------

struct DensityEstimate {
    double radius;
    double mass_in_ball;
    double theta;
};

/// Theta estimates mass(B(x,r)) / (omega_m r^m) per radius. The resolution
/// gate compares against the local mesh size: the longest edge among faces
/// the ball can reach.
inline std::vector<DensityEstimate> density(const DiscreteVarifold& v, const Vec& x,
                                            const std::vector<double>& radii) {
    std::vector<DensityEstimate> out;
    double om = unit_ball_volume(v.surface_dim());
    for (double r : radii) {
        double mesh = 0;
        for (std::size_t f = 0; f < v.face_count(); ++f) {
            auto fv = v.face_verts(f);
            // Only faces that can meet the ball set the local scale; exact
            // distance for segments, centroid bound otherwise.
            if (fv.size() == 2) {
                if (point_segment_distance(x, fv[0], fv[1]) > r) continue;
            } else {
                double rad = simplex_circumradius_bound(fv);
                if (norm(simplex_centroid(fv) - x) > r + rad) continue;
            }
            for (std::size_t a = 0; a < fv.size(); ++a)
                for (std::size_t b = a + 1; b < fv.size(); ++b)
                    mesh = std::max(mesh, norm(fv[a] - fv[b]));
        }
        require(r * (1.0 + 1e-9) >= 5.0 * mesh, errc::resolution_limit,
                "radius below 5x local mesh size: " + g17(r) + " vs mesh " + g17(mesh));
        double mb = mass(v, Region::ball(x, r));
        out.push_back({r, mb, mb / (om * std::pow(r, v.surface_dim()))});
    }
    return out;
}

struct GapAlphaReport {
    bool holds = true;
    std::vector<std::size_t> offenders;
};

/// True iff every face multiplicity is in {1} u [alpha, inf), within 1e-9.
inline GapAlphaReport gap_alpha_check(const DiscreteVarifold& v, double alpha) {
    require(alpha > 1.0, errc::invalid_input, "alpha must exceed 1");
    GapAlphaReport rep;
    for (std::size_t f = 0; f < v.face_count(); ++f) {
        double th = v.multiplicity(f);
        bool ok = std::abs(th - 1.0) <= tol::gap_alpha_eps || th >= alpha - tol::gap_alpha_eps;
        if (!ok) {
            rep.holds = false;
            rep.offenders.push_back(f);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Area blow-up set estimation.
// ---------------------------------------------------------------------------

/// Increasing, unbounded threshold schedule T_i = base + rate * (i + 1),
/// i indexing the family from 0.
struct ThresholdSchedule {
    double base = 0.0;
    double rate = 1.0;
    double at(int i) const { return base + rate * (i + 1); }
    std::string describe() const { return "T_i = " + g17(base) + " + " + g17(rate) + " * i"; }
};

struct BlowupEstimate {
    std::vector<Vec> points;  // marked node positions
    double resolution;        // the probing radius r
    std::string schedule;
    int first_index;  // i0: the "for all i >= i0" surrogate
};

/// Marks grid nodes x where mass(V_i, B(x, r)) >= T_i for all sampled
/// i >= i0 (i0 = family size / 2). Only nodes whose probing ball fits inside
/// the grid box are examined.
inline BlowupEstimate blowup_set(const std::vector<DiscreteVarifold>& family, double r,
                                 const ThresholdSchedule& schedule, const Grid& eval_grid,
                                 int workers = 1) {
    require(family.size() >= 3, errc::invalid_input, "need a family of at least 3");
    require(schedule.rate > 0, errc::invalid_input, "schedule must be increasing and unbounded");
    const int i0 = static_cast<int>(family.size()) / 2;

    std::vector<std::size_t> window;
    double margin_cells = r / eval_grid.max_dx();
    std::vector<int> idx(static_cast<std::size_t>(eval_grid.n), 0);
    for (std::size_t k = 0; k < eval_grid.count; ++k) {
        if (eval_grid.inside_margin(eval_grid.position(idx), margin_cells)) window.push_back(k);
        eval_grid.advance(idx);
    }

    std::vector<char> marked(window.size(), 0);
    parallel_for(window.size(), workers, [&](std::size_t w) {
        Vec p = eval_grid.position(window[w]);
        Region ball = Region::ball(p, r);
        bool all_above = true;
        for (int i = i0; i < static_cast<int>(family.size()); ++i) {
            if (mass(family[static_cast<std::size_t>(i)], ball) < schedule.at(i)) {
                all_above = false;
                break;
            }
        }
        marked[w] = all_above ? 1 : 0;
    });

    BlowupEstimate est;
    est.resolution = r;
    est.schedule = schedule.describe();
    est.first_index = i0;
    for (std::size_t w = 0; w < window.size(); ++w)
        if (marked[w]) est.points.push_back(eval_grid.position(window[w]));
    return est;
}

// ---------------------------------------------------------------------------
// The two-branch graph family with plateau densities.
// ---------------------------------------------------------------------------

namespace detail {

inline double bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

inline double smooth_step01(double s) {
    auto h = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
    return h(s) / (h(s) + h(1.0 - s));
}

}  // namespace detail

/// Plateau profile: 2 on [1,2], 1 on [3 ,inf), smooth monotone between.
inline double plateau_profile(double t) {
    if (t <= 2.0) return 2.0;
    if (t >= 3.0) return 1.0;
    return 1.0 + detail::smooth_step01(3.0 - t);
}

struct GraphBumpVarifold {
    DiscreteVarifold varifold;
    int index;                  // the sequence index
    double mesh_step;
    std::vector<Vec> graph_branch;  // polyline vertices of the bump graph
    double bump_height;             // max height of the graph branch

    /// Density declared by the construction at an axis point (x, 0).
    static double declared_density(double x) {
        return std::abs(x) < 1.0 ? 1.0 : plateau_profile(std::abs(x));
    }

    double support_hausdorff_to_axis() const {
        double h = 0;
        for (const auto& p : graph_branch) h = std::max(h, std::abs(p[1]));
        return h;
    }

    /// Largest tangent-direction jump between adjacent graph segments with
    /// x within `window` of x0.
    double max_tangent_jump_near(double x0, double window) const {
        double worst = 0;
        for (std::size_t k = 0; k + 2 < graph_branch.size(); ++k) {
            const Vec& a = graph_branch[k];
            const Vec& b = graph_branch[k + 1];
            const Vec& c = graph_branch[k + 2];
            if (std::abs(b[0] - x0) > window) continue;
            double a1 = std::atan2(b[1] - a[1], b[0] - a[0]);
            double a2 = std::atan2(c[1] - b[1], c[0] - b[0]);
            worst = std::max(worst, std::abs(a2 - a1));
        }
        return worst;
    }
};

/// The two-branch family: the graph of (1/n) * bump over [-5,5] with unit
/// multiplicity, plus the x-axis carrying 1 on |x| < 1 and
/// plateau_profile(|x|) - 1 on |x| >= 1, so the total axis density where the
/// branches coincide is the plateau profile.
inline GraphBumpVarifold counterexample_sequence(int n_index, double mesh_step = 0.05) {
    require(n_index >= 1, errc::invalid_input, "sequence index starts at 1");
    const double x0 = -5.0, x1 = 5.0;
    int segs = static_cast<int>(std::round((x1 - x0) / mesh_step));
    segs = std::max(segs, 8);
    double step = (x1 - x0) / segs;

    std::vector<Vec> verts;
    std::vector<std::vector<int>> faces;
    std::vector<double> theta;

    // Branch A: the graph.
    int base_a = 0;
    for (int k = 0; k <= segs; ++k) {
        double x = x0 + k * step;
        verts.push_back({x, detail::bump(x) / n_index});
    }
    for (int k = 0; k < segs; ++k) {
        faces.push_back({base_a + k, base_a + k + 1});
        theta.push_back(1.0);
    }

    // Branch B: the axis, with the residual plateau density.
    int base_b = static_cast<int>(verts.size());
    for (int k = 0; k <= segs; ++k) verts.push_back({x0 + k * step, 0.0});
    for (int k = 0; k < segs; ++k) {
        double xm = x0 + (k + 0.5) * step;
        double th = std::abs(xm) < 1.0 ? 1.0 : plateau_profile(std::abs(xm)) - 1.0;
        if (th < 1e-15) continue;
        faces.push_back({base_b + k, base_b + k + 1});
        theta.push_back(th);
    }

    // Declared boundary: the graph branch endpoints (weight 1); the axis
    // branch carries vanishing multiplicity at +-5.
    std::vector<BoundaryFacet> chain;
    chain.push_back({{base_a}, -1.0});
    chain.push_back({{base_a + segs}, 1.0});

    GraphBumpVarifold out{
        DiscreteVarifold(2, 1, verts, std::move(faces), std::move(theta), std::move(chain)),
        n_index,
        step,
        {},
        detail::bump(0.0) / n_index};
    for (int k = 0; k <= segs; ++k) out.graph_branch.push_back(verts[static_cast<std::size_t>(k)]);
    return out;
}

}  // namespace mh
