#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mh/grid.hpp"
#include "mh/linalg.hpp"
#include "mh/tolerances.hpp"

namespace mh {

namespace detail {

inline std::vector<int> shifted(std::vector<int> idx, int axis, int by) {
    idx[static_cast<std::size_t>(axis)] += by;
    return idx;
}

/// Central first difference of f along `axis` at a node index.
inline double d1(const ScalarField& f, const std::vector<int>& idx, int axis) {
    double h = f.grid().dx[static_cast<std::size_t>(axis)];
    return (f.at(shifted(idx, axis, +1)) - f.at(shifted(idx, axis, -1))) / (2.0 * h);
}

inline double d2(const ScalarField& f, const std::vector<int>& idx, int axis) {
    double h = f.grid().dx[static_cast<std::size_t>(axis)];
    return (f.at(shifted(idx, axis, +1)) - 2.0 * f.at(idx) + f.at(shifted(idx, axis, -1))) /
           (h * h);
}

inline double d11(const ScalarField& f, const std::vector<int>& idx, int a, int b) {
    double ha = f.grid().dx[static_cast<std::size_t>(a)];
    double hb = f.grid().dx[static_cast<std::size_t>(b)];
    auto s = [&](int da, int db) { return f.at(shifted(shifted(idx, a, da), b, db)); };
    return (s(+1, +1) - s(+1, -1) - s(-1, +1) + s(-1, -1)) / (4.0 * ha * hb);
}

/// Multilinear interpolation of a node-sampled quantity at p.
template <typename NodeFn>
double interp_nodes(const Grid& g, const Vec& p, NodeFn&& fn) {
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
        acc += w * fn(idx);
    }
    return acc;
}

}  // namespace detail

/// Gradient by second-order central differences, multilinearly interpolated
/// to off-node points. p must be at least one cell inside the box.
inline Vec gradient(const ScalarField& f, const Vec& p) {
    const Grid& g = f.grid();
    require(g.inside_margin(p, 1.0), errc::out_of_domain, "point too close to box face");
    Vec out(static_cast<std::size_t>(g.n));
    for (int a = 0; a < g.n; ++a)
        out[static_cast<std::size_t>(a)] = detail::interp_nodes(
            g, p, [&](const std::vector<int>& idx) { return detail::d1(f, idx, a); });
    return out;
}

/// Plain second-difference Hessian (flat metric).
inline SymMatrix hessian(const ScalarField& f, const Vec& p) {
    const Grid& g = f.grid();
    require(g.inside_margin(p, 2.0), errc::out_of_domain, "point too close to box face");
    SymMatrix h(g.n);
    for (int a = 0; a < g.n; ++a)
        for (int b = a; b < g.n; ++b) {
            double v = detail::interp_nodes(g, p, [&](const std::vector<int>& idx) {
                return a == b ? detail::d2(f, idx, a) : detail::d11(f, idx, a, b);
            });
            h.set(a, b, v);
        }
    return h;
}

/// Covariant Hessian with respect to a sampled metric: d2f - Gamma^k grad_k f,
/// Christoffel symbols from central differences of g.
inline SymMatrix hessian(const ScalarField& f, const Vec& p, const MetricField& metric) {
    const Grid& g = f.grid();
    require(metric.grid().same_layout(g), errc::invalid_metric, "metric grid mismatch");
    require(g.inside_margin(p, 2.0), errc::out_of_domain, "point too close to box face");
    const int n = g.n;

    // g_ij and its first derivatives at p.
    SymMatrix gp(n);
    std::vector<std::vector<Vec>> dg(
        static_cast<std::size_t>(n),
        std::vector<Vec>(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0)));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double vij = detail::interp_nodes(
                g, p, [&](const std::vector<int>& idx) { return metric.entry(g.flat(idx), i, j); });
            gp.set(i, j, vij);
            for (int l = 0; l < n; ++l) {
                double h = g.dx[static_cast<std::size_t>(l)];
                double d = detail::interp_nodes(g, p, [&](const std::vector<int>& idx) {
                    auto ip = detail::shifted(idx, l, +1);
                    auto im = detail::shifted(idx, l, -1);
                    auto clampi = [&](std::vector<int> q) {
                        for (int a = 0; a < n; ++a) {
                            int s = g.shape[static_cast<std::size_t>(a)];
                            q[static_cast<std::size_t>(a)] =
                                std::max(0, std::min(q[static_cast<std::size_t>(a)], s - 1));
                        }
                        return q;
                    };
                    return (metric.entry(g.flat(clampi(ip)), i, j) -
                            metric.entry(g.flat(clampi(im)), i, j)) /
                           (2.0 * h);
                });
                dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                  [static_cast<std::size_t>(l)] = d;
                dg[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]
                  [static_cast<std::size_t>(l)] = d;
            }
        }

    // Inverse metric at p.
    EigenSystem eg = eigh(gp);
    require(eg.values.front() > 0, errc::invalid_metric, "metric not SPD at point");
    auto ginv = [&](int i, int j) {
        double s = 0;
        for (int k = 0; k < n; ++k)
            s += eg.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                 eg.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] /
                 eg.values[static_cast<std::size_t>(k)];
        return s;
    };

    Vec grad_f(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
        grad_f[static_cast<std::size_t>(a)] = detail::interp_nodes(
            g, p, [&](const std::vector<int>& idx) { return detail::d1(f, idx, a); });

    SymMatrix h2 = hessian(f, p);
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double corr = 0;
            for (int k = 0; k < n; ++k) {
                double gamma = 0;
                for (int l = 0; l < n; ++l)
                    gamma += 0.5 * ginv(k, l) *
                             (dg[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)]
                                [static_cast<std::size_t>(i)] +
                              dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)]
                                [static_cast<std::size_t>(j)] -
                              dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                [static_cast<std::size_t>(l)]);
                corr += gamma * grad_f[static_cast<std::size_t>(k)];
            }
            out.set(i, j, h2(i, j) - corr);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Signed distance via fast sweeping.
// ---------------------------------------------------------------------------

namespace detail {

/// Godunov update: largest x solving sum_k ((x - a_k)/h_k)^2 = 1 over active
/// neighbors, where a_k is the smaller of the two axis-neighbor values.
/// Values and spacings are passed as parallel arrays (count <= 4), sorted in
/// place by value.
inline double eikonal_update(double* val, double* sp, int count) {
    for (int i = 1; i < count; ++i)
        for (int j = i; j > 0 && val[j] < val[j - 1]; --j) {
            std::swap(val[j], val[j - 1]);
            std::swap(sp[j], sp[j - 1]);
        }
    double x = std::numeric_limits<double>::infinity();
    for (int m = 1; m <= count; ++m) {
        double num = 0, den = 0, sq = 0;
        for (int k = 0; k < m; ++k) {
            double w = 1.0 / (sp[k] * sp[k]);
            num += val[k] * w;
            den += w;
            sq += val[k] * val[k] * w;
        }
        double disc = num * num - den * (sq - 1.0);
        if (disc < 0) continue;
        double cand = (num + std::sqrt(disc)) / den;
        if (m < count && cand > val[m]) continue;  // next neighbor should be active
        x = cand;
        break;
    }
    if (!std::isfinite(x)) x = val[0] + sp[0];
    return x;
}

}  // namespace detail

/// Signed distance to the zero set of a sampled level function. Nodes next to
/// a sign change get first-order direct distances (combined across axes, exact
/// for planar interfaces); the rest is filled by fast sweeping on |grad u|=1.
/// The sign convention is that of the input: negative inside.
inline ScalarField signed_distance(const ScalarField& level) {
    const Grid& g = level.grid();
    const int n = g.n;
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double>& lv = level.data();
    std::vector<double> d(g.count, inf);
    std::vector<char> frozen(g.count, 0);

    // Band initialization from axis crossings (allocation-free inner loops;
    // the flow reinitializes through here every few steps). The per-axis
    // crossing combination is exact for planar interfaces but overestimates
    // on diagonals when only one axis crosses, so the normal-distance
    // estimate |phi| / |grad phi| is used where it is smaller.
    bool any_crossing = false;
    int idx[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < g.count; ++k) {
        double v = lv[k];
        if (v == 0.0) {
            d[k] = 0.0;
            frozen[k] = 1;
            any_crossing = true;
        } else {
            double inv_sq = 0;
            double grad2 = 0;
            for (int a = 0; a < n; ++a) {
                double best = inf;
                std::size_t st = g.strides[static_cast<std::size_t>(a)];
                int ia = idx[a];
                double wm = ia > 0 ? lv[k - st] : v;
                double wp = ia < g.shape[static_cast<std::size_t>(a)] - 1 ? lv[k + st] : v;
                double da = (wp - wm) / ((ia > 0 && ia < g.shape[static_cast<std::size_t>(a)] - 1
                                              ? 2.0
                                              : 1.0) *
                                         g.dx[static_cast<std::size_t>(a)]);
                grad2 += da * da;
                if (ia > 0 && (v < 0) != (wm < 0)) {
                    double frac = std::abs(v) / (std::abs(v) + std::abs(wm));
                    best = std::min(best, frac * g.dx[static_cast<std::size_t>(a)]);
                }
                if (ia < g.shape[static_cast<std::size_t>(a)] - 1 && (v < 0) != (wp < 0)) {
                    double frac = std::abs(v) / (std::abs(v) + std::abs(wp));
                    best = std::min(best, frac * g.dx[static_cast<std::size_t>(a)]);
                }
                if (best < inf) inv_sq += 1.0 / (best * best);
            }
            if (inv_sq > 0) {
                // Prefer the normal-distance estimate: the secant fraction is
                // biased inward on curved interfaces. The axis bound still
                // caps it where the gradient degenerates.
                double axis_est = 1.0 / std::sqrt(inv_sq);
                double est = axis_est;
                if (grad2 > 1e-24)
                    est = std::min(std::abs(v) / std::sqrt(grad2), 2.0 * axis_est);
                d[k] = est;
                frozen[k] = 1;
                any_crossing = true;
            }
        }
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[a] < g.shape[static_cast<std::size_t>(a)]) break;
            idx[a] = 0;
        }
    }

    require(any_crossing, errc::invalid_input, "level function has empty zero set");

    // Fast sweeping over all 2^n axis orderings until stable.
    const int sweeps = 1 << n;
    for (int round = 0; round < 8; ++round) {
        double changed = 0;
        for (int s = 0; s < sweeps; ++s) {
            int dir[4], it[4];
            for (int a = 0; a < n; ++a) {
                dir[a] = (s >> a) & 1 ? -1 : 1;
                it[a] = dir[a] == 1 ? 0 : g.shape[static_cast<std::size_t>(a)] - 1;
            }
            for (;;) {
                std::size_t k = 0;
                for (int a = 0; a < n; ++a)
                    k += static_cast<std::size_t>(it[a]) * g.strides[static_cast<std::size_t>(a)];
                if (!frozen[k]) {
                    double val[4], sp[4];
                    int cnt = 0;
                    for (int a = 0; a < n; ++a) {
                        double best = inf;
                        std::size_t st = g.strides[static_cast<std::size_t>(a)];
                        if (it[a] > 0) best = std::min(best, d[k - st]);
                        if (it[a] < g.shape[static_cast<std::size_t>(a)] - 1)
                            best = std::min(best, d[k + st]);
                        if (best < inf) {
                            val[cnt] = best;
                            sp[cnt] = g.dx[static_cast<std::size_t>(a)];
                            ++cnt;
                        }
                    }
                    if (cnt > 0) {
                        double cand = detail::eikonal_update(val, sp, cnt);
                        if (cand < d[k]) {
                            changed = std::max(changed, d[k] - cand);
                            d[k] = cand;
                        }
                    }
                }
                int a = n - 1;
                for (; a >= 0; --a) {
                    it[a] += dir[a];
                    if (it[a] >= 0 && it[a] <= g.shape[static_cast<std::size_t>(a)] - 1) break;
                    it[a] = dir[a] == 1 ? 0 : g.shape[static_cast<std::size_t>(a)] - 1;
                }
                if (a < 0) break;
            }
        }
        if (changed < 1e-12 * g.max_dx()) break;
    }

    std::vector<double> out(g.count);
    for (std::size_t k = 0; k < g.count; ++k) out[k] = (lv[k] < 0 ? -1.0 : 1.0) * d[k];
    return ScalarField(g, std::move(out), level.policy());
}

/// Exact sampling path: the caller supplies a closed-form signed distance.
inline ScalarField signed_distance_exact(const Grid& g,
                                         const std::function<double(const Vec&)>& sdf) {
    return ScalarField::sample(g, sdf);
}

// ---------------------------------------------------------------------------
// Exponential barrier f = exp(alpha u).
// ---------------------------------------------------------------------------

/// Barrier built on a signed distance field. Derivatives are composed from
/// the derivatives of u rather than differenced on exp(alpha u), matching the
/// factorization D2f = a^2 e^{au} Du Du^T + a e^{au} D2u.
class ExpBarrier {
public:
    ExpBarrier(ScalarField u, double alpha) : u_(std::move(u)), alpha_(alpha) {
        require(alpha > 0, errc::invalid_input, "alpha must be positive");
    }

    const ScalarField& u() const { return u_; }
    double alpha() const { return alpha_; }

    double value(const Vec& p) const { return std::exp(alpha_ * u_.value(p)); }

    Vec grad(const Vec& p) const {
        Vec du = gradient(u_, p);
        double s = alpha_ * value(p);
        for (double& x : du) x *= s;
        return du;
    }

    SymMatrix hess(const Vec& p) const {
        Vec du = gradient(u_, p);
        SymMatrix d2u = hessian(u_, p);
        double e = value(p);
        SymMatrix h(u_.grid().n);
        for (int i = 0; i < h.dim(); ++i)
            for (int j = i; j < h.dim(); ++j)
                h.set(i, j, alpha_ * alpha_ * e * du[static_cast<std::size_t>(i)] *
                                    du[static_cast<std::size_t>(j)] +
                                alpha_ * e * d2u(i, j));
        return h;
    }

private:
    ScalarField u_;
    double alpha_;
};

// ---------------------------------------------------------------------------
// Dilation.
// ---------------------------------------------------------------------------

/// Field map f_lambda(x) = f(x/lambda): same samples on the scaled grid.
inline ScalarField dilate(const ScalarField& f, double lambda) {
    require(lambda > 0, errc::invalid_input, "lambda must be positive");
    const Grid& g = f.grid();
    Vec lo = lambda * g.lo, hi = lambda * g.hi;
    Grid gs(g.n, lo, hi, g.shape);
    return ScalarField(gs, f.data(), f.policy());
}

/// Set map x -> lambda x.
inline std::vector<Vec> dilate(const std::vector<Vec>& pts, double lambda) {
    require(lambda > 0, errc::invalid_input, "lambda must be positive");
    std::vector<Vec> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(lambda * p);
    return out;
}

}  // namespace mh
