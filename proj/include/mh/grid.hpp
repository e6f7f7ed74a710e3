#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "mh/errors.hpp"
#include "mh/linalg.hpp"

namespace mh {

/// Uniform node-centered grid on a box. Node i along axis a sits at
/// lo[a] + i*dx[a], with the last node on hi[a].
struct Grid {
    int n = 0;
    Vec lo, hi;
    std::vector<int> shape;        // nodes per axis
    Vec dx;                        // spacing per axis
    std::vector<std::size_t> strides;
    std::size_t count = 0;

    Grid() = default;

    Grid(int dim, Vec lower, Vec upper, std::vector<int> nodes)
        : n(dim), lo(std::move(lower)), hi(std::move(upper)), shape(std::move(nodes)) {
        require(n >= 2 && n <= 4, errc::invalid_input, "grid dim must be in [2,4]");
        require(static_cast<int>(lo.size()) == n && static_cast<int>(hi.size()) == n &&
                    static_cast<int>(shape.size()) == n,
                errc::invalid_input, "grid spec size mismatch");
        dx.resize(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            require(shape[static_cast<std::size_t>(a)] >= 8, errc::invalid_input,
                    "need at least 8 nodes per axis");
            double w = hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)];
            require(w > 0, errc::invalid_input, "box has non-positive extent");
            dx[static_cast<std::size_t>(a)] = w / (shape[static_cast<std::size_t>(a)] - 1);
        }
        strides.assign(static_cast<std::size_t>(n), 1);
        count = 1;
        for (int a = n - 1; a >= 0; --a) {
            strides[static_cast<std::size_t>(a)] = count;
            count *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
        }
    }

    /// Uniform cube helper.
    static Grid cube(int dim, double lo_v, double hi_v, int nodes) {
        return Grid(dim, Vec(static_cast<std::size_t>(dim), lo_v),
                    Vec(static_cast<std::size_t>(dim), hi_v),
                    std::vector<int>(static_cast<std::size_t>(dim), nodes));
    }

    double max_dx() const {
        double m = 0;
        for (double d : dx) m = std::max(m, d);
        return m;
    }

    std::size_t flat(const std::vector<int>& idx) const {
        std::size_t f = 0;
        for (int a = 0; a < n; ++a)
            f += static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]) *
                 strides[static_cast<std::size_t>(a)];
        return f;
    }

    std::vector<int> unflat(std::size_t f) const {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            idx[static_cast<std::size_t>(a)] =
                static_cast<int>(f / strides[static_cast<std::size_t>(a)]);
            f %= strides[static_cast<std::size_t>(a)];
        }
        return idx;
    }

    Vec position(const std::vector<int>& idx) const {
        Vec p(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            p[static_cast<std::size_t>(a)] = lo[static_cast<std::size_t>(a)] +
                                             idx[static_cast<std::size_t>(a)] *
                                                 dx[static_cast<std::size_t>(a)];
        return p;
    }

    Vec position(std::size_t f) const { return position(unflat(f)); }

    /// True if p is at least `cells` cells away from every box face.
    bool inside_margin(const Vec& p, double cells) const {
        for (int a = 0; a < n; ++a) {
            double m = cells * dx[static_cast<std::size_t>(a)];
            if (p[static_cast<std::size_t>(a)] < lo[static_cast<std::size_t>(a)] + m ||
                p[static_cast<std::size_t>(a)] > hi[static_cast<std::size_t>(a)] - m)
                return false;
        }
        return true;
    }

    /// Cell containing p: base node index and fractional offsets in [0,1].
    void locate(const Vec& p, std::vector<int>& base, Vec& frac) const {
        base.resize(static_cast<std::size_t>(n));
        frac.resize(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            double t = (p[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]) /
                       dx[static_cast<std::size_t>(a)];
            int i = static_cast<int>(std::floor(t));
            i = std::max(0, std::min(i, shape[static_cast<std::size_t>(a)] - 2));
            base[static_cast<std::size_t>(a)] = i;
            frac[static_cast<std::size_t>(a)] = t - i;
        }
    }

    bool same_layout(const Grid& o) const {
        return n == o.n && shape == o.shape && lo == o.lo && hi == o.hi;
    }

    /// Odometer step in flat-index order (last axis fastest).
    void advance(std::vector<int>& idx) const {
        for (int a = n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < shape[static_cast<std::size_t>(a)]) return;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
};

enum class BoundaryPolicy { extrapolate_linear, clamp };

/// Scalar samples on a Grid. Immutable by convention after construction;
/// operators hand out new fields.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(Grid g, double fill = 0.0, BoundaryPolicy pol = BoundaryPolicy::extrapolate_linear)
        : grid_(std::move(g)), v_(grid_.count, fill), policy_(pol) {}

    ScalarField(Grid g, std::vector<double> values,
                BoundaryPolicy pol = BoundaryPolicy::extrapolate_linear)
        : grid_(std::move(g)), v_(std::move(values)), policy_(pol) {
        require(v_.size() == grid_.count, errc::invalid_input, "value count mismatch");
    }

    static ScalarField sample(const Grid& g, const std::function<double(const Vec&)>& f,
                              BoundaryPolicy pol = BoundaryPolicy::extrapolate_linear) {
        ScalarField out(g, 0.0, pol);
        std::vector<int> idx(static_cast<std::size_t>(g.n), 0);
        for (std::size_t k = 0; k < g.count; ++k) {
            out.v_[k] = f(g.position(idx));
            out.advance(idx);
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    BoundaryPolicy policy() const { return policy_; }
    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

    bool finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double node(std::size_t flat) const { return v_[flat]; }

    /// Node value with index extension by the boundary policy. Linear
    /// extrapolation is exact for affine fields, one axis at a time.
    double at(std::vector<int> idx) const {
        for (int a = 0; a < grid_.n; ++a) {
            int s = grid_.shape[static_cast<std::size_t>(a)];
            int i = idx[static_cast<std::size_t>(a)];
            if (i >= 0 && i < s) continue;
            if (policy_ == BoundaryPolicy::clamp) {
                idx[static_cast<std::size_t>(a)] = std::max(0, std::min(i, s - 1));
                return at(std::move(idx));
            }
            std::vector<int> j0 = idx, j1 = idx;
            if (i < 0) {
                j0[static_cast<std::size_t>(a)] = 0;
                j1[static_cast<std::size_t>(a)] = 1;
                double t = -static_cast<double>(i);
                return (1.0 + t) * at(std::move(j0)) - t * at(std::move(j1));
            }
            j0[static_cast<std::size_t>(a)] = s - 1;
            j1[static_cast<std::size_t>(a)] = s - 2;
            double t = static_cast<double>(i - (s - 1));
            return (1.0 + t) * at(std::move(j0)) - t * at(std::move(j1));
        }
        return v_[grid_.flat(idx)];
    }

    /// Multilinear interpolation at p (p must be inside the box).
    double value(const Vec& p) const {
        require(grid_.inside_margin(p, 0.0), errc::out_of_domain, "point outside box");
        std::vector<int> base;
        Vec frac;
        grid_.locate(p, base, frac);
        return interp_corner(base, frac, 0);
    }

    void advance(std::vector<int>& idx) const { grid_.advance(idx); }

private:
    double interp_corner(std::vector<int>& base, const Vec& frac, int axis) const {
        if (axis == grid_.n) return v_[grid_.flat(base)];
        double f = frac[static_cast<std::size_t>(axis)];
        double v0 = interp_corner(base, frac, axis + 1);
        base[static_cast<std::size_t>(axis)] += 1;
        double v1 = interp_corner(base, frac, axis + 1);
        base[static_cast<std::size_t>(axis)] -= 1;
        return (1.0 - f) * v0 + f * v1;
    }

    Grid grid_;
    std::vector<double> v_;
    BoundaryPolicy policy_ = BoundaryPolicy::extrapolate_linear;
};

/// SPD metric samples g_ij on a Grid (row-major n*n block per node).
class MetricField {
public:
    MetricField(Grid g, std::function<SymMatrix(const Vec&)> gen) : grid_(std::move(g)) {
        const int n = grid_.n;
        v_.resize(grid_.count * static_cast<std::size_t>(n) * n);
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        for (std::size_t k = 0; k < grid_.count; ++k) {
            SymMatrix m = gen(grid_.position(idx));
            require(m.dim() == n, errc::invalid_metric, "metric dim mismatch");
            EigenSystem es = eigh(m);
            require(es.values.front() >= 1e-8, errc::invalid_metric,
                    "metric not positive definite at a node");
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    v_[(k * n + static_cast<std::size_t>(i)) * n + static_cast<std::size_t>(j)] =
                        m(i, j);
            advance(idx);
        }
    }

    const Grid& grid() const { return grid_; }

    /// Component field g_ij as interpolated scalar samples.
    double entry(std::size_t flat, int i, int j) const {
        const int n = grid_.n;
        return v_[(flat * n + static_cast<std::size_t>(i)) * n + static_cast<std::size_t>(j)];
    }

    SymMatrix at_node(std::size_t flat) const {
        const int n = grid_.n;
        SymMatrix m(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = entry(flat, i, j);
        return m;
    }

private:
    void advance(std::vector<int>& idx) const {
        for (int a = grid_.n - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < grid_.shape[static_cast<std::size_t>(a)])
                return;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }

    Grid grid_;
    std::vector<double> v_;
};

/// Grid-sampled ambient vectorfield with finite-difference Jacobians.
class VectorField {
public:
    VectorField(const Grid& g, const std::function<Vec(const Vec&)>& gen) : grid_(g) {
        comps_.reserve(static_cast<std::size_t>(g.n));
        for (int c = 0; c < g.n; ++c)
            comps_.push_back(ScalarField::sample(
                g, [&](const Vec& p) { return gen(p)[static_cast<std::size_t>(c)]; }));
        for (const auto& f : comps_)
            require(f.finite(), errc::invalid_input, "non-finite vectorfield sample");
    }

    const Grid& grid() const { return grid_; }
    const ScalarField& component(int c) const { return comps_[static_cast<std::size_t>(c)]; }

    Vec eval(const Vec& p) const {
        Vec v(static_cast<std::size_t>(grid_.n));
        for (int c = 0; c < grid_.n; ++c) v[static_cast<std::size_t>(c)] = comps_[static_cast<std::size_t>(c)].value(p);
        return v;
    }

private:
    Grid grid_;
    std::vector<ScalarField> comps_;
};

}  // namespace mh
