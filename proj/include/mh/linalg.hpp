#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mh/errors.hpp"
#include "mh/tolerances.hpp"

namespace mh {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

inline Vec operator*(double c, const Vec& a) {
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
    return r;
}

/// Dense symmetric bilinear form on R^n, n small. Entries are symmetrized on
/// construction; a symmetry defect beyond the construction tolerance (relative
/// to the largest entry) is rejected. Carries Hessians, second fundamental
/// forms, and metric values.
class SymMatrix {
public:
    SymMatrix() : dim_(0) {}

    explicit SymMatrix(int dim, double fill = 0.0)
        : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, fill) {
        require(dim >= 1, errc::invalid_input, "SymMatrix dim must be positive");
    }

    static SymMatrix identity(int dim) {
        SymMatrix s(dim);
        for (int i = 0; i < dim; ++i) s(i, i) = 1.0;
        return s;
    }

    static SymMatrix diag(const Vec& d) {
        SymMatrix s(static_cast<int>(d.size()));
        for (int i = 0; i < s.dim(); ++i) s(i, i) = d[static_cast<std::size_t>(i)];
        return s;
    }

    /// From a row-major dense array, symmetrizing (A + A^T)/2.
    static SymMatrix from_dense(int dim, const Vec& rowmajor) {
        require(static_cast<int>(rowmajor.size()) == dim * dim, errc::invalid_input,
                "dense array size mismatch");
        double scale = 0, defect = 0;
        SymMatrix s(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double aij = rowmajor[static_cast<std::size_t>(i) * dim + j];
                double aji = rowmajor[static_cast<std::size_t>(j) * dim + i];
                require(std::isfinite(aij), errc::invalid_input, "non-finite entry");
                scale = std::max(scale, std::abs(aij));
                defect = std::max(defect, std::abs(aij - aji));
                s(i, j) = 0.5 * (aij + aji);
            }
        require(defect <= tol::sym_construction * std::max(1.0, scale) * 10, errc::invalid_input,
                "input is not symmetric");
        return s;
    }

    int dim() const { return dim_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * dim_ + j]; }

    /// Symmetric write of both (i,j) and (j,i).
    void set(int i, int j, double v) {
        (*this)(i, j) = v;
        (*this)(j, i) = v;
    }

    bool finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double frobenius() const {
        double s = 0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    double trace() const {
        double s = 0;
        for (int i = 0; i < dim_; ++i) s += (*this)(i, i);
        return s;
    }

    Vec apply(const Vec& x) const {
        Vec y(static_cast<std::size_t>(dim_), 0.0);
        for (int i = 0; i < dim_; ++i) {
            double s = 0;
            for (int j = 0; j < dim_; ++j) s += (*this)(i, j) * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s;
        }
        return y;
    }

    SymMatrix plus_scaled_identity(double t) const {
        SymMatrix s = *this;
        for (int i = 0; i < dim_; ++i) s(i, i) += t;
        return s;
    }

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
        require(a.dim() == b.dim(), errc::invalid_input, "dim mismatch");
        SymMatrix s(a.dim());
        for (std::size_t k = 0; k < a.a_.size(); ++k) s.a_[k] = a.a_[k] + b.a_[k];
        return s;
    }

    friend SymMatrix operator*(double c, const SymMatrix& a) {
        SymMatrix s(a.dim());
        for (std::size_t k = 0; k < a.a_.size(); ++k) s.a_[k] = c * a.a_[k];
        return s;
    }

    /// Rank-one update a + v v^T.
    SymMatrix plus_outer(const Vec& v) const {
        SymMatrix s = *this;
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                s(i, j) += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
        return s;
    }

private:
    int dim_;
    Vec a_;
};

/// Eigen decomposition with ascending eigenvalues and orthonormal
/// eigenvectors stored as columns of `vectors` (row-major, vectors(i,k) is
/// component i of eigenvector k).
struct EigenSystem {
    Vec values;
    std::vector<Vec> columns;  // columns[k] is the k-th eigenvector

    int dim() const { return static_cast<int>(values.size()); }

    SymMatrix reconstruct() const {
        int n = dim();
        SymMatrix s(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = 0;
                for (int k = 0; k < n; ++k)
                    v += values[static_cast<std::size_t>(k)] *
                         columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                         columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                s.set(i, j, v);
            }
        return s;
    }
};

/// Cyclic Jacobi diagonalization. All call sites are small (n <= 16), where
/// Jacobi is both accurate and, with a fixed sweep order, reproducible.
inline EigenSystem eigh(const SymMatrix& s) {
    require(s.dim() >= 1, errc::invalid_input, "empty matrix");
    require(s.finite(), errc::invalid_input, "non-finite entries");
    const int n = s.dim();

    SymMatrix a = s;
    std::vector<Vec> v(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0, total = 0;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                total += a(p, q) * a(p, q);
                if (q > p) off += a(p, q) * a(p, q);
            }
        if (total == 0.0 || off <= 1e-30 * total) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (apq == 0.0) continue;
                double app = a(p, p), aqq = a(q, q);
                double theta = 0.5 * (aqq - app) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                double tau = sn / (1.0 + c);

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = akp - sn * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + sn * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
                for (int k = 0; k < n; ++k) {
                    auto& vp = v[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
                    auto& vq = v[static_cast<std::size_t>(q)][static_cast<std::size_t>(k)];
                    double xp = vp, xq = vq;
                    vp = xp - sn * (xq + tau * xp);
                    vq = xq + sn * (xp - tau * xq);
                }
            }
        }
    }

    EigenSystem es;
    es.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) es.values[static_cast<std::size_t>(i)] = a(i, i);

    // Ascending sort, stable so that degenerate clusters keep sweep order.
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) {
        return es.values[static_cast<std::size_t>(i)] < es.values[static_cast<std::size_t>(j)];
    });

    EigenSystem sorted;
    sorted.values.resize(static_cast<std::size_t>(n));
    sorted.columns.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        int src = perm[static_cast<std::size_t>(k)];
        sorted.values[static_cast<std::size_t>(k)] = es.values[static_cast<std::size_t>(src)];
        sorted.columns[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(src)];
    }
    return sorted;
}

/// Sum of the m smallest eigenvalues.
inline double trace_m(const SymMatrix& s, int m) {
    require(m >= 1 && m <= s.dim(), errc::invalid_input, "m out of range");
    EigenSystem es = eigh(s);
    double sum = 0;
    for (int k = 0; k < m; ++k) sum += es.values[static_cast<std::size_t>(k)];
    return sum;
}

/// trace_m(S + tI, m). Equals trace_m(S, m) + m*t up to roundoff.
inline double trace_m_of_shifted(const SymMatrix& s, int m, double t) {
    return trace_m(s.plus_scaled_identity(t), m);
}

struct DominanceReport {
    bool dominated = false;
    Vec gaps;  // lambda_k(Qp) - lambda_k(Q), ascending index
};

/// True iff every eigenvalue of Q is <= the corresponding eigenvalue of Qp,
/// within the dominance slack scaled by the pair's magnitude.
inline DominanceReport dominance_check(const SymMatrix& q, const SymMatrix& qp) {
    require(q.dim() == qp.dim(), errc::invalid_input, "dim mismatch");
    EigenSystem eq = eigh(q);
    EigenSystem ep = eigh(qp);
    DominanceReport rep;
    rep.gaps.resize(static_cast<std::size_t>(q.dim()));
    double scale = std::max({1.0, q.frobenius(), qp.frobenius()});
    rep.dominated = true;
    for (int k = 0; k < q.dim(); ++k) {
        double g = ep.values[static_cast<std::size_t>(k)] - eq.values[static_cast<std::size_t>(k)];
        rep.gaps[static_cast<std::size_t>(k)] = g;
        if (g < -tol::dominance_slack * scale) rep.dominated = false;
    }
    return rep;
}

/// Congruence transform G^(-1/2) H G^(-1/2) for SPD G. Turns coordinate
/// components of a form into components in a G-orthonormal frame, so that
/// plain eigenvalues afterwards are the G-eigenvalues of H.
inline SymMatrix orthonormalize(const SymMatrix& h, const SymMatrix& g) {
    require(h.dim() == g.dim(), errc::invalid_input, "dim mismatch");
    EigenSystem eg = eigh(g);
    const int n = g.dim();
    require(eg.values.front() > 0, errc::invalid_metric, "metric not positive definite");
    // W = G^(-1/2) columns
    std::vector<Vec> w(static_cast<std::size_t>(n), Vec(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = 0;
            for (int k = 0; k < n; ++k)
                v += eg.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
                     eg.columns[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] /
                     std::sqrt(eg.values[static_cast<std::size_t>(k)]);
            w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
        }
    SymMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = 0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    v += w[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * h(a, b) *
                         w[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
            out.set(i, j, v);
        }
    return out;
}

}  // namespace mh
