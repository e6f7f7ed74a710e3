#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mh/varifold.hpp"

namespace mh::fixtures {

inline constexpr double pi = 3.141592653589793238462643383279503;

// ---------------------------------------------------------------------------
// Analytic signed distances (negative inside).
// ---------------------------------------------------------------------------

inline std::function<double(const Vec&)> sphere_sdf(Vec center, double r) {
    return [center = std::move(center), r](const Vec& p) { return norm(p - center) - r; };
}

/// Distance to the halfspace { x[axis] <= offset }.
inline std::function<double(const Vec&)> halfspace_sdf(int axis, double offset) {
    return [axis, offset](const Vec& p) { return p[static_cast<std::size_t>(axis)] - offset; };
}

/// Slab { |x[axis]| <= half_width }.
inline std::function<double(const Vec&)> slab_sdf(int axis, double half_width) {
    return [axis, half_width](const Vec& p) {
        return std::abs(p[static_cast<std::size_t>(axis)]) - half_width;
    };
}

/// Infinite cylinder of radius r about the last axis (first two coordinates).
inline std::function<double(const Vec&)> cylinder_sdf(double r) {
    return [r](const Vec& p) { return std::hypot(p[0], p[1]) - r; };
}

// ---------------------------------------------------------------------------
// Deterministic point-cloud samplers.
// ---------------------------------------------------------------------------

/// Sphere samples; n = 2 or 3. Returned spacing ~ target (the cloud's
/// resolution radius).
inline std::vector<Vec> sample_sphere(int n, const Vec& center, double r, double spacing) {
    std::vector<Vec> pts;
    if (n == 2) {
        int count = std::max(8, static_cast<int>(std::ceil(2 * pi * r / spacing)));
        for (int k = 0; k < count; ++k) {
            double a = 2 * pi * k / count;
            pts.push_back({center[0] + r * std::cos(a), center[1] + r * std::sin(a)});
        }
        return pts;
    }
    int stacks = std::max(6, static_cast<int>(std::ceil(pi * r / spacing)));
    for (int s = 0; s <= stacks; ++s) {
        double phi = pi * s / stacks;
        double ring_r = r * std::sin(phi);
        int count = std::max(1, static_cast<int>(std::ceil(2 * pi * ring_r / spacing)));
        for (int k = 0; k < count; ++k) {
            double a = 2 * pi * k / count;
            pts.push_back({center[0] + ring_r * std::cos(a), center[1] + ring_r * std::sin(a),
                           center[2] + r * std::cos(phi)});
        }
    }
    return pts;
}

/// Lattice on the hyperplane { x[axis] = offset } over the window, other
/// coordinates stepping by `spacing`.
inline std::vector<Vec> sample_plane(int n, int axis, double offset, double half_extent,
                                     double spacing) {
    std::vector<Vec> pts;
    int steps = static_cast<int>(std::floor(2 * half_extent / spacing));
    std::vector<int> free_axes;
    for (int a = 0; a < n; ++a)
        if (a != axis) free_axes.push_back(a);
    std::vector<int> it(free_axes.size(), 0);
    for (;;) {
        Vec p(static_cast<std::size_t>(n), 0.0);
        p[static_cast<std::size_t>(axis)] = offset;
        for (std::size_t k = 0; k < free_axes.size(); ++k)
            p[static_cast<std::size_t>(free_axes[k])] = -half_extent + it[k] * spacing;
        pts.push_back(p);
        std::size_t a = free_axes.size();
        while (a > 0) {
            --a;
            if (++it[a] <= steps) break;
            it[a] = 0;
            if (a == 0) return pts;
        }
        if (free_axes.empty()) return pts;
    }
}

/// Half-plane { x0 <= 0, x[axis] = 0 } in R^n (the codimension-1 sheet
/// clipped to x0 <= 0), sampled over a window.
inline std::vector<Vec> sample_halfplane(int n, int sheet_axis, double half_extent,
                                         double spacing) {
    std::vector<Vec> pts;
    for (const Vec& p : sample_plane(n, sheet_axis, 0.0, half_extent, spacing))
        if (p[0] <= 1e-12) pts.push_back(p);
    return pts;
}

inline std::vector<Vec> sample_segment(const Vec& a, const Vec& b, double spacing) {
    std::vector<Vec> pts;
    double len = norm(b - a);
    int count = std::max(2, static_cast<int>(std::ceil(len / spacing)) + 1);
    for (int k = 0; k < count; ++k) {
        double t = static_cast<double>(k) / (count - 1);
        pts.push_back(a + t * (b - a));
    }
    return pts;
}

/// Filled ball lattice.
inline std::vector<Vec> sample_ball(int n, const Vec& center, double r, double spacing) {
    std::vector<Vec> pts;
    int steps = static_cast<int>(std::floor(r / spacing));
    std::vector<int> it(static_cast<std::size_t>(n), -steps);
    for (;;) {
        Vec p(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            p[static_cast<std::size_t>(a)] =
                center[static_cast<std::size_t>(a)] + it[static_cast<std::size_t>(a)] * spacing;
        if (norm(p - center) <= r) pts.push_back(p);
        int a = n - 1;
        for (; a >= 0; --a) {
            if (++it[static_cast<std::size_t>(a)] <= steps) break;
            it[static_cast<std::size_t>(a)] = -steps;
        }
        if (a < 0) break;
    }
    return pts;
}

/// Shell { r_in <= |x - c| <= r_out } lattice.
inline std::vector<Vec> sample_shell(int n, const Vec& center, double r_in, double r_out,
                                     double spacing) {
    std::vector<Vec> pts;
    for (const Vec& p : sample_ball(n, center, r_out, spacing))
        if (norm(p - center) >= r_in) pts.push_back(p);
    return pts;
}

/// Slab { |x[axis]| <= s } lattice over a window.
inline std::vector<Vec> sample_slab(int n, int axis, double s, double half_extent,
                                    double spacing) {
    std::vector<Vec> pts;
    int ksteps = static_cast<int>(std::floor(s / spacing));
    for (int k = -ksteps; k <= ksteps; ++k)
        for (Vec p : sample_plane(n, axis, k * spacing, half_extent, spacing)) pts.push_back(p);
    return pts;
}

// ---------------------------------------------------------------------------
// Meshes.
// ---------------------------------------------------------------------------

/// Unit square [0,1]^2 x {0} in R^3, two triangles.
inline DiscreteVarifold unit_square_mesh(double theta = 1.0) {
    std::vector<Vec> v{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    std::vector<std::vector<int>> f{{0, 1, 2}, {0, 2, 3}};
    return DiscreteVarifold::from_complex(3, 2, v, f, {theta, theta});
}

/// Flat disk of given radius in the z = 0 plane of R^3. rings * slices
/// controls the face count: slices + 2 * slices * (rings - 1) triangles.
inline DiscreteVarifold disk_mesh(double radius, int rings = 16, int slices = 66,
                                  double theta = 1.0) {
    std::vector<Vec> v;
    v.push_back({0, 0, 0});
    for (int k = 1; k <= rings; ++k) {
        double r = radius * k / rings;
        for (int j = 0; j < slices; ++j) {
            double a = 2 * pi * j / slices;
            v.push_back({r * std::cos(a), r * std::sin(a), 0.0});
        }
    }
    auto ring_at = [&](int k, int j) { return 1 + (k - 1) * slices + (j % slices); };
    std::vector<std::vector<int>> f;
    for (int j = 0; j < slices; ++j) f.push_back({0, ring_at(1, j), ring_at(1, j + 1)});
    for (int k = 1; k < rings; ++k)
        for (int j = 0; j < slices; ++j) {
            f.push_back({ring_at(k, j), ring_at(k + 1, j), ring_at(k + 1, j + 1)});
            f.push_back({ring_at(k, j), ring_at(k + 1, j + 1), ring_at(k, j + 1)});
        }
    return DiscreteVarifold::from_complex(3, 2, v, f,
                                          std::vector<double>(f.size(), theta));
}

/// Longitude-latitude sphere mesh: 2 * slices * (stacks - 1) triangles.
inline DiscreteVarifold sphere_mesh(double radius, int slices = 64, int stacks = 64,
                                    double theta = 1.0, Vec center = {0, 0, 0}) {
    std::vector<Vec> v;
    v.push_back({center[0], center[1], center[2] + radius});  // north pole
    for (int s = 1; s < stacks; ++s) {
        double phi = pi * s / stacks;
        for (int j = 0; j < slices; ++j) {
            double a = 2 * pi * j / slices;
            v.push_back({center[0] + radius * std::sin(phi) * std::cos(a),
                         center[1] + radius * std::sin(phi) * std::sin(a),
                         center[2] + radius * std::cos(phi)});
        }
    }
    int south = static_cast<int>(v.size());
    v.push_back({center[0], center[1], center[2] - radius});
    auto at = [&](int s, int j) { return 1 + (s - 1) * slices + (j % slices); };
    std::vector<std::vector<int>> f;
    for (int j = 0; j < slices; ++j) f.push_back({0, at(1, j), at(1, j + 1)});
    for (int s = 1; s + 1 < stacks; ++s)
        for (int j = 0; j < slices; ++j) {
            f.push_back({at(s, j), at(s + 1, j), at(s + 1, j + 1)});
            f.push_back({at(s, j), at(s + 1, j + 1), at(s, j + 1)});
        }
    for (int j = 0; j < slices; ++j) f.push_back({south, at(stacks - 1, j + 1), at(stacks - 1, j)});
    return DiscreteVarifold::from_complex(3, 2, v, f,
                                          std::vector<double>(f.size(), theta));
}

/// Triangulated plane patch { x2 = height } over [-L, L]^2 in R^3 with a
/// position-dependent multiplicity.
inline DiscreteVarifold plane_mesh(double half_extent, int divisions, double height,
                                   const std::function<double(const Vec&)>& theta_fn) {
    std::vector<Vec> v;
    for (int i = 0; i <= divisions; ++i)
        for (int j = 0; j <= divisions; ++j) {
            double x = -half_extent + 2.0 * half_extent * i / divisions;
            double y = -half_extent + 2.0 * half_extent * j / divisions;
            v.push_back({x, y, height});
        }
    auto at = [&](int i, int j) { return i * (divisions + 1) + j; };
    std::vector<std::vector<int>> f;
    std::vector<double> th;
    for (int i = 0; i < divisions; ++i)
        for (int j = 0; j < divisions; ++j) {
            std::vector<std::vector<int>> two = {{at(i, j), at(i + 1, j), at(i + 1, j + 1)},
                                                 {at(i, j), at(i + 1, j + 1), at(i, j + 1)}};
            for (auto& tri : two) {
                Vec c = (1.0 / 3.0) * (v[static_cast<std::size_t>(tri[0])] +
                                       v[static_cast<std::size_t>(tri[1])] +
                                       v[static_cast<std::size_t>(tri[2])]);
                f.push_back(tri);
                th.push_back(theta_fn(c));
            }
        }
    return DiscreteVarifold::from_complex(3, 2, v, f, th);
}

inline DiscreteVarifold plane_mesh_uniform(double half_extent, int divisions, double height,
                                           double theta) {
    return plane_mesh(half_extent, divisions, height, [theta](const Vec&) { return theta; });
}

}  // namespace mh::fixtures
