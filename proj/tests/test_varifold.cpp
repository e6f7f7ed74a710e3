#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mh/fixtures.hpp"
#include "mh/rng.hpp"
#include "mh/varifold.hpp"
#include "oracles.hpp"

using namespace mh;
using fixtures::pi;

TEST_CASE("mass of the unit square") {
    auto sq = fixtures::unit_square_mesh();
    CHECK(mass(sq, Region::all()) == doctest::Approx(1.0).epsilon(1e-12));
    auto sq5 = fixtures::unit_square_mesh(5.0);
    CHECK(mass(sq5, Region::all()) == doctest::Approx(5.0).epsilon(1e-12));
    // multiplicity linearity is exact
    CHECK(mass(sq.with_scaled_multiplicity(3.0), Region::all()) ==
          doctest::Approx(3.0 * mass(sq, Region::all())).epsilon(1e-14));
}

TEST_CASE("disk mass in a half-radius ball") {
    auto disk = fixtures::disk_mesh(1.0);
    double got = mass(disk, Region::ball({0, 0, 0}, 0.5));
    CHECK(got == doctest::Approx(pi / 4.0).epsilon(0.01));
    CHECK(mass(disk, Region::all()) == doctest::Approx(pi).epsilon(0.01));
}

TEST_CASE("mass additivity over disjoint regions") {
    auto disk = fixtures::disk_mesh(1.0, 12, 48);
    Region left = Region::box({-2, -2, -2}, {0, 2, 2});
    Region right = Region::halfspace({-1, 0, 0}, 0.0);  // x >= 0
    double total = mass(disk, Region::all());
    double split = mass(disk, left) + mass(disk, right);
    CHECK(std::abs(split - total) <= 1e-3 * total);
}

TEST_CASE("boundary mass of square, disk, sphere") {
    auto sq = fixtures::unit_square_mesh();
    CHECK(boundary_mass(sq, Region::all()) == doctest::Approx(4.0).epsilon(1e-12));

    auto disk = fixtures::disk_mesh(1.0);
    CHECK(boundary_mass(disk, Region::all()) == doctest::Approx(2 * pi).epsilon(0.01));

    auto sphere = fixtures::sphere_mesh(1.0);
    CHECK(sphere.boundary_chain().empty());
    CHECK(boundary_mass(sphere, Region::all()) == 0.0);
}

namespace {

AnalyticVectorField radial_unit_field() {
    AnalyticVectorField x;
    x.eval = [](const Vec& p) {
        double r = norm(p);
        return (1.0 / r) * p;
    };
    x.jacobian = [](const Vec& p) {
        double r = norm(p);
        std::vector<Vec> j(p.size(), Vec(p.size(), 0.0));
        for (std::size_t i = 0; i < p.size(); ++i)
            for (std::size_t k = 0; k < p.size(); ++k)
                j[i][k] = ((i == k ? 1.0 : 0.0) - p[i] * p[k] / (r * r)) / r;
        return j;
    };
    return x;
}

}  // namespace

TEST_CASE("first variation of a flat piece vanishes for compactly supported X") {
    auto patch = fixtures::plane_mesh_uniform(1.0, 24, 0.0, 1.0);
    AnalyticVectorField x;
    auto bump = [](double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; };
    auto bump_d = [&](double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        double s = 1.0 - t * t;
        return bump(t) * (-2.0 * t / (s * s));
    };
    const double w = 0.7;  // support radius, inside the patch
    x.eval = [&, w](const Vec& p) {
        double t = norm(Vec{p[0], p[1]}) / w;
        return Vec{bump(t), 0.0, 0.0};
    };
    x.jacobian = [&, w](const Vec& p) {
        double rho = norm(Vec{p[0], p[1]});
        double t = rho / w;
        std::vector<Vec> j(3, Vec(3, 0.0));
        if (rho > 1e-12 && t < 1.0) {
            j[0][0] = bump_d(t) / w * p[0] / rho;
            j[0][1] = bump_d(t) / w * p[1] / rho;
        }
        return j;
    };
    double dv = first_variation(patch, x);
    double area = mass(patch, Region::all());
    CHECK(std::abs(dv) <= 1e-3 * 1.0 * area);
}

TEST_CASE("first variation of the sphere against the radial field") {
    const double r = 1.0;
    auto sphere = fixtures::sphere_mesh(r);  // 8192 faces
    double area = mass(sphere, Region::all());
    double dv_out = first_variation(sphere, radial_unit_field());
    double expect = (2.0 / r) * area;  // m = 2
    CHECK(dv_out == doctest::Approx(expect).epsilon(0.02));

    AnalyticVectorField inward = radial_unit_field();
    auto base = inward;
    inward.eval = [base](const Vec& p) { return -1.0 * base.eval(p); };
    inward.jacobian = [base](const Vec& p) {
        auto j = base.jacobian(p);
        for (auto& row : j)
            for (auto& e : row) e = -e;
        return j;
    };
    CHECK(first_variation(sphere, inward) == doctest::Approx(-expect).epsilon(0.02));
}

TEST_CASE("first variation of the disk reproduces the boundary term") {
    auto disk = fixtures::disk_mesh(1.0);
    double dv = first_variation(disk, radial_unit_field());
    CHECK(dv == doctest::Approx(2 * pi).epsilon(0.02));
}

TEST_CASE("divergence-theorem consistency on the closed sphere") {
    const double r = 1.0;
    auto sphere = fixtures::sphere_mesh(r);
    AnalyticVectorField x;
    x.eval = [](const Vec& p) { return Vec{p[0] * p[0], p[1], std::sin(p[2])}; };
    x.jacobian = [](const Vec& p) {
        std::vector<Vec> j(3, Vec(3, 0.0));
        j[0][0] = 2 * p[0];
        j[1][1] = 1.0;
        j[2][2] = std::cos(p[2]);
        return j;
    };
    double dv = first_variation(sphere, x);
    // Mean curvature vector of the sphere points inward: H = -(m/r) p/|p|.
    double hx = integrate_scalar(sphere, [&](const Vec& p) {
        Vec xv = x.eval(p);
        return -(2.0 / r) * dot(p, xv) / norm(p);
    });
    double scale = std::abs(dv) + std::abs(hx) + 1.0;
    CHECK(std::abs(dv + hx) <= 0.02 * scale);
}

TEST_CASE("divergence bound audit: canonical flat case is an equality chain") {
    auto patch = fixtures::plane_mesh_uniform(1.0, 8, 2.0, 1.0);  // plane x3 = 2
    // f = x3: X = f grad f, DX = e3 e3^T + f * 0.
    TestFunction f = quadratic_probe({0, 0, 0}, {0, 0, 1}, SymMatrix(3));
    auto rep = divergence_bound_audit(patch, f);
    CHECK(rep.applicable == rep.rows.size());
    CHECK(rep.passed == rep.applicable);
    for (const auto& row : rep.rows) {
        CHECK(row.div_tangential == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(row.trace_m_dx == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
        CHECK(row.f_trace_m_d2f == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("divergence bound audit: f = |x|^2/2 on a raised plane") {
    auto patch = fixtures::plane_mesh_uniform(1.0, 8, 1.0, 1.0);
    TestFunction f = radial_quadratic_probe({0, 0, 0}, 0.5);  // |x|^2 / 2
    auto rep = divergence_bound_audit(patch, f);
    CHECK(rep.passed == rep.applicable);
    CHECK(rep.applicable == rep.rows.size());
    // Hand derivative: div_M X at (x, y, 1) is |p|^2 + x^2 + y^2.
    for (const auto& row : rep.rows) {
        auto verts = patch.face_verts(row.face);
        Vec c = simplex_centroid(verts);
        double hand = dot(c, c) + c[0] * c[0] + c[1] * c[1];
        CHECK(row.div_tangential == doctest::Approx(hand).epsilon(1e-10));
        CHECK(row.trace_m_dx == doctest::Approx(dot(c, c)).epsilon(1e-10));
        CHECK(row.f_trace_m_d2f == doctest::Approx(dot(c, c)).epsilon(1e-10));
        if (c[0] * c[0] + c[1] * c[1] > 1e-6) CHECK(row.div_tangential > row.trace_m_dx);
    }
}

TEST_CASE("divergence bound audit: random cubic on the sphere mesh") {
    auto sphere = fixtures::sphere_mesh(1.0, 32, 32);
    Rng rng(77);
    Vec a = rng.normal_vec(3);
    SymMatrix b(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) b.set(i, j, rng.normal());
    double gamma = rng.normal();

    TestFunction f;
    f.kind = "cubic";
    f.description = "test cubic";
    f.value = [=](const Vec& p) {
        return dot(a, p) + 0.5 * dot(p, b.apply(p)) + gamma * p[0] * p[0] * p[0] / 3.0;
    };
    f.grad = [=](const Vec& p) {
        Vec g = a + b.apply(p);
        g[0] += gamma * p[0] * p[0];
        return g;
    };
    f.hess = [=](const Vec& p) {
        SymMatrix h = b;
        h(0, 0) += 2.0 * gamma * p[0];
        return h;
    };
    auto rep = divergence_bound_audit(sphere, f);
    CHECK(rep.applicable > 0);
    CHECK(static_cast<double>(rep.passed) >= 0.99 * static_cast<double>(rep.applicable));
}

TEST_CASE("density of planes with unit and integer multiplicity") {
    auto plane = fixtures::plane_mesh_uniform(1.5, 60, 0.0, 1.0);
    auto est = density(plane, {0.1, -0.05, 0.0}, {0.5, 0.4});
    for (const auto& e : est) CHECK(e.theta == doctest::Approx(1.0).epsilon(0.01));

    auto plane3 = fixtures::plane_mesh_uniform(1.5, 60, 0.0, 3.0);
    auto est3 = density(plane3, {0.1, -0.05, 0.0}, {0.5});
    CHECK(est3[0].theta == doctest::Approx(3.0).epsilon(0.01));

    CHECK_THROWS_AS(density(plane, {0, 0, 0}, {0.01}), Error);
}

TEST_CASE("density of the graph-bump varifold matches the declared profile") {
    auto cx = counterexample_sequence(4, 0.01);
    for (double xq : {1.5, 3.5}) {
        auto est = density(cx.varifold, {xq, 0.0}, {0.06});
        CHECK(est[0].theta ==
              doctest::Approx(GraphBumpVarifold::declared_density(xq)).epsilon(0.02));
    }
    // Inside |x| < 1 the ball sees only the axis branch at density 1.
    auto est_in = density(cx.varifold, {0.5, 0.0}, {0.06});
    CHECK(est_in[0].theta == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("gap alpha checks") {
    auto ones = fixtures::plane_mesh_uniform(1.0, 8, 0.0, 1.0);
    CHECK(gap_alpha_check(ones, 1.5).holds);

    auto mixed = fixtures::plane_mesh(1.0, 8, 0.0,
                                      [](const Vec& c) { return c[0] <= 0 ? 1.0 : 2.0; });
    CHECK(gap_alpha_check(mixed, 2.0).holds);
    auto rep = gap_alpha_check(mixed, 2.5);
    CHECK_FALSE(rep.holds);
    CHECK(!rep.offenders.empty());

    auto cx = counterexample_sequence(2, 0.05);
    for (double alpha : {1.1, 1.5, 2.0}) CHECK_FALSE(gap_alpha_check(cx.varifold, alpha).holds);
    CHECK_THROWS_AS(gap_alpha_check(ones, 1.0), Error);
}

TEST_CASE("gap alpha rejects tiny alpha but accepts exact ones") {
    auto sq = fixtures::unit_square_mesh(1.0);
    CHECK(gap_alpha_check(sq, 1000.0).holds);  // theta = 1 exactly
}

TEST_CASE("blowup set of the multiplicity-i plane family") {
    std::vector<DiscreteVarifold> family;
    for (int i = 1; i <= 10; ++i)
        family.push_back(fixtures::plane_mesh_uniform(1.2, 32, 0.0, static_cast<double>(i)));

    Grid eval = Grid::cube(3, -0.6, 0.6, 17);
    double dx = eval.dx[0];
    // Cell-scale probing radius: the schedule separates the node plane from
    // its one-cell neighbors.
    double r = 1.2 * dx;
    ThresholdSchedule sched{0.0, 0.5 * pi * r * r};
    auto est = blowup_set(family, r, sched, eval, 2);

    CHECK(!est.points.empty());
    for (const auto& p : est.points) CHECK(std::abs(p[2]) <= dx + 1e-12);
    // Every in-window plane node is within a cell of a marked point.
    int covered = 0, wanted = 0;
    std::vector<int> idx(3, 0);
    for (std::size_t k = 0; k < eval.count; ++k) {
        Vec q = eval.position(idx);
        eval.advance(idx);
        if (std::abs(q[2]) > 1e-12 || !eval.inside_margin(q, r / dx)) continue;
        ++wanted;
        for (const auto& p : est.points)
            if (norm(p - q) <= dx + 1e-12) {
                ++covered;
                break;
            }
    }
    CHECK(wanted > 0);
    CHECK(covered == wanted);
}

TEST_CASE("blowup set of a bounded family is empty") {
    std::vector<DiscreteVarifold> family;
    for (int i = 0; i < 6; ++i) family.push_back(fixtures::disk_mesh(1.0, 8, 24));
    Grid eval = Grid::cube(3, -0.5, 0.5, 9);
    ThresholdSchedule sched{0.0, 1.0};
    auto est = blowup_set(family, 0.25, sched, eval);
    CHECK(est.points.empty());
}

TEST_CASE("blowup set is monotone in the schedule") {
    std::vector<DiscreteVarifold> family;
    for (int i = 1; i <= 8; ++i)
        family.push_back(fixtures::plane_mesh_uniform(1.2, 24, 0.0, static_cast<double>(i)));
    Grid eval = Grid::cube(3, -0.5, 0.5, 11);
    double r = 3 * eval.dx[0];
    auto small = blowup_set(family, r, {0.0, 0.05}, eval);
    auto large = blowup_set(family, r, {0.0, 0.15}, eval);
    CHECK(large.points.size() <= small.points.size());
    for (const auto& p : large.points) {
        bool found = false;
        for (const auto& q : small.points)
            if (norm(p - q) < 1e-12) found = true;
        CHECK(found);
    }
}

TEST_CASE("blowup set of the half-plane weighted family closes the half-plane") {
    std::vector<DiscreteVarifold> family;
    for (int i = 1; i <= 30; ++i)
        family.push_back(fixtures::plane_mesh(1.2, 32, 0.0, [i](const Vec& c) {
            return c[0] <= 0 ? static_cast<double>(i) : 1.0;
        }));
    Grid eval = Grid::cube(3, -0.6, 0.6, 17);
    double dx = eval.dx[0];
    double r = 1.2 * dx;
    ThresholdSchedule sched{0.0, 0.45 * pi * r * r};
    auto est = blowup_set(family, r, sched, eval, 2);
    CHECK(!est.points.empty());
    for (const auto& p : est.points) {
        CHECK(std::abs(p[2]) <= dx + 1e-12);
        CHECK(p[0] <= dx + 1e-12);
    }
    // The x = 0 edge itself is marked (closure).
    bool edge_marked = false;
    for (const auto& p : est.points)
        if (std::abs(p[0]) <= 1e-12 && std::abs(p[2]) <= 1e-12) edge_marked = true;
    CHECK(edge_marked);
}

TEST_CASE("graph-bump family: support collapse and C1 failure") {
    double prev = 1e9;
    for (int n : {1, 2, 4, 8}) {
        auto cx = counterexample_sequence(n, 0.05);
        double h = cx.support_hausdorff_to_axis();
        CHECK(h <= 1.0 / n + 1e-12);
        CHECK(h <= prev);
        prev = h;
        // Tangent-angle jump at the gluing points stays strictly positive.
        CHECK(cx.max_tangent_jump_near(1.0, 0.12) > 1e-9);
        CHECK(cx.max_tangent_jump_near(-1.0, 0.12) > 1e-9);
    }
}

TEST_CASE("graph-bump mass matches the quadrature oracle") {
    for (int n : {1, 3}) {
        auto cx = counterexample_sequence(n, 0.05);
        auto bump = [](double x) {
            return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
        };
        auto bump_d = [&](double x) {
            if (std::abs(x) >= 1.0) return 0.0;
            double s = 1.0 - x * x;
            return bump(x) * (-2.0 * x / (s * s));
        };
        double graph_len = oracle::simpson(
            [&](double x) { return std::sqrt(1.0 + bump_d(x) * bump_d(x) / (n * n)); }, -5.0, 5.0,
            20000);
        double axis_mass = oracle::simpson(
            [&](double x) {
                return std::abs(x) < 1.0 ? 1.0 : plateau_profile(std::abs(x)) - 1.0;
            },
            -5.0, 5.0, 20000);
        double expect = graph_len + axis_mass;
        CHECK(mass(cx.varifold, Region::all()) == doctest::Approx(expect).epsilon(0.005));
    }
}

TEST_CASE("curvature excess integral certifies the bounded-forcing family") {
    const double r = 1.0;
    const double cap = 1e-6;
    for (int i = 1; i <= 4; ++i) {
        auto sphere = fixtures::sphere_mesh(r, 24, 24, static_cast<double>(i));
        double excess =
            curvature_excess_integral(sphere, 2.0 / r, [&](const Vec&) { return 2.0 / r; });
        CHECK(excess <= cap);
    }
}

TEST_CASE("degenerate faces are rejected") {
    std::vector<Vec> v{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};  // collinear
    std::vector<std::vector<int>> f{{0, 1, 2}};
    CHECK_THROWS_AS(DiscreteVarifold::from_complex(3, 2, v, f, {1.0}), Error);
}
