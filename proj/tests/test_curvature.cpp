#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mh/curvature.hpp"
#include "mh/fixtures.hpp"
#include "mh/rng.hpp"

using namespace mh;
using fixtures::pi;

TEST_CASE("level set curvatures: plane, sphere, cylinder") {
    Grid g = Grid::cube(3, -1.3, 1.3, 97);

    ScalarField plane = signed_distance_exact(g, fixtures::halfspace_sdf(2, 0.0));
    auto cp = level_set_curvatures(plane, {0.2, -0.1, 0.0});
    for (double k : cp.kappa.values) CHECK(std::abs(k) <= 1e-9);

    const double r = 1.0;
    ScalarField sphere = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, r));
    Rng rng(5);
    for (int t = 0; t < 6; ++t) {
        Vec p = r * rng.unit_vec(3);
        auto c = level_set_curvatures(sphere, p);
        for (double k : c.kappa.values) CHECK(k == doctest::Approx(1.0 / r).epsilon(0.03));
        // second fundamental form eigenvalues coincide with the kappas
        auto again = c.second_form.principal();
        for (std::size_t i = 0; i < again.values.size(); ++i)
            CHECK(again.values[i] == c.kappa.values[i]);
    }

    ScalarField cyl = signed_distance_exact(g, fixtures::cylinder_sdf(0.8));
    auto cc = level_set_curvatures(cyl, {0.8, 0.0, 0.3});
    CHECK(cc.kappa.values[0] == doctest::Approx(0.0).scale(1.0).epsilon(0.02));
    CHECK(cc.kappa.values[1] == doctest::Approx(1.0 / 0.8).epsilon(0.03));
}

TEST_CASE("flipping the region sign negates every curvature") {
    Grid g = Grid::cube(3, -1.3, 1.3, 65);
    ScalarField sphere = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, 1.0));
    auto pos = level_set_curvatures(sphere, {1.0, 0.0, 0.0});
    auto neg = level_set_curvatures(negated(sphere), {1.0, 0.0, 0.0});
    for (std::size_t k = 0; k < pos.kappa.values.size(); ++k)
        CHECK(neg.kappa.values[k] ==
              doctest::Approx(-pos.kappa.values[pos.kappa.values.size() - 1 - k]).epsilon(1e-6));
}

TEST_CASE("degenerate gradient near the cut locus is rejected") {
    Grid g = Grid::cube(3, -1.3, 1.3, 33);
    ScalarField sphere = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, 1.0));
    CHECK_THROWS_AS(level_set_curvatures(sphere, {0.0, 0.0, 0.0}), Error);
}

TEST_CASE("barrier check: plane through a ball flags the contact circle") {
    Grid g = Grid::cube(3, -1.4, 1.4, 65);
    const double r = 1.0;
    ScalarField ball = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, r));
    // Z: the equatorial disk of the ball, sampled.
    std::vector<Vec> z;
    for (const Vec& p : fixtures::sample_plane(3, 2, 0.0, r, 0.05))
        if (norm(p) <= r) z.push_back(p);
    auto rep = barrier_check(z, ball, 2, 0.0);
    CHECK(rep.contact);
    CHECK(rep.max_excess == doctest::Approx(2.0 / r).epsilon(0.05));
    CHECK_FALSE(rep.pass());
}

TEST_CASE("barrier check: plane touching a slab face passes") {
    Grid g = Grid::cube(3, -1.2, 1.2, 65);
    const double d = 0.5;
    ScalarField slab = signed_distance_exact(g, fixtures::slab_sdf(2, d));
    std::vector<Vec> z = fixtures::sample_plane(3, 2, d, 0.8, 0.05);
    auto rep = barrier_check(z, slab, 2, 0.0, 1e-6);
    CHECK(rep.contact);
    CHECK(rep.max_excess <= 1e-6);
    CHECK(rep.pass());
}

TEST_CASE("barrier check: coincident spheres have zero excess") {
    Grid g = Grid::cube(3, -1.4, 1.4, 97);
    const double r = 1.0;
    ScalarField ball = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, r));
    std::vector<Vec> z = fixtures::sample_sphere(3, {0, 0, 0}, r, 0.1);
    auto rep = barrier_check(z, ball, 2, 2.0 / r, 0.03 * 2.0 / r);
    CHECK(rep.contact);
    CHECK(std::abs(rep.max_excess) <= 0.03 * 2.0 / r);
    CHECK(rep.pass());
}

TEST_CASE("barrier check reports no contact when Z is interior") {
    Grid g = Grid::cube(3, -1.2, 1.2, 33);
    ScalarField ball = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, 1.0));
    std::vector<Vec> z = fixtures::sample_sphere(3, {0, 0, 0}, 0.3, 0.1);
    auto rep = barrier_check(z, ball, 2, 0.0);
    CHECK_FALSE(rep.contact);
    CHECK(rep.pass());
}

TEST_CASE("barrier check rejects Z outside N") {
    Grid g = Grid::cube(3, -1.2, 1.2, 33);
    ScalarField ball = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, 0.5));
    std::vector<Vec> z{{0.9, 0.0, 0.0}};
    CHECK_THROWS_AS(barrier_check(z, ball, 2, 0.0), Error);
}

TEST_CASE("riccati integrator matches the flat closed form") {
    const double r = 1.0;
    SpaceFormAmbient flat{3, 0.0};
    SymMatrix b0 = (1.0 / r) * SymMatrix::identity(2);
    for (double s : {0.1, 0.3, 0.6}) {
        SymMatrix bs = riccati_propagate(b0, flat, s);
        EigenSystem es = eigh(bs);
        double expect = 1.0 / (r - s);
        for (double v : es.values) CHECK(std::abs(v - expect) <= tol::riccati_rel * expect);
        CHECK(std::abs(riccati_closed_form(1.0 / r, 0.0, s) - expect) <= 1e-14 * expect);
    }

    // Flat plane stays flat.
    SymMatrix zero(2);
    SymMatrix z1 = riccati_propagate(zero, flat, 1.7);
    CHECK(z1.frobenius() <= 1e-12);
}

TEST_CASE("riccati integrator matches the K = 1 closed form") {
    SpaceFormAmbient sphere_form{2, 1.0};
    for (double k0 : {0.0, 0.7, -0.4}) {
        SymMatrix b0(1);
        b0.set(0, 0, k0);
        for (double s : {0.2, 0.5}) {
            SymMatrix bs = riccati_propagate(b0, sphere_form, s);
            double expect = std::tan(s + std::atan(k0));
            CHECK(std::abs(bs(0, 0) - expect) <= tol::riccati_rel * std::max(1.0, std::abs(expect)));
            CHECK(riccati_closed_form(k0, 1.0, s) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("riccati closed form for K < 0 solves the ODE") {
    // Spot-check against a fine independent RK4 on the scalar equation.
    const double K = -1.0;
    for (double k0 : {0.3, -0.5, 1.4}) {
        double k = k0;
        const int steps = 20000;
        const double s = 0.8, h = s / steps;
        for (int i = 0; i < steps; ++i) {
            auto f = [&](double x) { return K + x * x; };
            double a = f(k), b = f(k + 0.5 * h * a), c = f(k + 0.5 * h * b), d = f(k + h * c);
            k += h / 6.0 * (a + 2 * b + 2 * c + d);
        }
        CHECK(riccati_closed_form(k0, K, s) == doctest::Approx(k).epsilon(1e-8));
    }
}

TEST_CASE("riccati blow-up is detected with the right distance") {
    SpaceFormAmbient flat{3, 0.0};
    SymMatrix b0 = 2.0 * SymMatrix::identity(2);  // blow-up at s = 0.5
    try {
        riccati_propagate(b0, flat, 0.7);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == errc::curvature_blowup);
        CHECK(e.payload() == doctest::Approx(0.5).epsilon(0.02));
    }
    CHECK_THROWS_AS(riccati_closed_form(2.0, 0.0, 0.6), Error);
    CHECK_THROWS_AS(riccati_closed_form(0.5, 1.0, 1.2), Error);
}

TEST_CASE("comparison check on propagated spheres and equality case") {
    SpaceFormAmbient flat{3, 0.0};
    const double r = 1.0, d = 0.4;
    SymMatrix bp = (1.0 / r) * SymMatrix::identity(2);
    SymMatrix bq = riccati_propagate(bp, flat, d);
    auto rep = comparison_check(bp, bq, flat, d, 2);
    CHECK(rep.all());
    CHECK(rep.eigenvalue_slack == doctest::Approx(d / (r * (r - d))).epsilon(1e-6));

    SymMatrix zero(2);
    auto eq = comparison_check(zero, zero, flat, 0.5, 1);
    CHECK(eq.all());
    CHECK(eq.eigenvalue_slack == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    // K = 1, kappa0 = 0, d = 0.5: slack tan(0.5) - 0.5.
    SpaceFormAmbient curved{2, 1.0};
    SymMatrix s0(1);
    SymMatrix s1 = riccati_propagate(s0, curved, 0.5);
    auto cr = comparison_check(s0, s1, curved, 0.5, 1);
    CHECK(cr.all());
    CHECK(cr.eigenvalue_slack == doctest::Approx(std::tan(0.5) - 0.5).epsilon(1e-6));
}

TEST_CASE("propagation preserves dominance on 200 ordered pairs") {
    Rng rng(333);
    int checked = 0;
    while (checked < 200) {
        int dim = 1 + static_cast<int>(rng.next_u64() % 3);
        SpaceFormAmbient ambient{dim + 1, rng.uniform(-1.0, 1.0)};
        SymMatrix a(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) a.set(i, j, rng.uniform(-0.4, 0.25));
        SymMatrix b = a;
        int rank = 1 + static_cast<int>(rng.next_u64() % 2);
        for (int k = 0; k < rank; ++k) {
            Vec v = rng.normal_vec(dim);
            double scale = 0.2 * rng.uniform();
            for (double& x : v) x *= scale;
            b = b.plus_outer(v);
        }
        double d = rng.uniform(0.05, 0.3);
        SymMatrix pa(dim), pb(dim);
        try {
            pa = riccati_propagate(a, ambient, d);
            pb = riccati_propagate(b, ambient, d);
        } catch (const Error&) {
            continue;  // blow-up before d: draw another pair
        }
        CHECK(dominance_check(pa, pb).dominated);
        ++checked;
    }
}

TEST_CASE("trace derivative bound along propagated solutions") {
    Rng rng(91);
    SpaceFormAmbient ambient{4, 0.3};
    const int dim = 3;
    for (int t = 0; t < 20; ++t) {
        SymMatrix b(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) b.set(i, j, rng.uniform(-0.3, 0.3));
        double s = 0.25;
        double h = 1e-4;
        SymMatrix bs = riccati_propagate(b, ambient, s);
        SymMatrix bs2 = riccati_propagate(b, ambient, s + h);
        double dtrace = (bs2.trace() - bs.trace()) / h;
        double bound = dim * ambient.K + bs.trace() * bs.trace() / dim;
        CHECK(dtrace >= bound - 1e-3 * std::max(1.0, std::abs(bound)));
    }
}

TEST_CASE("shrink_for_propagation moves curvatures toward zero") {
    SymMatrix b = SymMatrix::diag({-0.5, 0.0, 0.8});
    SymMatrix s = shrink_for_propagation(b, 1.0);
    EigenSystem es = eigh(s);
    CHECK(es.values[0] == doctest::Approx(-0.5 + tol::cut_locus_shrink_rel).epsilon(1e-9));
    CHECK(es.values[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(es.values[2] == doctest::Approx(0.8 - tol::cut_locus_shrink_rel).epsilon(1e-9));
}

TEST_CASE("converse barrier build on the translated singleton probe") {
    // Z = {0}; translated quadratic f(x) = |x - q|^2 with q = (-delta, 0, 0)
    // peaks on Z at the origin with gradient 2 delta e1.
    const double delta = 0.3;
    Vec q{-delta, 0.0, 0.0};
    TestFunction f = radial_quadratic_probe(q, 1.0);  // |x - q|^2
    // The sublevel region { f <= f(0) } is the ball of radius delta about q,
    // with Z = {0} sitting on its boundary.
    Grid g = Grid::cube(3, -1.0, 1.0, 97);
    std::vector<Vec> z{{0.0, 0.0, 0.0}};
    auto res = converse_barrier_build(z, {0.0, 0.0, 0.0}, f, 2, 0.0, g);
    CHECK(res.h_m == doctest::Approx(2.0 / delta).epsilon(0.05));
    CHECK(res.h_m > 0.0);
    CHECK(res.region_sdf.value({-delta, 0.0, 0.0}) < 0);  // q is inside N
}

TEST_CASE("converse barrier build refuses when there is no margin") {
    Grid g = Grid::cube(3, -1.0, 1.0, 33);
    TestFunction lin = quadratic_probe({0, 0, 0}, {1, 0, 0}, SymMatrix(3));
    std::vector<Vec> z = fixtures::sample_plane(3, 0, 0.0, 0.5, 0.1);
    CHECK_THROWS_AS(converse_barrier_build(z, {0.0, 0.0, 0.0}, lin, 2, 0.0, g), Error);
}

TEST_CASE("converse barrier build from the exp-barrier violation on the sphere") {
    const double r = 1.0;
    const double h = 2.0 / r - 0.2;
    Grid g = Grid::cube(3, -1.5, 1.5, 97);
    ScalarField u = signed_distance_exact(g, fixtures::sphere_sdf({0, 0, 0}, r));
    TestFunction f = exp_barrier_probe(u, 10.0 / r);
    std::vector<Vec> z = fixtures::sample_sphere(3, {0, 0, 0}, r, 0.1);
    Vec p = z.front();
    auto res = converse_barrier_build(z, p, f, 2, h, g);
    CHECK(res.h_m > h);
    CHECK(res.h_m <= 2.0 / r + 0.05 * 2.0 / r);
}
