#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mh/linalg.hpp"
#include "mh/rng.hpp"
#include "oracles.hpp"

using namespace mh;

namespace {

SymMatrix random_sym(Rng& rng, int n, double scale = 1.0) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) s.set(i, j, scale * rng.normal());
    return s;
}

}  // namespace

TEST_CASE("eigh identity and diagonal") {
    EigenSystem id = eigh(SymMatrix::identity(3));
    for (double v : id.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    EigenSystem d = eigh(SymMatrix::diag({5.0, -1.0, 0.0}));
    CHECK(d.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(d.values[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(d.values[2] == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("eigh rejects non-finite input") {
    SymMatrix s(2);
    s.set(0, 1, std::nan(""));
    CHECK_THROWS_AS(eigh(s), Error);
}

TEST_CASE("eigh matches characteristic-polynomial root oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);  // up to 6
        SymMatrix s = random_sym(rng, n);
        EigenSystem es = eigh(s);
        auto roots = oracle::eigenvalues_by_charpoly(s);
        REQUIRE(roots.size() == static_cast<std::size_t>(n));
        double scale = std::max(1.0, s.frobenius());
        for (int k = 0; k < n; ++k)
            CHECK(std::abs(es.values[static_cast<std::size_t>(k)] - roots[static_cast<std::size_t>(k)]) <=
                  tol::cross_oracle * scale);
    }
}

TEST_CASE("eigh reconstruction and orthonormality") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 7);
        SymMatrix s = random_sym(rng, n, 3.0);
        EigenSystem es = eigh(s);
        SymMatrix r = es.reconstruct();
        double err = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) err += (r(i, j) - s(i, j)) * (r(i, j) - s(i, j));
        CHECK(std::sqrt(err) <= tol::eig_reconstruction * std::max(1.0, s.frobenius()));
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                double want = a == b ? 1.0 : 0.0;
                CHECK(std::abs(dot(es.columns[static_cast<std::size_t>(a)],
                                   es.columns[static_cast<std::size_t>(b)]) -
                               want) <= tol::eig_orthonormal);
            }
    }
}

TEST_CASE("eigh deterministic for fixed input") {
    Rng rng(3);
    SymMatrix s = random_sym(rng, 5);
    EigenSystem a = eigh(s);
    EigenSystem b = eigh(s);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        CHECK(a.values[k] == b.values[k]);
        for (std::size_t i = 0; i < a.columns[k].size(); ++i)
            CHECK(a.columns[k][i] == b.columns[k][i]);
    }
}

TEST_CASE("trace_m basic values") {
    CHECK(trace_m(SymMatrix::identity(3), 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(trace_m(SymMatrix::diag({-1.0, 0.0, 5.0}), 2) == doctest::Approx(-1.0).epsilon(1e-14));
    // Hessian of x1 + x1^2 + sum_{i>2} xi^2 at 0 in R^3.
    SymMatrix h = SymMatrix::diag({2.0, 0.0, 2.0});
    CHECK(trace_m(h, 2) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(trace_m(h, 0), Error);
    CHECK_THROWS_AS(trace_m(h, 4), Error);
}

TEST_CASE("trace_m equals brute-force sort-and-sum") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        SymMatrix s = random_sym(rng, n);
        EigenSystem es = eigh(s);
        Vec vals = es.values;
        std::sort(vals.begin(), vals.end());
        double brute = 0;
        for (int k = 0; k < m; ++k) brute += vals[static_cast<std::size_t>(k)];
        CHECK(trace_m(s, m) == brute);  // same decomposition, exact
    }
}

TEST_CASE("trace_m affine shift identity") {
    CHECK(trace_m_of_shifted(SymMatrix::identity(3), 2, 1.0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(trace_m_of_shifted(SymMatrix::diag({-1.0, 0.0, 5.0}), 2, -2.0) ==
          doctest::Approx(-5.0).epsilon(1e-14));

    Rng rng(13);
    SymMatrix s = random_sym(rng, 5);
    CHECK(std::abs(trace_m_of_shifted(s, 3, 0.7) - (trace_m(s, 3) + 2.1)) <= tol::affine_identity);

    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        double t = rng.uniform(-3.0, 3.0);
        SymMatrix a = random_sym(rng, n);
        CHECK(std::abs(trace_m_of_shifted(a, m, t) - (trace_m(a, m) + m * t)) <=
              tol::affine_identity * std::max(1.0, a.frobenius()));
    }
}

TEST_CASE("trace_m concavity under averaging") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        SymMatrix a = random_sym(rng, n);
        SymMatrix b = random_sym(rng, n);
        double mid = trace_m(0.5 * (a + b), m);
        double avg = 0.5 * (trace_m(a, m) + trace_m(b, m));
        CHECK(mid >= avg - 1e-12 * std::max(1.0, a.frobenius() + b.frobenius()));
    }
}

TEST_CASE("dominance_check basics") {
    Rng rng(19);
    SymMatrix q = random_sym(rng, 4);

    DominanceReport eq = dominance_check(q, q);
    CHECK(eq.dominated);
    for (double g : eq.gaps) CHECK(g == 0.0);

    Vec v = rng.normal_vec(4);
    DominanceReport up = dominance_check(q, q.plus_outer(v));
    CHECK(up.dominated);

    DominanceReport down = dominance_check(q, q.plus_scaled_identity(-0.5));
    CHECK_FALSE(down.dominated);
    for (double g : down.gaps) CHECK(g < 0.0);

    CHECK_THROWS_AS(dominance_check(q, SymMatrix::identity(3)), Error);
}

TEST_CASE("dominance under PSD perturbation, 1000 random pairs") {
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        SymMatrix q = random_sym(rng, n);
        // PSD part as a sum of a few outer products.
        SymMatrix qp = q;
        int r = 1 + static_cast<int>(rng.next_u64() % 3);
        for (int k = 0; k < r; ++k) qp = qp.plus_outer(rng.normal_vec(n));
        CHECK(dominance_check(q, qp).dominated);
    }
}

TEST_CASE("eigenvalues of sH + d^T d dominate those of sH") {
    Rng rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 5);
        double s = rng.uniform(0.0, 2.0);
        SymMatrix h = random_sym(rng, n);
        Vec d = rng.normal_vec(n);
        SymMatrix sh = s * h;
        CHECK(dominance_check(sh, sh.plus_outer(d)).dominated);
    }
}

TEST_CASE("orthonormalize reduces metric eigenproblem to flat one") {
    Rng rng(31);
    SymMatrix h = random_sym(rng, 3);
    SymMatrix g = SymMatrix::identity(3);
    SymMatrix hg = orthonormalize(h, g);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(hg(i, j) == doctest::Approx(h(i, j)).epsilon(1e-12));

    // Conformal metric c*I scales eigenvalues by 1/c.
    SymMatrix gc = 4.0 * SymMatrix::identity(3);
    EigenSystem flat = eigh(h);
    EigenSystem scaled = eigh(orthonormalize(h, gc));
    for (int k = 0; k < 3; ++k)
        CHECK(scaled.values[static_cast<std::size_t>(k)] ==
              doctest::Approx(flat.values[static_cast<std::size_t>(k)] / 4.0).epsilon(1e-12));
}
