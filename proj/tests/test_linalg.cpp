#include <doctest.h>

#include <cmath>
#include <random>

#include "erdob/linalg.hpp"
#include "erdob/plant.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace erdob::linalg;
using support::max_abs_diff;
using support::to_mat;
using support::to_oracle;

TEST_CASE("kron of identity with a 2x2 gives the block diagonal") {
    const Mat a{{1, 2}, {3, 4}};
    const Mat k = kron(Mat::identity(2), a);
    const Mat expected{{1, 2, 0, 0}, {3, 4, 0, 0}, {0, 0, 1, 2}, {0, 0, 3, 4}};
    CHECK(k == expected);
}

TEST_CASE("kron of a row with identity") {
    const Mat k = kron(Mat{{1, 2}}, Mat::identity(2));
    CHECK(k == Mat{{1, 0, 2, 0}, {0, 1, 0, 2}});
}

TEST_CASE("kron matches the brute-force index formula") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = oracle::random_matrix(rng, 3, 2);
        const auto b = oracle::random_matrix(rng, 2, 2);
        CHECK(max_abs_diff(kron(to_mat(a), to_mat(b)), to_mat(oracle::kron(a, b))) == 0.0);
    }
}

TEST_CASE("kron is linear in its first argument") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = to_mat(oracle::random_matrix(rng, 2, 3));
        const Mat b = to_mat(oracle::random_matrix(rng, 3, 2));
        // Power-of-two factors scale without rounding, so equality is bitwise.
        const double exact = std::ldexp(trial % 2 ? -1.0 : 1.0, static_cast<int>(rng() % 9) - 4);
        CHECK(kron(a * exact, b) == kron(a, b) * exact);
        const double alpha = std::uniform_real_distribution<double>(-3, 3)(rng);
        CHECK(max_abs_diff(kron(a * alpha, b), kron(a, b) * alpha) <= 4e-16 * 3.0);
    }
}

TEST_CASE("pinv small cases") {
    CHECK(pinv(Mat::identity(2)) == Mat::identity(2));
    CHECK(pinv(Mat{{1}, {0}}) == Mat{{1, 0}});
}

TEST_CASE("pinv of the two-mass disturbance map inverts it from the left") {
    const Mat d = erdob::example2().plant.dist_map;
    CHECK(max_abs_diff(pinv(d) * d, Mat::identity(2)) < 1e-12);
}

TEST_CASE("pinv is a left inverse for random well-conditioned tall matrices") {
    std::mt19937_64 rng(13);
    int tested = 0;
    while (tested < 100) {
        const std::size_t cols = 1 + rng() % 3;
        const std::size_t rows = cols + rng() % 3;
        const Mat a = to_mat(oracle::random_matrix(rng, rows, cols));
        const Vec ev = eig_sym(a.transpose() * a);
        if (ev.front() <= 0 || ev.back() / ev.front() > 1e12) {  // cond(A)² bound
            continue;
        }
        CHECK(max_abs_diff(pinv(a) * a, Mat::identity(cols)) < 1e-10);
        ++tested;
    }
}

TEST_CASE("pinv rejects dependent columns and wide matrices") {
    CHECK_THROWS_AS(pinv(Mat{{1, 2}, {2, 4}, {3, 6}}), RankDeficientError);
    CHECK_THROWS_AS(pinv(Mat{{1, 2, 3}}), LinalgError);
}

TEST_CASE("vec_cols stacks columns") {
    const Vec v = vec_cols(Mat{{1, 2}, {3, 4}});
    CHECK(v == Vec{1, 3, 2, 4});
}

TEST_CASE("unvec inverts vec_cols") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t r = 1 + rng() % 5;
        const std::size_t c = 1 + rng() % 5;
        const Mat a = to_mat(oracle::random_matrix(rng, r, c));
        CHECK(unvec(vec_cols(a), r, c) == a);
    }
}

TEST_CASE("vec identity holds for random conformable triples") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 1 + rng() % 4, q = 1 + rng() % 4, r = 1 + rng() % 4, s = 1 + rng() % 4;
        const Mat a = to_mat(oracle::random_matrix(rng, p, q));
        const Mat b = to_mat(oracle::random_matrix(rng, q, r));
        const Mat c = to_mat(oracle::random_matrix(rng, r, s));
        const Vec lhs = vec_cols(a * b * c);
        const Vec rhs = kron(c.transpose(), a) * vec_cols(b);
        CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("observer regressor form equals the direct product D*S*F*eps_bar") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat d = to_mat(oracle::random_matrix(rng, 4, 2));
        const Mat s = to_mat(oracle::random_matrix(rng, 2, 2));
        const Mat eb = to_mat(oracle::random_matrix(rng, 4, 1));
        const Mat f = pinv(d);
        const Vec fe = f * eb.data();
        const Vec lhs = kron(Mat::row(fe), d) * vec_cols(s);
        const Vec rhs = d * (s * fe);
        CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("min_eig_sym simple cases") {
    const Vec diag{1, 2, 3};
    CHECK(min_eig_sym(Mat::diag(diag)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(min_eig_sym(Mat(3, 3)) == 0.0);
    CHECK(max_eig_sym(Mat::diag(diag)) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("min_eig_sym agrees with bisection on the characteristic polynomial") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng() % 3;
        const auto b = oracle::random_matrix(rng, n + 1, n);
        const auto g = oracle::mul(oracle::transpose(b), b);
        CHECK(min_eig_sym(to_mat(g)) == doctest::Approx(oracle::min_eig_bisection(g)).epsilon(1e-9));
    }
}

TEST_CASE("eig_sym rejects asymmetric input") {
    CHECK_THROWS_AS(eig_sym(Mat{{1, 2}, {0, 1}}), AsymmetricError);
}

TEST_CASE("spectral_norm") {
    CHECK(spectral_norm(Mat::identity(3)) == doctest::Approx(1.0).epsilon(1e-14));
    const Vec diag{3, -4};
    CHECK(spectral_norm(Mat::diag(diag)) == doctest::Approx(4.0).epsilon(1e-14));
    const Mat d = erdob::example2().plant.dist_map;
    const auto g = oracle::mul(oracle::transpose(to_oracle(d)), to_oracle(d));
    // Closed-form largest eigenvalue of the symmetric 2x2 DᵀD.
    const double half_tr = 0.5 * (g[0][0] + g[1][1]);
    const double lmax = half_tr + std::sqrt(half_tr * half_tr - oracle::det(g));
    CHECK(spectral_norm(d) == doctest::Approx(std::sqrt(lmax)).epsilon(1e-9));
}

TEST_CASE("solve with partial pivoting") {
    const Mat a{{0, 1}, {1, 0}};
    const Mat x = solve(a, Mat{{2}, {3}});
    CHECK(x == Mat{{3}, {2}});
    CHECK_THROWS_AS(solve(Mat{{1, 1}, {1, 1}}, Mat{{1}, {1}}), RankDeficientError);
}

TEST_CASE("rk4 leaves a constant state unchanged") {
    const Vec c{1.5, -2.0};
    const Vec y = rk4_step([](double, const Vec& v) { return Vec(v.size(), 0.0); }, 0.0, c, 1e-3);
    CHECK(y == c);
}

TEST_CASE("rk4 matches the exponential over one step") {
    const double a = 2.0;
    const double h = 1e-3;
    const Vec y = rk4_step([a](double, const Vec& v) { return Vec{-a * v[0]}; }, 0.0, Vec{1.0}, h);
    CHECK(std::abs(y[0] - std::exp(-a * h)) < 1e-10);
}

TEST_CASE("rk4 preserves the norm of a rotation") {
    const Mat s{{0, 2}, {-2, 0}};
    Vec y{1.0, 0.0};
    const double h = 1e-3;
    for (int k = 0; k < 1000; ++k) {
        y = rk4_step([&](double, const Vec& v) { return s * v; }, k * h, y, h);
    }
    CHECK(std::abs(norm(y) - 1.0) < 1e-9);
    CHECK(std::abs(y[0] - std::cos(2.0)) < 1e-9);
    CHECK(std::abs(y[1] + std::sin(2.0)) < 1e-9);
}

TEST_CASE("rk4 converges at fourth order") {
    const double a = 2.0;
    auto err = [a](double h) {
        Vec y{1.0};
        const int steps = static_cast<int>(std::lround(1.0 / h));
        for (int k = 0; k < steps; ++k) {
            y = rk4_step([a](double, const Vec& v) { return Vec{-a * v[0]}; }, k * h, y, h);
        }
        return std::abs(y[0] - std::exp(-a));
    };
    const double e1 = err(0.1);
    const double e2 = err(0.05);
    CHECK(e1 / e2 >= 14.0);
    CHECK(std::log2(e1 / e2) >= 3.8);
}

TEST_CASE("rk4 reports non-finite stages") {
    auto bad = [](double, const Vec&) { return Vec{std::nan("")}; };
    CHECK_THROWS_AS(rk4_step(bad, 0.0, Vec{1.0}, 1e-3), NonFiniteError);
}

TEST_CASE("matrix text form") {
    CHECK(to_string(Mat{{1, 2}, {3, 4}}) == "1, 2; 3, 4");
}
