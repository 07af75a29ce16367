#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "erdob/plant.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace erdob;

namespace {

// Closed-form drift and input map of the first example.
Vec ex1_f(const Vec& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    return {x[0] + x[1] - x[0] * r2, -x[0] + x[1] - x[1] * r2};
}

// Two-mass system with unit masses and springs; last row of A as published.
Vec ex2_f(const Vec& x) { return {x[1], -2 * x[0] + x[2], x[3], -x[0] - x[2]}; }
Vec ex2_g_u(const Vec& u) { return {0, u[0], 0, u[1]}; }

}  // namespace

TEST_CASE("first example regressor layout") {
    const auto sc = example1();
    const Vec x{0.5, -1.5};
    const Vec u{2.0, 3.0};
    const double r2 = 0.25 + 2.25;
    const Vec z = sc.plant.regressor(x, u);
    CHECK(z == Vec{0.5, -1.5, 0.5 * r2, -1.5 * r2, 2.0, 3.0});
    CHECK(sc.plant.phi_star == Mat{{1, 1, -1, 0, 1, 0}, {-1, 1, 0, -1, 0, 1}});
}

TEST_CASE("regressor vanishes at the origin") {
    for (const auto& sc : {example1(), example2()}) {
        const Vec pz = sc.plant.phi_star * sc.plant.regressor(Vec(sc.plant.n, 0.0), Vec(sc.plant.m, 0.0));
        CHECK(linalg::norm(pz) == 0.0);
    }
}

TEST_CASE("weights times regressor equal f + g u on random points") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    const auto s1 = example1();
    const auto s2 = example2();
    for (int k = 0; k < 1000; ++k) {
        const Vec x1{box(rng), box(rng)};
        const Vec u1{box(rng), box(rng)};
        const Vec lhs1 = s1.plant.phi_star * s1.plant.regressor(x1, u1);
        const Vec f1 = ex1_f(x1);
        CHECK(oracle::max_abs_diff(lhs1, {f1[0] + u1[0], f1[1] + u1[1]}) < 1e-12);

        const Vec x2{box(rng), box(rng), box(rng), box(rng)};
        const Vec u2{box(rng), box(rng)};
        const Vec lhs2 = s2.plant.phi_star * s2.plant.regressor(x2, u2);
        const Vec rhs2 = linalg::add(ex2_f(x2), ex2_g_u(u2));
        CHECK(oracle::max_abs_diff(lhs2, rhs2) < 1e-12);
        CHECK(oracle::max_abs_diff(s2.plant.drift(x2), ex2_f(x2)) < 1e-12);
    }
}

TEST_CASE("cancelling input holds the state") {
    const auto sc = example1();
    const Vec x{0.3, -0.7};
    const Vec u = linalg::scale(sc.plant.drift(x), -1.0);
    const Vec dx = sc.plant.rhs(x, u, {0.0, 0.0});
    CHECK(linalg::norm(dx) < 1e-15);
}

TEST_CASE("second example disturbance direction") {
    const auto sc = example2();
    const Vec dx = sc.plant.rhs(Vec(4, 0.0), Vec(2, 0.0), {1.0, 0.0});
    // D's first column as printed in the model.
    CHECK(dx == Vec{0, 1, 0, 1});
}

TEST_CASE("first example hand-evaluated derivative") {
    const auto sc = example1();
    const Vec dx = sc.plant.rhs({1.0, 1.0}, {0.0, 0.0}, {0.0, 0.0});
    CHECK(dx == Vec{0.0, -2.0});
}

TEST_CASE("second example stiffness row") {
    const auto sc = example2();
    CHECK(sc.plant.phi_star(1, 0) == -2.0);
    CHECK(sc.plant.phi_star(1, 1) == 0.0);
    CHECK(sc.plant.phi_star(1, 2) == 1.0);
    CHECK(sc.plant.phi_star(1, 3) == 0.0);
}

TEST_CASE("second example reference at the origin of time") {
    const auto sc = example2();
    const Vec xd = sc.reference.value(0.0);
    CHECK(oracle::max_abs_diff(xd, {0, 1, 1, 0}) < 1e-15);
    const Vec rate = sc.reference.rate(0.0);
    CHECK(oracle::max_abs_diff(rate, {1, 0, 0, -1}) < 1e-15);
}

TEST_CASE("reference rate matches a central difference") {
    const auto sc = example1();
    const double h = 1e-5;
    for (double t : {0.0, 0.37, 1.9}) {
        const Vec fd = linalg::scale(linalg::sub(sc.reference.value(t + h), sc.reference.value(t - h)), 0.5 / h);
        CHECK(oracle::max_abs_diff(sc.reference.rate(t), fd) < 1e-8);
    }
}

TEST_CASE("exosystem at rest stays at rest") {
    const auto sc = example1();
    CHECK(sc.exo.rhs({0.0, 0.0}) == Vec{0.0, 0.0});
}

TEST_CASE("exosystem trajectory matches the rotation closed form") {
    const auto sc = example1();
    Vec y{1.0, 0.0};
    const double h = 1e-3;
    for (int k = 0; k < 3000; ++k) {
        y = linalg::rk4_step([&](double, const Vec& v) { return sc.exo.rhs(v); }, k * h, y, h);
    }
    CHECK(std::abs(y[0] - std::cos(6.0)) < 1e-9);
    CHECK(std::abs(y[1] + std::sin(6.0)) < 1e-9);
}

TEST_CASE("skew exosystem conserves the norm") {
    const auto sc = example2();
    Vec y{0.0, 1.0};
    const double h = 1e-3;
    for (int sec = 1; sec <= 10; ++sec) {
        for (int k = 0; k < 1000; ++k) {
            y = linalg::rk4_step([&](double, const Vec& v) { return sc.exo.rhs(v); }, k * h, y, h);
        }
        CHECK(std::abs(linalg::norm(y) - 1.0) < 1e-8 * sec);
    }
}

TEST_CASE("spectrum check separates marginal from stable exosystems") {
    CHECK(exosystem_spectrum(Mat{{0, 2}, {-2, 0}}).on_imaginary_axis);
    const auto stable = exosystem_spectrum(Mat{{-1, 0}, {0, -1}});
    CHECK_FALSE(stable.on_imaginary_axis);
    CHECK(stable.max_abs_real == doctest::Approx(1.0));
}

TEST_CASE("basis atoms parse and evaluate") {
    const Vec x{2.0, -3.0};
    CHECK(BasisAtom::parse("1", 2).eval(x) == 1.0);
    CHECK(BasisAtom::parse("x1*x2^2", 2).eval(x) == 18.0);
    CHECK(BasisAtom::parse("x2^3", 2).eval(x) == -27.0);
    CHECK(BasisAtom::parse("sin(x1)", 2).eval(x) == std::sin(2.0));
    CHECK(BasisAtom::parse("cos(x2)", 2).eval(x) == std::cos(-3.0));
    CHECK_THROWS_AS(BasisAtom::parse("x1^2*x2^2", 2), PlantError);
    CHECK_THROWS_AS(BasisAtom::parse("x3", 2), PlantError);
    CHECK_THROWS_AS(BasisAtom::parse("tan(x1)", 2), PlantError);
}

TEST_CASE("plant validation") {
    auto sc = example2();
    CHECK_NOTHROW(sc.plant.validate());
    auto dependent = sc;
    dependent.plant.dist_map = Mat{{1, 2}, {1, 2}, {0, 0}, {1, 2}};
    CHECK_THROWS_AS(dependent.plant.validate(), PlantError);
    auto offset = example1();
    offset.plant.xi = [](const Vec& x) { return Vec{x[0] + 1.0, x[1], 0.0, 0.0}; };
    CHECK_THROWS_AS(offset.plant.validate(), PlantError);
}

TEST_CASE("unknown scenario id") { CHECK_THROWS_AS(builtin_scenario("example3"), PlantError); }
