#include "kinvsl/gallery.hpp"
#include "kinvsl/ktransform.hpp"
#include "kinvsl/schroeder.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace kinvsl;

namespace {

SLProblem triple_on_unit(const ExprFn& p) {
    SLProblem prob;
    Interval iv{0, 1};
    prob.p = p;
    prob.q = ExprFn::parse("0", {}, iv);
    prob.r = ExprFn::parse("1", {}, iv);
    prob.interval = iv;
    prob.singular = {0.0, 1.0};
    return prob;
}

KTransform moebius_K(double c, double A) {
    Interval iv{0, 1};
    KTransform K;
    K.A = ExprFn::constant(A, iv);
    K.phi = ExprFn::parse("(1+c)*x/(1+c*x)", {{"c", c}}, iv);
    K.phi_inv = ExprFn::parse("x/(1+c-c*x)", {{"c", c}}, iv);
    K.C = 1.0;
    K.interval = iv;
    return K;
}

} // namespace

TEST_CASE("verify_schroeder on the paper's P, the constant, and the weight") {
    auto e = make_example_3_9(1.0, 1.0);
    auto grid = uniform_grid(0.05, 0.95, 400);

    SECTION("P(x) = (1/mu)(1/x - 1) has eigenvalue 1+c under composition with phi^{-1}") {
        double res = verify_schroeder([&](double x) { return (*e.P)(x); },
                                      [&](double x) { return e.K.phi_inverse(x); },
                                      e.P_eigenvalue, grid);
        CHECK(res <= 1e-12);
    }
    SECTION("constants solve with eigenvalue 1") {
        double res = verify_schroeder([](double) { return 1.0; },
                                      [&](double x) { return e.K.phi_inverse(x); }, 1.0,
                                      grid);
        CHECK(res == 0.0);
    }
    SECTION("r = 1 solves the weight equation with s = C = 1") {
        double res = verify_schroeder([&](double x) { return e.problem.r(x); },
                                      [&](double x) { return e.K.phi_inverse(x); },
                                      e.K.C, grid);
        CHECK(res == 0.0);
    }
}

TEST_CASE("koenigs construction at the attracting fixed point of phi_c") {
    auto e = make_example_3_9(1.0, 1.0);
    auto phi = [&](double x) { return e.K.phi(x); };
    auto dphi = [&](double x) { return e.K.phi.d1(x); };

    SECTION("sigma solves Schroeder's equation with eigenvalue phi'(1) = 1/2") {
        auto grid = uniform_grid(0.1, 0.9, 200);
        auto sigma = [&](double x) {
            return koenigs_value(phi, dphi, 1.0, x, {40, 1e-13});
        };
        double res = verify_schroeder(sigma, phi, 0.5, grid);
        CHECK(res <= 1e-9);
    }
    SECTION("identity map is rejected (eigenvalue 1)") {
        CHECK_THROWS_AS(koenigs_value([](double x) { return x; },
                                      [](double) { return 1.0; }, 0.5, 0.3),
                        NumericError);
    }
    SECTION("rescaled sigma reproduces P on [0.2, 0.9]") {
        double anchor = 0.5;
        auto P = [](double x) { return 1.0 / x - 1.0; };
        double scale =
            P(anchor) / koenigs_value(phi, dphi, 1.0, anchor, {200, 1e-15});
        for (double x : uniform_grid(0.2, 0.9, 141)) {
            double sx = scale * koenigs_value(phi, dphi, 1.0, x, {200, 1e-15});
            REQUIRE(std::abs(sx - P(x)) <= 1e-8);
        }
    }
    SECTION("residual decreases monotonically with depth") {
        auto grid = uniform_grid(0.15, 0.85, 60);
        double prev = inf;
        for (int k : {3, 6, 12, 24, 48}) {
            auto sigma = [&](double x) {
                return koenigs_value(phi, dphi, 1.0, x, {k, 0.0});
            };
            double res = verify_schroeder(sigma, phi, 0.5, grid);
            REQUIRE(res <= prev * (1 + 1e-12) + 1e-15);
            prev = res;
        }
    }
}

TEST_CASE("power family: P_n, A_n and the induced p_n") {
    auto e = make_example_3_9(1.0, 1.0);
    Interval iv{0, 1};

    SECTION("n=2 reproduces the closed form p_2 = x^3 (1-x)^{-1} / 2, A = 1+c") {
        auto fam = family_power(*e.P, std::sqrt(2.0), 2, iv);
        CHECK(fam.A_n == Catch::Approx(2.0).margin(1e-14));
        for (double x : uniform_grid(0.05, 0.95, 101)) {
            double expect = 0.5 * x * x * x / (1.0 - x);
            REQUIRE(fam.p_n(x) == Catch::Approx(expect).epsilon(1e-12));
        }
    }
    SECTION("n=1 is the identity on the seed") {
        auto fam = family_power(*e.P, std::sqrt(2.0), 1, iv);
        CHECK(fam.A_n == Catch::Approx(std::sqrt(2.0)).margin(1e-15));
        for (double x : uniform_grid(0.05, 0.95, 51)) {
            REQUIRE(fam.p_n(x) == Catch::Approx(e.problem.p(x)).epsilon(1e-12));
            REQUIRE(fam.P_n(x) == Catch::Approx((*e.P)(x)).epsilon(1e-12));
        }
    }
    SECTION("generated triples pass the coefficient equations, n = 1..3") {
        for (int n = 1; n <= 3; ++n) {
            auto fam = family_power(*e.P, std::sqrt(2.0), n, iv);
            SLProblem prob = triple_on_unit(fam.p_n);
            KTransform K = moebius_K(1.0, fam.A_n);
            auto res = residual_coefficient_eqs(prob, K, residual_grid(prob, 500));
            REQUIRE(res.res_p <= 1e-10);
        }
    }
    SECTION("schroeder residual of P^n with eigenvalue A^{2n}, n <= 4") {
        auto grid = uniform_grid(0.05, 0.95, 300);
        double seed_res = verify_schroeder([&](double x) { return (*e.P)(x); },
                                           [&](double x) { return e.K.phi_inverse(x); },
                                           2.0, grid);
        REQUIRE(seed_res <= 1e-12);
        for (int n = 1; n <= 4; ++n) {
            auto fam = family_power(*e.P, std::sqrt(2.0), n, iv);
            double res = verify_schroeder([&](double x) { return fam.P_n(x); },
                                          [&](double x) { return e.K.phi_inverse(x); },
                                          std::pow(2.0, n), grid);
            REQUIRE(res <= 1e-10);
        }
    }
}

TEST_CASE("periodic family: modulation by a log-periodic factor") {
    auto e = make_example_3_9(1.0, 1.0);
    Interval iv{0, 1};
    double lnA2 = std::log(2.0);  // ln(A_c^2), c = 1

    SECTION("G = 1 returns the seed coefficient") {
        ExprFn G = ExprFn::parse("1", {}, {});
        auto fam = family_periodic(*e.P, G, std::sqrt(2.0), iv);
        for (double x : uniform_grid(0.05, 0.95, 51))
            REQUIRE(fam.p_tilde(x) == Catch::Approx(e.problem.p(x)).epsilon(1e-12));
    }
    SECTION("low-offset modulation violates positivity and is rejected") {
        ExprFn G = ExprFn::parse("2+sin(2*pi*x/lna2)", {{"pi", pi}, {"lna2", lnA2}}, {});
        CHECK_THROWS_AS(family_periodic(*e.P, G, std::sqrt(2.0), iv), NumericError);
    }
    SECTION("high-offset modulation passes and satisfies the p-equation") {
        ExprFn G = ExprFn::parse("12+sin(2*pi*x/lna2)", {{"pi", pi}, {"lna2", lnA2}}, {});
        auto fam = family_periodic(*e.P, G, std::sqrt(2.0), iv);
        SLProblem prob = triple_on_unit(fam.p_tilde);
        KTransform K = moebius_K(1.0, std::sqrt(2.0));
        auto res = residual_coefficient_eqs(prob, K, residual_grid(prob, 500));
        CHECK(res.res_p <= 1e-9);

        // the modulated antiderivative still solves Schroeder's equation
        auto grid = uniform_grid(0.05, 0.95, 300);
        double sres = verify_schroeder([&](double x) { return fam.P_tilde(x); },
                                       [&](double x) { return e.K.phi_inverse(x); }, 2.0,
                                       grid);
        CHECK(sres <= 1e-10);
    }
}

TEST_CASE("integrated q-form: Q(phi^{-1}) = A^{-2} Q on the power triples") {
    // Q' = q anchored at Q(0) = 0; the eigenvalue orientation that the
    // gallery satisfies is s = A^{-2} in f(phi^{-1}(x)) = s f(x).
    auto grid = uniform_grid(0.05, 0.95, 300);
    for (int n = 1; n <= 3; ++n) {
        auto e = make_example_3_10(n, 0.5, 1.0, 1.0);
        REQUIRE(e.Q.has_value());
        double res = verify_schroeder([&](double x) { return (*e.Q)(x); },
                                      [&](double x) { return e.K.phi_inverse(x); },
                                      e.Q_eigenvalue, grid);
        REQUIRE(res <= 1e-10);
        // the opposite orientation fails for A != 1: recorded, not resolved
        double res_flip = verify_schroeder([&](double x) { return (*e.Q)(x); },
                                           [&](double x) { return e.K.phi_inverse(x); },
                                           1.0 / e.Q_eigenvalue, grid);
        REQUIRE(res_flip > 1e-2);
    }
}

TEST_CASE("Q matches the antiderivative of q numerically") {
    for (int n = 1; n <= 3; ++n) {
        auto e = make_example_3_10(n, 0.5, 1.0, 1.0);
        for (double x : {0.2, 0.5, 0.8}) {
            double integral = integrate([&](double t) { return e.problem.q(t); }, 1e-9, x);
            REQUIRE((*e.Q)(x) == Catch::Approx(integral).epsilon(1e-8));
        }
    }
}
