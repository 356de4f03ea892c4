#include "kinvsl/gallery.hpp"
#include "kinvsl/lgtransform.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace kinvsl;

TEST_CASE("xi map: closed forms and round trips") {
    SECTION("example 3.10 n=1 with the displayed anchor: xi = -ln(x)/sqrt(mu)") {
        for (double mu : {1.0, 4.0}) {
            auto e = make_example_3_10(1, 0.0, mu, 1.0);
            auto map = lg_build(e.problem, 1.0, -1);
            for (double x : uniform_grid(0.01, 0.999, 87))
                REQUIRE(map.xi(x) ==
                        Catch::Approx(-std::log(x) / std::sqrt(mu)).margin(1e-11));
        }
    }
    SECTION("p = r = 1: xi = x - k") {
        SLProblem prob;
        Interval iv{0, 1};
        prob.p = ExprFn::parse("1", {}, iv);
        prob.q = ExprFn::parse("0", {}, iv);
        prob.r = ExprFn::parse("1", {}, iv);
        prob.interval = iv;
        auto map = lg_build(prob, 0.25, 1);
        for (double x : uniform_grid(0.02, 0.98, 49))
            REQUIRE(map.xi(x) == Catch::Approx(x - 0.25).margin(1e-12));
    }
    SECTION("x_of_xi inverts xi on 500 points") {
        auto e = make_example_3_10(1, 1.0, 4.0, 3.0);
        auto map = lg_build(e.problem, 1.0, -1);
        for (double x : uniform_grid(0.005, 0.995, 500)) {
            double back = map.x_of_xi(map.xi(x));
            REQUIRE(std::abs(back - x) <= 1e-10 * (1 + std::abs(x)));
        }
    }
    SECTION("interior (pr) zero is rejected") {
        SLProblem prob;
        Interval iv{-1, 1};
        prob.p = ExprFn::parse("x^2", {}, iv);  // vanishes at the interior 0
        prob.q = ExprFn::parse("0", {}, iv);
        prob.r = ExprFn::parse("1", {}, iv);
        prob.interval = iv;
        CHECK_THROWS_AS(lg_build(prob, 0.5, 1), NumericError);
    }
}

TEST_CASE("transformed potential") {
    SECTION("example 3.10 (n=1, mu=4) maps onto the Bessel-type potential") {
        double mu = 4.0, gamma = 1.0;
        auto e = make_example_3_10(1, gamma, mu, 1.0);
        auto map = lg_build(e.problem, 1.0, -1);
        auto V = lg_potential(e.problem, map);
        for (double xi : uniform_grid(0.05, 10.0, 200)) {
            double expect = gamma / sqr(1.0 - std::exp(-std::sqrt(mu) * xi)) + mu / 4;
            REQUIRE(V(xi) == Catch::Approx(expect).epsilon(1e-10));
        }
    }
    SECTION("p = r = 1 leaves q unchanged") {
        SLProblem prob;
        Interval iv{0, 1};
        prob.p = ExprFn::parse("1", {}, iv);
        prob.q = ExprFn::parse("sin(3*x)+2", {}, iv);
        prob.r = ExprFn::parse("1", {}, iv);
        prob.interval = iv;
        auto map = lg_build(prob, 0.5, 1);
        auto V = lg_potential(prob, map);
        for (double x : uniform_grid(0.05, 0.95, 61))
            REQUIRE(V.at_x(x) == Catch::Approx(prob.q(x)).margin(1e-12));
    }
    SECTION("example 3.9 (gamma = 0 seed) gives the constant mu/4") {
        auto e = make_example_3_9(4.0, 3.0);
        auto map = lg_build(e.problem, 1.0, -1);
        auto V = lg_potential(e.problem, map);
        for (double xi : uniform_grid(0.1, 8.0, 40))
            REQUIRE(V(xi) == Catch::Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("transformed K matches the closed forms of the Schrodinger example") {
    double mu = 4.0, c = 3.0;
    auto e311 = make_example_3_11(0.0, mu, c);

    SECTION("from example 3.9 (mu=4, c=3)") {
        auto e = make_example_3_9(mu, c);
        auto map = lg_build(e.problem, 1.0, -1);
        auto Kt = lg_transform_K(e.problem, e.K, map);
        for (double xi : uniform_grid(0.02, 12.0, 500)) {
            REQUIRE(std::abs(Kt.A(xi) - e311.K.A(xi)) <= 1e-9);
            REQUIRE(std::abs(Kt.phi(xi) - e311.K.phi(xi)) <= 1e-9);
        }
    }
    SECTION("identity K: A~ = C^{-1/4}, phi~ = id") {
        SLProblem prob;
        Interval iv{0, 1};
        prob.p = ExprFn::parse("1+x", {}, iv);
        prob.q = ExprFn::parse("0", {}, iv);
        prob.r = ExprFn::parse("2-x", {}, iv);
        prob.interval = iv;
        auto K = KTransform::identity(iv);
        K.C = 1.0;
        auto map = lg_build(prob, 0.5, 1);
        auto Kt = lg_transform_K(prob, K, map);
        for (double xi : uniform_grid(map.xi(0.05), map.xi(0.95), 31)) {
            REQUIRE(Kt.A(xi) == Catch::Approx(1.0).margin(1e-10));
            REQUIRE(Kt.phi(xi) == Catch::Approx(xi).margin(1e-10));
        }
    }
    SECTION("the transformed pair satisfies A~^2 phi~' = 1 to 1e-9") {
        auto e = make_example_3_10(1, 1.0, mu, c);
        auto map = lg_build(e.problem, 1.0, -1);
        auto Kt = lg_transform_K(e.problem, e.K, map);
        auto grid = uniform_grid(0.05, 10.0, 300);
        CHECK(residual_schrodinger_tilde(Kt, grid) <= 1e-9);
    }
}

TEST_CASE("unitarity surrogate: |G f|_{L^2(dxi)} = |f|_{L^2(r dx)}") {
    auto e = make_example_3_10(1, 1.0, 4.0, 1.0);
    auto map = lg_build(e.problem, 1.0, -1);
    auto f = bump_poly(0.5, 0.35);
    double nx = integrate([&](double x) { return sqr(f.f(x)) * e.problem.r(x); },
                          0.05, 0.95);
    // image of the support under xi (orientation -1 reverses order)
    double lo = map.xi(0.95), hi = map.xi(0.05);
    double nxi = integrate(
        [&](double xi) {
            double x = map.x_of_xi(xi);
            double w = std::sqrt(e.problem.p(x) * e.problem.r(x));
            return w * sqr(f.f(x));
        },
        lo, hi);
    CHECK(std::abs(nx - nxi) <= 1e-8 * (1 + nx));
}

TEST_CASE("conjugation invariance: K~* T~ K~ = T~ on the transformed side") {
    auto e = make_example_3_10(1, 1.0, 4.0, 3.0);
    auto map = lg_build(e.problem, 1.0, -1);
    auto Kt = lg_transform_K(e.problem, e.K, map);
    auto V = lg_potential(e.problem, map);
    for (const auto& t : {bump_poly(4.0, 2.5), bump_poly(5.0, 3.0, {0.0, 1.0})})
        REQUIRE(residual_operator_identity_tilde(V, Kt, t) <= 1e-5);
}

TEST_CASE("K~* from the adjoint formula matches the displayed composite") {
    double mu = 4.0, c = 3.0;
    auto e = make_example_3_9(mu, c);
    auto map = lg_build(e.problem, 1.0, -1);
    auto Kt = lg_transform_K(e.problem, e.K, map);
    // display: C^{-3/4} A(phi^{-1}(x(xi)))^{3/2} phi'(phi^{-1}(x(xi)))^{-3/4}
    //          f(xi(phi^{-1}(x(xi))));  adjoint formula:
    //          A~(eta)/(C~ phi~'(eta)) f(eta) at eta = phi~^{-1}(xi)
    auto f = [](double s) { return std::cos(0.7 * s); };
    for (double xi : uniform_grid(0.1, 8.0, 60)) {
        double eta = Kt.phi_inv(xi);
        double via_adjoint = Kt.A(eta) / (Kt.C_tilde * Kt.dphi(eta)) * f(eta);
        double x = map.x_of_xi(xi);
        double y = e.K.phi_inverse(x);
        double via_display = std::pow(e.K.C, -0.75) * std::pow(e.K.A(y), 1.5) *
                             std::pow(e.K.phi.d1(y), -0.75) * f(map.xi(y));
        REQUIRE(via_adjoint == Catch::Approx(via_display).epsilon(1e-9));
    }
}
