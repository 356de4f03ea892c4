#include "kinvsl/gallery.hpp"
#include "kinvsl/spectral.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace kinvsl;

namespace {

SLProblem laplace01(double qshift = 0.0) {
    SLProblem prob;
    Interval iv{0, 1};
    prob.p = ExprFn::parse("1", {}, iv);
    prob.q = qshift == 0.0 ? ExprFn::parse("0", {}, iv)
                           : ExprFn::constant(qshift, iv);
    prob.r = ExprFn::parse("1", {}, iv);
    prob.interval = iv;
    return prob;
}

} // namespace

TEST_CASE("classic -y'' eigenvalues on (0,1)") {
    auto prob = laplace01();
    SECTION("Dirichlet, N=1000: lambda_1 = pi^2 within 0.1%") {
        auto dx = discretize(prob, SeparatedBC{0.0, 0.0}, 1000, {0, 1});
        auto eig = eigen_smallest(dx, 1);
        CHECK(eig[0].lambda == Catch::Approx(pi * pi).epsilon(1e-3));
        CHECK(eig[0].residual <= 1e-12);
    }
    SECTION("Dirichlet, N=2000: first three of k^2 pi^2 within 0.5%") {
        auto dx = discretize(prob, SeparatedBC{0.0, 0.0}, 2000, {0, 1});
        auto eig = eigen_smallest(dx, 3);
        for (int k = 1; k <= 3; ++k)
            CHECK(eig[k - 1].lambda == Catch::Approx(k * k * pi * pi).epsilon(5e-3));
    }
    SECTION("Neumann: constant zero mode") {
        auto dx = discretize(prob, SeparatedBC{pi / 2, pi / 2}, 1000, {0, 1});
        auto eig = eigen_smallest(dx, 2);
        CHECK(std::abs(eig[0].lambda) <= 1e-8);
        CHECK(eig[1].lambda == Catch::Approx(pi * pi).epsilon(1e-3));
    }
    SECTION("shifting q shifts the whole spectrum exactly") {
        auto dx0 = discretize(prob, SeparatedBC{0.0, 0.0}, 300, {0, 1});
        auto prob1 = laplace01(1.0);
        auto dx1 = discretize(prob1, SeparatedBC{0.0, 0.0}, 300, {0, 1});
        auto e0 = eigen_smallest(dx0, 3);
        auto e1 = eigen_smallest(dx1, 3);
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(e1[k].lambda - e0[k].lambda - 1.0) <= 1e-10);
    }
    SECTION("coupled periodic conditions (R = I)") {
        auto dx = discretize(prob, CoupledBC{}, 1500, {0, 1});
        auto eig = eigen_smallest(dx, 3);
        CHECK(std::abs(eig[0].lambda) <= 1e-8);
        // the first nonzero periodic eigenvalue 4 pi^2 is double
        CHECK(eig[1].lambda == Catch::Approx(4 * pi * pi).epsilon(1e-2));
        CHECK(eig[2].lambda == Catch::Approx(4 * pi * pi).epsilon(1e-2));
    }
    SECTION("coupled antiperiodic conditions (R = -I): lowest is pi^2") {
        CoupledBC bc;
        bc.R = {{{-1, 0}, {0, -1}}};
        auto dx = discretize(prob, bc, 1500, {0, 1});
        auto eig = eigen_smallest(dx, 2);
        CHECK(eig[0].lambda == Catch::Approx(pi * pi).epsilon(1e-2));
        CHECK(eig[1].lambda == Catch::Approx(pi * pi).epsilon(1e-2));
    }
}

TEST_CASE("Bessel-type Schrodinger operator: Friedrichs floor and Krein zero mode") {
    auto e = make_example_3_11(0.0, 4.0, 3.0);

    SECTION("Dirichlet extension stays above mu/4 = 1") {
        auto dx = discretize(e.problem, SeparatedBC{0.0, 0.0}, 4000, {0, 20});
        auto eig = eigen_smallest(dx, 1);
        CHECK(eig[0].lambda >= 1.0 - 1e-3);
    }
    SECTION("Krein extension (cot alpha = 1 at 0): zero mode at N = 4000") {
        auto dx = discretize(e.problem, SeparatedBC{pi / 4, 0.0}, 4000, {0, 20});
        auto eig = eigen_smallest(dx, 1);
        CHECK(std::abs(eig[0].lambda) <= 5e-4);
        // eigenvector proportional to exp(-x) after sup normalization
        const auto& v = eig[0].vec;
        double vmax = 0;
        for (double t : v) vmax = std::max(vmax, std::abs(t));
        double sign = v[0] > 0 ? 1.0 : -1.0;
        double worst = 0;
        for (std::size_t i = 0; i < dx.grid.size(); ++i)
            worst = std::max(worst, std::abs(sign * v[i] / vmax - std::exp(-dx.grid[i])));
        CHECK(worst <= 1e-3);
    }
    SECTION("krein_zero_mode_check: boundary residual and refinement trend") {
        auto rep = krein_zero_mode_check(e.problem, SeparatedBC{pi / 4, 0.0}, Side::a,
                                         {0, 20}, 1000, 3);
        CHECK(rep.boundary_ok);
        CHECK(rep.boundary_residual <= 1e-8);
        CHECK(rep.trend_ok);
        REQUIRE(rep.lambda1.size() == 3);
        CHECK(std::abs(rep.lambda1.back()) < std::abs(rep.lambda1.front()));
    }
    SECTION("wrong angle pi/3 is rejected by the boundary residual") {
        KernelBasis kb = kernel_basis(e.problem);
        REQUIRE(kb.dim == 1);
        const auto& u = kb.candidates.front();
        auto vals = kernel_values(e.problem, u, {0.0});
        auto l = bc_covector(pi / 3, Side::a);
        double resid = std::abs(l[0] * vals[0][0] + l[1] * vals[0][1]) /
                       std::hypot(vals[0][0], vals[0][1]);
        CHECK(resid > 0.1);
    }
    SECTION("truncation robustness: doubling L at fixed spacing") {
        auto dx1 = discretize(e.problem, SeparatedBC{pi / 4, 0.0}, 4000, {0, 20});
        auto dx2 = discretize(e.problem, SeparatedBC{pi / 4, 0.0}, 8000, {0, 40});
        double l1 = eigen_smallest(dx1, 1)[0].lambda;
        double l2 = eigen_smallest(dx2, 1)[0].lambda;
        CHECK(std::abs(l1 - l2) <= 1e-6);
    }
}

TEST_CASE("grid refinement order of the ground eigenvalue is ~2") {
    auto order_of = [](std::vector<double> lam) {
        double d1 = std::abs(lam[1] - lam[0]);
        double d2 = std::abs(lam[2] - lam[1]);
        return std::log2(d1 / d2);
    };
    SECTION("-y'' Dirichlet") {
        auto prob = laplace01();
        std::vector<double> lam;
        for (std::size_t n : {500u, 1000u, 2000u})
            lam.push_back(
                eigen_smallest(discretize(prob, SeparatedBC{0, 0}, n, {0, 1}), 1)[0]
                    .lambda);
        CHECK(order_of(lam) >= 1.8);
    }
    SECTION("Bessel-type Dirichlet on (0,20)") {
        auto e = make_example_3_11(0.0, 4.0, 3.0);
        std::vector<double> lam;
        for (std::size_t n : {500u, 1000u, 2000u})
            lam.push_back(
                eigen_smallest(discretize(e.problem, SeparatedBC{0, 0}, n, {0, 20}), 1)[0]
                    .lambda);
        CHECK(order_of(lam) >= 1.8);
    }
}

TEST_CASE("Friedrichs dominates the Krein extension") {
    auto e = make_example_3_11(0.0, 4.0, 3.0);
    auto dxF = discretize(e.problem, SeparatedBC{0.0, 0.0}, 2000, {0, 20});
    auto dxK = discretize(e.problem, SeparatedBC{pi / 4, 0.0}, 2000, {0, 20});
    double lF = eigen_smallest(dxF, 1)[0].lambda;
    double lK = eigen_smallest(dxK, 1)[0].lambda;
    CHECK(lF >= lK - 1e-8);

    auto e39 = make_example_3_9(1.0, 1.0);
    auto dxF9 = discretize(e39.problem, SeparatedBC{0.0, 0.0}, 2000, {1e-5, 1}, true, false);
    auto dxK9 = discretize(e39.problem, SeparatedBC{0.0, pi / 2}, 2000, {1e-5, 1}, true, false);
    double lF9 = eigen_smallest(dxF9, 1)[0].lambda;
    double lK9 = eigen_smallest(dxK9, 1)[0].lambda;
    CHECK(lF9 >= lK9 - 1e-8);
    CHECK(std::abs(lK9) <= 1e-3);  // Krein zero mode up to the eps cap
}

TEST_CASE("eigenfunction invariance under K") {
    auto e = make_example_3_9(1.0, 1.0);
    Interval dom{1e-5, 1};

    SECTION("Neumann at 1 (the Krein extension): residual <= 1e-4") {
        auto dx = discretize(e.problem, SeparatedBC{0.0, pi / 2}, 3000, dom, true, false);
        auto eig = eigen_smallest(dx, 1);
        double res = eigenfunction_invariance_check(dx, e.problem, e.K, eig[0].vec);
        CHECK(res <= 1e-4);
    }
    SECTION("Robin pi/3 at 1 (not invariant): residual > 1e-2") {
        auto dx = discretize(e.problem, SeparatedBC{0.0, pi / 3}, 3000, dom, true, false);
        auto eig = eigen_smallest(dx, 1);
        double res = eigenfunction_invariance_check(dx, e.problem, e.K, eig[0].vec);
        CHECK(res > 1e-2);
    }
    SECTION("Dirichlet anywhere: residual <= 1e-6") {
        auto dx = discretize(e.problem, SeparatedBC{0.0, 0.0}, 3000, dom, true, false);
        auto eig = eigen_smallest(dx, 1);
        double res = eigenfunction_invariance_check(dx, e.problem, e.K, eig[0].vec);
        CHECK(res <= 1e-6);
    }
}
