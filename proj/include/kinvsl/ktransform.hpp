#pragma once

// Verification machinery for K = (A, phi, C): the coefficient functional
// equations, boundedness of K, the adjoint pairing and the operator
// identity K* tau K = tau on compactly supported test functions.

#include "kinvsl/gridfn.hpp"
#include "kinvsl/parallel.hpp"
#include "kinvsl/problem.hpp"
#include "kinvsl/quadrature.hpp"

#include <functional>
#include <vector>

namespace kinvsl {

// ---------------------------------------------------------------------------
// Pointwise action of K, K* and K^{-1}

template <typename F>
GridFn apply_K(const KTransform& K, F&& f, const std::vector<double>& grid) {
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = K.A(grid[i]) * f(K.phi(grid[i]));
    return GridFn(grid, std::move(vals));
}

inline GridFn apply_K(const KTransform& K, const GridFn& f, const std::vector<double>& grid) {
    return apply_K(K, [&](double t) { return f(t); }, grid);
}

template <typename F>
GridFn apply_K_adjoint(const KTransform& K, F&& g, const std::vector<double>& grid) {
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double y = K.phi_inverse(grid[i]);
        vals[i] = K.A(y) / (K.C * K.phi.d1(y)) * g(y);
    }
    return GridFn(grid, std::move(vals));
}

template <typename F>
GridFn apply_K_inverse(const KTransform& K, F&& f, const std::vector<double>& grid) {
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double y = K.phi_inverse(grid[i]);
        vals[i] = f(y) / K.A(y);
    }
    return GridFn(grid, std::move(vals));
}

/// Symbolic K f for expression-backed f: A(x) * f(phi(x)).
inline ExprFn apply_K_expr(const KTransform& K, const ExprFn& f) {
    ExprFn composed = f.composed_with(K.phi, K.interval);
    ParamMap merged = K.A.params();
    for (const auto& [k, v] : composed.params()) merged.emplace(k, v);
    return ExprFn(make_mul(K.A.ast(), composed.ast()), merged, K.interval);
}

// ---------------------------------------------------------------------------
// Boundedness (sup A^2/phi' and sup phi'/A^2)

struct BoundednessReport {
    double sup_ratio_1 = 0;  // sup A^2 / phi'
    double sup_ratio_2 = 0;  // sup phi' / A^2
    bool ok = false;
};

/// Empirical suprema over a log-dense sample; ok iff both are finite and
/// stabilize when the sample is refined toward the endpoints.
inline BoundednessReport check_boundedness(const KTransform& K, const SLProblem& prob,
                                           std::size_t n_sample = 400) {
    BoundednessReport rep;
    double prev1 = 0, prev2 = 0;
    bool stable = false;
    for (int level = 0; level < 3; ++level) {
        std::size_t n = n_sample << level;
        auto grid = graded_grid(prob.interval, n, true, true, prob.truncation_span);
        double s1 = 0, s2 = 0;
        for (double x : grid) {
            double r1 = sqr(K.A(x)) / K.phi.d1(x);
            if (!std::isfinite(r1) || r1 <= 0) return rep;
            s1 = std::max(s1, r1);
            s2 = std::max(s2, 1.0 / r1);
        }
        if (level > 0) {
            double g1 = (s1 - prev1) / (1 + s1);
            double g2 = (s2 - prev2) / (1 + s2);
            stable = g1 <= 1e-3 && g2 <= 1e-3;
        }
        prev1 = s1;
        prev2 = s2;
        rep.sup_ratio_1 = s1;
        rep.sup_ratio_2 = s2;
    }
    rep.ok = stable && std::isfinite(rep.sup_ratio_1) && std::isfinite(rep.sup_ratio_2);
    return rep;
}

// ---------------------------------------------------------------------------
// Coefficient functional equations

struct CoefficientResiduals {
    double res_r = 0, res_p = 0, res_q = 0;
};

/// Max relative residual of the three coefficient equations
///   r(x) = C r(s),  p(x) = A(s)^2 phi'(s) p(s),
///   q(x) = [A(s)/phi'(s)] { A(s) q(s) - (A^{[1]})'(s) },   s = phi^{-1}(x),
/// over the interior grid.  A^{[1]} = p A' is built symbolically.
inline CoefficientResiduals residual_coefficient_eqs(const SLProblem& prob,
                                                     const KTransform& K,
                                                     const std::vector<double>& grid) {
    ExprFn A1 = a_quasi_derivative(prob, K);
    ExprFn A1d = A1.derivative();

    std::vector<CoefficientResiduals> pt(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        double x = grid[i];
        double s = K.phi_inverse(x);
        double As = K.A(s);
        double dphis = K.phi.d1(s);
        pt[i].res_r = rel_residual(prob.r(x), K.C * prob.r(s));
        pt[i].res_p = rel_residual(prob.p(x), sqr(As) * dphis * prob.p(s));
        double rhs_q = As / dphis * (As * prob.q(s) - A1d(s));
        pt[i].res_q = rel_residual(prob.q(x), rhs_q);
    });
    CoefficientResiduals out;
    for (const auto& v : pt) {
        out.res_r = std::max(out.res_r, v.res_r);
        out.res_p = std::max(out.res_p, v.res_p);
        out.res_q = std::max(out.res_q, v.res_q);
    }
    return out;
}

/// Residual of the Schrodinger-form relation A(x)^2 phi'(x) = 1 over a grid.
inline double residual_schrodinger_relation(const KTransform& K,
                                            const std::vector<double>& grid) {
    double worst = 0;
    for (double x : grid)
        worst = std::max(worst, rel_residual(sqr(K.A(x)) * K.phi.d1(x), 1.0));
    return worst;
}

// ---------------------------------------------------------------------------
// Test functions and the operator identity

/// Twice-differentiable test function with compact support.
struct TestFn {
    std::function<double(double)> f, df, d2f;
    Interval support;
};

/// C-infinity bump exp(1 - 1/(1 - t^2)) on |t| < 1, t = (x-c)/w, times an
/// optional polynomial sum c_k x^k.
inline TestFn bump_poly(double center, double halfwidth, std::vector<double> poly = {1.0}) {
    auto b = [center, halfwidth](double x) {
        double t = (x - center) / halfwidth;
        if (std::abs(t) >= 1) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - t * t));
    };
    auto db = [center, halfwidth, b](double x) {
        double t = (x - center) / halfwidth;
        if (std::abs(t) >= 1) return 0.0;
        double u = 1.0 - t * t;
        return b(x) * (-2.0 * t / (u * u)) / halfwidth;
    };
    auto d2b = [center, halfwidth, b](double x) {
        double t = (x - center) / halfwidth;
        if (std::abs(t) >= 1) return 0.0;
        double u = 1.0 - t * t;
        double g = -2.0 * t / (u * u);
        double dg = -2.0 / (u * u) - 8.0 * t * t / (u * u * u);
        return b(x) * (g * g + dg) / (halfwidth * halfwidth);
    };
    auto pv = [poly](double x) {
        double acc = 0, xp = 1;
        for (double c : poly) {
            acc += c * xp;
            xp *= x;
        }
        return acc;
    };
    auto dpv = [poly](double x) {
        double acc = 0, xp = 1;
        for (std::size_t k = 1; k < poly.size(); ++k) {
            acc += static_cast<double>(k) * poly[k] * xp;
            xp *= x;
        }
        return acc;
    };
    auto d2pv = [poly](double x) {
        double acc = 0, xp = 1;
        for (std::size_t k = 2; k < poly.size(); ++k) {
            acc += static_cast<double>(k * (k - 1)) * poly[k] * xp;
            xp *= x;
        }
        return acc;
    };
    TestFn out;
    out.support = {center - halfwidth, center + halfwidth};
    out.f = [b, pv](double x) { return b(x) * pv(x); };
    out.df = [b, db, pv, dpv](double x) { return db(x) * pv(x) + b(x) * dpv(x); };
    out.d2f = [b, db, d2b, pv, dpv, d2pv](double x) {
        return d2b(x) * pv(x) + 2 * db(x) * dpv(x) + b(x) * d2pv(x);
    };
    return out;
}

/// Standard test windows for a problem: bump * {1, x, x^2} supported in
/// [a + 0.05(b-a), b - 0.05(b-a)] of the working interval.
inline std::vector<TestFn> standard_test_functions(const SLProblem& prob) {
    Interval w = prob.working_interval();
    double span = w.b - w.a;
    double lo = w.a + 0.05 * span, hi = w.b - 0.05 * span;
    double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    return {bump_poly(c, hw), bump_poly(c, hw, {0.0, 1.0}),
            bump_poly(c - 0.2 * hw, 0.6 * hw, {0.0, 0.0, 1.0})};
}

/// Relative L^2_r residual of K* tau K f - tau f.
///
/// tau(Kf) is expanded by the chain rule, so the only non-symbolic inputs
/// are f, f', f'' of the test function:
///   (tau Kf)(y) = (1/r(y)) [ (qA - (A1)')(y) f(x) - (A1 phi' + (pAphi')')(y) f'(x)
///                            - (p A phi'^2)(y) f''(x) ],  x = phi(y),
/// and (K* g)(x) = [A(y)/(C phi'(y))] g(y) at y = phi^{-1}(x) evaluates the
/// whole composite at x without interpolation.
inline double residual_operator_identity(const SLProblem& prob, const KTransform& K,
                                         const TestFn& test) {
    ExprFn A1 = a_quasi_derivative(prob, K);
    ExprFn A1d = A1.derivative();
    // w2 = p * A * phi'
    ParamMap merged = prob.p.params();
    for (const auto& [k, v] : K.A.params()) merged.emplace(k, v);
    for (const auto& [k, v] : K.phi.params()) merged.emplace(k, v);
    ExprFn w2(make_mul(prob.p.ast(), make_mul(K.A.ast(), differentiate(K.phi.ast()))),
              merged, prob.interval);
    ExprFn w2d = w2.derivative();

    auto k_tau_k = [&](double x) {
        double y = K.phi_inverse(x);
        double dphi_y = K.phi.d1(y);
        double tau_kf = (1.0 / prob.r(y)) *
                        ((prob.q(y) * K.A(y) - A1d(y)) * test.f(x) -
                         (A1(y) * dphi_y + w2d(y)) * test.df(x) -
                         prob.p(y) * K.A(y) * dphi_y * dphi_y * test.d2f(x));
        return K.A(y) / (K.C * dphi_y) * tau_kf;
    };
    auto tau_f = [&](double x) {
        return (1.0 / prob.r(x)) *
               (-prob.p.d1(x) * test.df(x) - prob.p(x) * test.d2f(x) +
                prob.q(x) * test.f(x));
    };

    double lo = test.support.a, hi = test.support.b;
    double num = integrate(
        [&](double x) { return sqr(k_tau_k(x) - tau_f(x)) * prob.r(x); }, lo, hi);
    double den = integrate([&](double x) { return sqr(tau_f(x)) * prob.r(x); }, lo, hi);
    if (den <= 0) return std::sqrt(num);
    return std::sqrt(num / den);
}

/// <g, Kf>_{L^2_r} - <K* g, f>_{L^2_r} by adaptive quadrature (both f and g
/// must vanish outside `window`).
template <typename F, typename G>
double adjoint_pairing_defect(const SLProblem& prob, const KTransform& K, F&& f, G&& g,
                              Interval window) {
    double lhs = integrate(
        [&](double x) { return g(x) * K.A(x) * f(K.phi(x)) * prob.r(x); }, window.a,
        window.b);
    double rhs = integrate(
        [&](double x) {
            double y = K.phi_inverse(x);
            return K.A(y) / (K.C * K.phi.d1(y)) * g(y) * f(x) * prob.r(x);
        },
        window.a, window.b);
    return std::abs(lhs - rhs);
}

} // namespace kinvsl
