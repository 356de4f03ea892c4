#pragma once

// Schroeder-equation machinery: residual verification f(m(x)) = s f(x),
// Koenigs construction at an attracting fixed point, and the two family
// generators (powers and periodic modulation) that mint new coefficient
// triples from a seed solution.

#include "kinvsl/exprfn.hpp"
#include "kinvsl/gridfn.hpp"
#include "kinvsl/quadrature.hpp"

#include <vector>

namespace kinvsl {

/// Max relative residual of f(m(x)) - s f(x) over the grid.
template <typename F, typename M>
double verify_schroeder(F&& f, M&& composing_map, double s,
                        const std::vector<double>& grid) {
    double worst = 0;
    for (double x : grid)
        worst = std::max(worst, rel_residual(f(composing_map(x)), s * f(x)));
    return worst;
}

struct KoenigsOptions {
    int depth = 40;
    double stop_tol = 1e-13;
};

/// Koenigs function at an attracting fixed point d of phi:
///   sigma(x) = lim_n (phi^n(x) - d) / phi'(d)^n,
/// normalized by sigma'(d) = 1, satisfying sigma(phi(x)) = phi'(d) sigma(x).
/// Iteration stops early once successive estimates differ by < stop_tol;
/// points that have not begun contracting within `depth` iterations are
/// continued through the functional equation (each phi application is one
/// continuation step, so the loop doubles as continuation with a larger cap).
template <typename Phi, typename DPhi>
double koenigs_value(Phi&& phi, DPhi&& dphi, double fixed_point, double x,
                     KoenigsOptions opt = {}) {
    const double d = fixed_point;
    double lambda = dphi(d);
    if (!(std::abs(lambda) < 1.0) || lambda == 0.0)
        throw NumericError("koenigs: fixed point is not attracting");

    // Local Taylor coefficients of the deviation map
    //   delta -> phi(d + delta) - d = lambda delta + c2 delta^2 + c3 delta^3 + ...
    // from one-sided differences of phi' on the side the orbit approaches
    // from.  Iterating this form once |delta| is small avoids the
    // cancellation in phi^n(x) - d that the raw quotient would amplify
    // by lambda^{-n}.
    double side = (x < d) ? -1.0 : 1.0;
    double h = side * 1e-5 * (1.0 + std::abs(d));
    double g0 = lambda, g1 = dphi(d + h), g2 = dphi(d + 2 * h);
    if (!std::isfinite(g1) || !std::isfinite(g2)) {
        h = -h;
        g1 = dphi(d + h);
        g2 = dphi(d + 2 * h);
    }
    double c2 = (-3 * g0 + 4 * g1 - g2) / (2 * h) / 2.0;   // phi''(d)/2
    double c3 = (g0 - 2 * g1 + g2) / (h * h) / 6.0;        // phi'''(d)/6
    const double local_switch = 1e-4 * (1.0 + std::abs(d));

    double delta = x - d;
    double pw = 1.0;
    double est = delta;
    bool local = std::abs(delta) <= local_switch;
    for (int n = 1; n <= opt.depth; ++n) {
        if (local) {
            delta = lambda * delta + c2 * delta * delta + c3 * delta * delta * delta;
        } else {
            delta = phi(d + delta) - d;
            local = std::abs(delta) <= local_switch;
        }
        pw *= lambda;
        double next = delta / pw;
        if (std::abs(next - est) <= opt.stop_tol * (1.0 + std::abs(next))) return next;
        est = next;
    }
    // accept the depth-limited estimate only if the orbit actually contracted
    if (std::abs(delta) >= std::abs(x - d) && x != d)
        throw NumericError("koenigs: no convergence within depth (outside basin)");
    return est;
}

template <typename Phi, typename DPhi>
GridFn koenigs(Phi&& phi, DPhi&& dphi, double fixed_point,
               const std::vector<double>& grid, KoenigsOptions opt = {}) {
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = koenigs_value(phi, dphi, fixed_point, grid[i], opt);
    return GridFn(grid, std::move(vals));
}

namespace detail {

inline ParamMap merge_params(std::initializer_list<const ExprFn*> fns) {
    ParamMap merged;
    for (const ExprFn* f : fns)
        for (const auto& [k, v] : f->params()) merged.emplace(k, v);
    return merged;
}

inline double seed_slope_sign(const ExprFn& P, const Interval& iv) {
    double mid = 0.5 * (iv.a + iv.b);
    double s = P.d1(mid);
    if (s == 0 || !std::isfinite(s))
        throw NumericError("family generator: seed antiderivative has degenerate slope");
    return s > 0 ? 1.0 : -1.0;
}

} // namespace detail

struct PowerFamily {
    ExprFn P_n;
    double A_n = 1;
    ExprFn p_n;
};

/// Power family of Schroeder solutions: P_n = P^n, A_n = A^n and the new
/// coefficient p_n = p / (n P^{n-1}) with p = +-1/P' (sign fixed by the
/// seed so that p > 0).
inline PowerFamily family_power(const ExprFn& P, double A, int n, Interval iv) {
    if (n < 1) throw InputError("family_power: n >= 1 required");
    double sign = detail::seed_slope_sign(P, iv);
    auto merged = detail::merge_params({&P});

    Expr Pn = make_pow(P.ast(), make_number(n));
    // p_n = sign / (n P^{n-1} P')
    Expr den = make_mul(make_number(n),
                        make_mul(make_pow(P.ast(), make_number(n - 1)),
                                 differentiate(P.ast())));
    Expr pn = make_div(make_number(sign), den);

    PowerFamily fam;
    fam.P_n = ExprFn(Pn, merged, iv);
    fam.A_n = std::pow(A, n);
    fam.p_n = ExprFn(pn, merged, iv);

    // positivity of p_n and local integrability of 1/p_n on an interior compact
    double span = iv.b - iv.a;
    for (int i = 1; i < 200; ++i) {
        double x = iv.a + span * i / 200.0;
        double v = fam.p_n(x);
        if (!(v > 0) || !std::isfinite(v))
            throw NumericError("family_power: p_n not positive near x=" + std::to_string(x));
    }
    double probe = integrate([&](double x) { return 1.0 / fam.p_n(x); },
                             iv.a + 0.02 * span, iv.b - 0.02 * span);
    if (!std::isfinite(probe))
        throw NumericError("family_power: 1/p_n fails local integrability");
    return fam;
}

struct PeriodicFamily {
    ExprFn P_tilde;
    ExprFn p_tilde;
};

/// Periodic modulation: P~ = P G(ln P) solves the same Schroeder equation
/// whenever G has period ln(A^2); the induced coefficient is
/// 1/p~ = P' [G(ln P) + G'(ln P)].  Rejected when p~ changes sign, since
/// that would violate the positivity hypothesis on p.
inline PeriodicFamily family_periodic(const ExprFn& P, const ExprFn& G, double A,
                                      Interval iv) {
    (void)A;  // the period of G is the caller's responsibility; validated by residual
    double sign = detail::seed_slope_sign(P, iv);
    auto merged = detail::merge_params({&P, &G});

    Expr lnP = make_call(Func::ln, P.ast());
    Expr G_of = compose(G.ast(), lnP);
    Expr dG_of = compose(differentiate(G.ast()), lnP);
    Expr Pt = make_mul(P.ast(), G_of);
    Expr inv_pt = make_mul(differentiate(P.ast()), make_add(G_of, dG_of));
    Expr pt = make_div(make_number(sign), inv_pt);

    PeriodicFamily fam;
    fam.P_tilde = ExprFn(Pt, merged, iv);
    fam.p_tilde = ExprFn(pt, merged, iv);

    double span = iv.b - iv.a;
    for (int i = 1; i < 400; ++i) {
        double x = iv.a + span * i / 400.0;
        double v = fam.p_tilde(x);
        if (!(v > 0) || !std::isfinite(v))
            throw NumericError("family_periodic: p~ changes sign (positivity rejected)");
    }
    return fam;
}

} // namespace kinvsl
