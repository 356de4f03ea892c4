#pragma once

#include "kinvsl/core.hpp"

#include <algorithm>
#include <functional>

namespace kinvsl {

inline constexpr double tol_root = 1e-13;
inline constexpr int max_root_iter = 80;

/// Solve f(x) = y on a bracket by safeguarded Newton: a Newton step is taken
/// whenever it stays inside the current bracket, otherwise the step falls
/// back to bisection.  Requires a sign change of f - y over the bracket.
template <typename F, typename DF>
double invert_newton(F&& f, DF&& df, double y, double lo, double hi) {
    if (!(lo < hi)) std::swap(lo, hi);
    double flo = f(lo) - y;
    double fhi = f(hi) - y;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw NumericError("invert: no sign change in bracket");

    double x = 0.5 * (lo + hi);
    double fx = f(x) - y;
    for (int it = 0; it < max_root_iter; ++it) {
        if (std::abs(fx) <= tol_root) return x;
        // shrink the bracket
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
        } else {
            lo = x;
            flo = fx;
        }
        double d = df(x);
        double step = d != 0 ? fx / d : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi) || step == 0.0 || !std::isfinite(xn))
            xn = 0.5 * (lo + hi);  // bisect
        if (xn == x) {
            // bracket exhausted at double resolution
            double fb = f(xn) - y;
            if (std::abs(fb) <= tol_root * std::max(1.0, std::abs(y))) return xn;
            return xn;
        }
        x = xn;
        fx = f(x) - y;
    }
    if (std::abs(fx) <= tol_root * std::max(1.0, std::abs(y)) ||
        hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
        return x;
    throw NumericError("invert: max iterations exceeded");
}

/// Derivative-free variant: secant estimate inside the same safeguard.
template <typename F>
double invert_bisect(F&& f, double y, double lo, double hi) {
    auto df = [&](double x) {
        double h = 1e-7 * (1.0 + std::abs(x));
        return (f(x + h) - f(x - h)) / (2 * h);
    };
    return invert_newton(std::forward<F>(f), df, y, lo, hi);
}

} // namespace kinvsl
