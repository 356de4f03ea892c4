#pragma once

#include "kinvsl/core.hpp"
#include "kinvsl/exprfn.hpp"
#include "kinvsl/gridfn.hpp"
#include "kinvsl/quadrature.hpp"
#include "kinvsl/rootfind.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kinvsl {

/// Which endpoint of the interval.
enum class Side { a, b };

inline double endpoint(const Interval& iv, Side s) { return s == Side::a ? iv.a : iv.b; }

/// Coefficient triple (p, q, r) of tau = (1/r)[-(d/dx) p (d/dx) + q] on (a,b).
struct SLProblem {
    ExprFn p, q, r;
    Interval interval;
    std::vector<double> singular;  // declared singular points (endpoints)
    double truncation_span = 40.0; // working distance for infinite endpoints

    bool singular_at(Side s) const {
        double d = endpoint(interval, s);
        if (!std::isfinite(d)) return true;
        for (double sp : singular)
            if (sp == d) return true;
        return false;
    }

    /// Working (truncated) interval for sampling/integration.
    Interval working_interval() const {
        double lo = std::isfinite(interval.a)
                        ? interval.a
                        : (std::isfinite(interval.b) ? interval.b - truncation_span
                                                     : -truncation_span);
        double hi = std::isfinite(interval.b)
                        ? interval.b
                        : (std::isfinite(interval.a) ? interval.a + truncation_span
                                                     : truncation_span);
        return {lo, hi};
    }

    double anchor() const {
        Interval w = working_interval();
        return 0.5 * (w.a + w.b);
    }
};

struct ProblemCheck {
    bool positivity_ok = true;     // r > 0 and p > 0 on the sample
    bool local_integrability_ok = true;
    std::string detail;
};

/// Spot-check Hypothesis-style structural assumptions on a dense sample.
inline ProblemCheck validate_problem(const SLProblem& prob, std::size_t n_sample = 400) {
    ProblemCheck out;
    auto grid = graded_grid(prob.interval, n_sample, prob.singular_at(Side::a),
                            prob.singular_at(Side::b), prob.truncation_span);
    for (double x : grid) {
        double pv = prob.p(x), rv = prob.r(x);
        if (!(pv > 0) || !(rv > 0) || !std::isfinite(pv) || !std::isfinite(rv)) {
            out.positivity_ok = false;
            out.detail = "p or r fails positivity near x=" + std::to_string(x);
            break;
        }
    }
    // r, 1/p, q integrable on compact subintervals: integrate over a few
    // interior compacts and require finite results.
    Interval w = prob.working_interval();
    double span = w.b - w.a;
    double lo = w.a + 0.1 * span, hi = w.b - 0.1 * span;
    for (auto* fn : {&prob.r, &prob.q}) {
        double v = integrate([&](double x) { return std::abs((*fn)(x)); }, lo, hi);
        if (!std::isfinite(v)) out.local_integrability_ok = false;
    }
    double v = integrate([&](double x) { return 1.0 / prob.p(x); }, lo, hi);
    if (!std::isfinite(v)) out.local_integrability_ok = false;
    return out;
}

/// K = (A, phi, C) acting by (Kf)(x) = A(x) f(phi(x)).  phi fixes both
/// endpoints and is increasing; C is the declared weight constant of the
/// r-equation.  A closed-form inverse of phi may be registered; otherwise
/// inversion is numeric (safeguarded Newton on a discovered bracket).
struct KTransform {
    ExprFn A;
    ExprFn phi;
    double C = 1.0;
    std::optional<ExprFn> phi_inv;
    Interval interval;

    double phi_at(double x) const { return phi(x); }

    double phi_inverse(double x) const {
        if (phi_inv) return (*phi_inv)(x);
        return numeric_phi_inverse(x);
    }

    double numeric_phi_inverse(double x) const {
        // phi is an increasing bijection of (a,b); discover a bracket by
        // geometric walking from x toward the appropriate endpoint.
        double lo = x, hi = x;
        double fx = phi(x);
        if (fx == x) return x;
        if (fx > x) {
            // phi^{-1}(x) < x: walk lo down
            for (int k = 1; k <= 200; ++k) {
                double cand;
                if (std::isfinite(interval.a))
                    cand = interval.a + (lo - interval.a) * 0.5;
                else
                    cand = lo - std::pow(2.0, k);
                lo = cand;
                if (phi(lo) <= x) break;
                if (k == 200) throw NumericError("phi_inverse: bracket search failed");
            }
        } else {
            for (int k = 1; k <= 200; ++k) {
                double cand;
                if (std::isfinite(interval.b))
                    cand = interval.b - (interval.b - hi) * 0.5;
                else
                    cand = hi + std::pow(2.0, k);
                hi = cand;
                if (phi(hi) >= x) break;
                if (k == 200) throw NumericError("phi_inverse: bracket search failed");
            }
        }
        return invert_newton([&](double t) { return phi(t); },
                             [&](double t) { return phi.d1(t); }, x, lo, hi);
    }

    static KTransform identity(Interval iv) {
        KTransform k;
        k.A = ExprFn::constant(1.0, iv);
        k.phi = ExprFn::identity(iv);
        k.phi_inv = ExprFn::identity(iv);
        k.C = 1.0;
        k.interval = iv;
        return k;
    }
};

/// Quasi-derivative of A with respect to the paired problem: A^{[1]} = p A'.
inline ExprFn a_quasi_derivative(const SLProblem& prob, const KTransform& K) {
    ExprFn dA = K.A.derivative();
    ParamMap merged = prob.p.params();
    for (const auto& [k, v] : dA.params()) merged.emplace(k, v);
    return ExprFn(make_mul(prob.p.ast(), dA.ast()), merged, prob.interval);
}

/// Value of f at endpoint d: direct evaluation when finite, otherwise the
/// limit from the interior along a geometric sequence (Richardson-free; the
/// sequence must stabilize).  Throws NumericError on a divergent trend.
template <typename F>
double endpoint_limit(F&& f, const Interval& iv, Side side, double span_inf = 40.0) {
    double d = endpoint(iv, side);
    if (std::isfinite(d)) {
        double direct = f(d);
        if (std::isfinite(direct)) return direct;
    }
    Interval w{std::isfinite(iv.a) ? iv.a : (std::isfinite(iv.b) ? iv.b - span_inf : -span_inf),
               std::isfinite(iv.b) ? iv.b : (std::isfinite(iv.a) ? iv.a + span_inf : span_inf)};
    double span = w.b - w.a;
    double prev = 0, cur = 0;
    bool have_prev = false;
    for (int k = 6; k <= 48; ++k) {
        double off = span * std::pow(10.0, -k / 4.0);
        double xk = side == Side::a ? w.a + off : w.b - off;
        cur = f(xk);
        if (!std::isfinite(cur)) throw NumericError("endpoint_limit: divergent");
        if (have_prev && std::abs(cur - prev) <= 1e-11 * (1 + std::abs(cur))) return cur;
        prev = cur;
        have_prev = true;
    }
    if (std::abs(cur - prev) <= 1e-7 * (1 + std::abs(cur))) return cur;
    throw NumericError("endpoint_limit: no stable limit");
}

} // namespace kinvsl
