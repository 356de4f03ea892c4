#pragma once

// Sturm-Liouville ODE engine: applying tau symbolically, solving
// tau y = z y through the quasi-derivative system, Wronskians, endpoint
// classification (regular / limit circle / limit point) and the kernel of
// T_max together with the eigenvalue of K on it.

#include "kinvsl/ktransform.hpp"
#include "kinvsl/ode.hpp"
#include "kinvsl/problem.hpp"
#include "kinvsl/quadrature.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

namespace kinvsl {

// ---------------------------------------------------------------------------
// Solutions

/// Solution samples of tau y = z y with quasi-derivative values.  Between
/// nodes, evaluation is cubic Hermite with the exact nodal slopes
/// y' = y1/p and y1' = (q - z r) y.
class SolutionFn {
public:
    SolutionFn() = default;
    SolutionFn(std::vector<double> x, std::vector<double> y, std::vector<double> y1,
               double z, const SLProblem& prob)
        : x_(std::move(x)), y_(std::move(y)), y1_(std::move(y1)), z_(z) {
        my_.resize(x_.size());
        my1_.resize(x_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) {
            my_[i] = y1_[i] / prob.p(x_[i]);
            my1_[i] = (prob.q(x_[i]) - z * prob.r(x_[i])) * y_[i];
        }
    }

    double z() const { return z_; }
    const std::vector<double>& grid() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& quasi() const { return y1_; }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    bool covers(double x) const { return x >= x_.front() && x <= x_.back(); }

    double value(double x) const { return hermite(x, y_, my_); }
    double quasi_value(double x) const { return hermite(x, y1_, my1_); }
    double operator()(double x) const { return value(x); }

private:
    std::vector<double> x_, y_, y1_, my_, my1_;
    double z_ = 0;

    double hermite(double x, const std::vector<double>& v,
                   const std::vector<double>& m) const {
        if (!covers(x)) throw NumericError("SolutionFn: evaluation outside solved range");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (i >= x_.size() - 1) i = x_.size() - 2;
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double h00 = (1 + 2 * t) * sqr(1 - t);
        double h10 = t * sqr(1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return h00 * v[i] + h10 * h * m[i] + h01 * v[i + 1] + h11 * h * m[i + 1];
    }
};

/// W(f,g)(x) = f g^{[1]} - f^{[1]} g.
inline double wronskian(const SolutionFn& f, const SolutionFn& g, double x) {
    return f.value(x) * g.quasi_value(x) - f.quasi_value(x) * g.value(x);
}

// ---------------------------------------------------------------------------
// tau as a symbolic operator

/// Exact symbolic (1/r)(-(p f')' + q f).
inline ExprFn tau_apply(const SLProblem& prob, const ExprFn& f) {
    ParamMap merged = prob.p.params();
    for (const auto& [k, v] : prob.q.params()) merged.emplace(k, v);
    for (const auto& [k, v] : prob.r.params()) merged.emplace(k, v);
    for (const auto& [k, v] : f.params()) merged.emplace(k, v);
    Expr flux = make_mul(prob.p.ast(), differentiate(f.ast()));
    Expr num = make_sub(make_mul(prob.q.ast(), f.ast()), differentiate(flux));
    return ExprFn(make_div(num, prob.r.ast()), merged, prob.interval);
}

// ---------------------------------------------------------------------------
// Initial value solves

inline QuasiSystem quasi_system(const SLProblem& prob, double z,
                                std::function<double(double)> eta = {}) {
    QuasiSystem sys;
    sys.p = [&prob](double x) { return prob.p(x); };
    sys.q = [&prob](double x) { return prob.q(x); };
    sys.r = [&prob](double x) { return prob.r(x); };
    sys.z = z;
    sys.eta = std::move(eta);
    return sys;
}

/// Integrate tau y = z y from x0 with data (y, y^{[1]}) to `x_target`,
/// recording at `outputs` (plus both ends).  Throws NumericError on step
/// underflow before reaching the target.
inline SolutionFn solve_tau(const SLProblem& prob, double z, double x0,
                            std::array<double, 2> init, double x_target,
                            std::vector<double> outputs = {}, OdeOptions opt = {}) {
    auto sys = quasi_system(prob, z);
    auto tr = integrate_quasi(sys, x0, init, x_target, std::move(outputs), opt);
    if (tr.status != OdeStatus::ok)
        throw NumericError("solve_tau: step underflow at x=" + std::to_string(tr.reached));
    std::vector<double> xs = tr.x, ys = tr.y, y1s = tr.y1;
    if (xs.size() >= 2 && xs.front() > xs.back()) {
        std::reverse(xs.begin(), xs.end());
        std::reverse(ys.begin(), ys.end());
        std::reverse(y1s.begin(), y1s.end());
    }
    return SolutionFn(std::move(xs), std::move(ys), std::move(y1s), z, prob);
}

// ---------------------------------------------------------------------------
// Endpoint classification

enum class EndpointKind { regular, limit_circle, limit_point, inconclusive };

inline const char* endpoint_kind_name(EndpointKind k) {
    switch (k) {
        case EndpointKind::regular: return "Regular";
        case EndpointKind::limit_circle: return "LimitCircle";
        case EndpointKind::limit_point: return "LimitPoint";
        case EndpointKind::inconclusive: return "Inconclusive";
    }
    return "?";
}

struct EndpointClass {
    EndpointKind kind = EndpointKind::inconclusive;
    Trend r_integrable = Trend::inconclusive;
    Trend inv_p_integrable = Trend::inconclusive;
    Trend q_integrable = Trend::inconclusive;
    std::array<Trend, 2> solution_l2{Trend::inconclusive, Trend::inconclusive};
};

namespace detail {

/// Truncation abscissa used when approaching endpoint `side` numerically.
/// `frac` is the approach depth for finite endpoints (fraction of the span).
inline double approach_limit(const SLProblem& prob, Side side, double frac = 1e-6) {
    Interval w = prob.working_interval();
    double d = endpoint(prob.interval, side);
    if (!std::isfinite(d)) return side == Side::a ? w.a : w.b;
    double span = w.b - w.a;
    return side == Side::a ? d + frac * span : d - frac * span;
}

} // namespace detail

/// Classify endpoint per the operational tests: Regular iff the endpoint is
/// finite and r, 1/p, q are integrable up to it; otherwise solve
/// tau y = 0 toward the endpoint with two independent initial conditions and
/// count the L^2 solutions (two -> limit circle, fewer -> limit point).
inline EndpointClass classify_endpoint(const SLProblem& prob, Side side) {
    EndpointClass out;
    double d = endpoint(prob.interval, side);
    double anchor = prob.anchor();

    if (std::isfinite(d)) {
        out.r_integrable =
            scan_endpoint_integral([&](double x) { return prob.r(x); }, anchor, d).trend;
        out.inv_p_integrable =
            scan_endpoint_integral([&](double x) { return 1.0 / prob.p(x); }, anchor, d)
                .trend;
        out.q_integrable =
            scan_endpoint_integral([&](double x) { return std::abs(prob.q(x)); }, anchor, d)
                .trend;
        if (out.r_integrable == Trend::converged &&
            out.inv_p_integrable == Trend::converged &&
            out.q_integrable == Trend::converged) {
            out.kind = EndpointKind::regular;
            return out;
        }
    }

    // solution-based test
    double stop = detail::approach_limit(prob, side);
    int n_l2 = 0, n_div = 0;
    for (int ic = 0; ic < 2; ++ic) {
        std::array<double, 2> init{ic == 0 ? 1.0 : 0.0, ic == 0 ? 0.0 : 1.0};
        // geometric output points toward the endpoint for the scan
        std::vector<double> outs;
        for (int k = 0; k <= 80; ++k) {
            double t = anchor + (stop - anchor) * (1.0 - std::pow(2.0, -0.35 * k));
            outs.push_back(t);
        }
        SolutionFn sol;
        double reach = stop;
        try {
            sol = solve_tau(prob, 0.0, anchor, init, stop, outs);
        } catch (const NumericError&) {
            // step underflow: integrate as far as possible, then scan there
            auto tr = integrate_quasi(quasi_system(prob, 0.0), anchor, init, stop, outs);
            reach = tr.reached;
            if (tr.x.size() < 8) {
                out.solution_l2[ic] = Trend::inconclusive;
                continue;
            }
            std::vector<double> xs = tr.x, ys = tr.y, y1s = tr.y1;
            if (xs.front() > xs.back()) {
                std::reverse(xs.begin(), xs.end());
                std::reverse(ys.begin(), ys.end());
                std::reverse(y1s.begin(), y1s.end());
            }
            sol = SolutionFn(std::move(xs), std::move(ys), std::move(y1s), 0.0, prob);
        }
        double inner = std::min(std::abs(reach - anchor), std::abs(stop - anchor));
        bool infinite = !std::isfinite(d);
        // scan toward the true endpoint; cap the depth so every cutoff stays
        // inside the solved range (otherwise increments saturate against the
        // truncation and fake a stall)
        double eps0 = 0.75 * inner;
        double floor_off = std::abs(anchor + (side == Side::a ? -inner : inner) - d);
        int levels = infinite ? 26
                              : std::min(26, static_cast<int>(
                                                 std::log2(eps0 / (floor_off + 1e-300))) -
                                                 1);
        Trend t = Trend::inconclusive;
        if (levels >= 12)
            t = scan_endpoint_integral(
                    [&](double x) { return sqr(sol.value(x)) * prob.r(x); }, anchor,
                    infinite ? (side == Side::a ? -inf : inf) : d, levels, eps0, inner)
                    .trend;
        out.solution_l2[ic] = t;
        if (t == Trend::converged) ++n_l2;
        if (t == Trend::diverged) ++n_div;
    }
    if (n_l2 == 2)
        out.kind = EndpointKind::limit_circle;
    else if (n_l2 + n_div == 2)
        out.kind = EndpointKind::limit_point;
    else
        out.kind = EndpointKind::inconclusive;
    return out;
}

// ---------------------------------------------------------------------------
// Kernel of T_max

/// One tau y = 0 solution distinguished by its endpoint behavior, stored as
/// anchor data plus (for limit-point ends) the stable start data near the
/// endpoint from which values on that side are regenerated.
struct KernelCandidate {
    double x0 = 0;
    std::array<double, 2> data0{1, 0};
    struct SidePiece {
        bool active = false;
        double x_start = 0;
        std::array<double, 2> start{1, 0};
        bool robust = true;  // direction stable under moving the start point
    };
    SidePiece piece_a, piece_b;
    Trend trend_a = Trend::inconclusive, trend_b = Trend::inconclusive;
    bool l2_a = false, l2_b = false;

    bool in_l2() const { return l2_a && l2_b; }
};

struct KernelBasis {
    EndpointClass class_a, class_b;
    std::vector<KernelCandidate> candidates;
    int dim = 0;  // number of candidates lying in L^2 at both ends
};

namespace detail {

/// Transfer matrix of tau y = 0 from x_s to x0 (columns: images of the unit
/// data vectors).
inline std::array<std::array<double, 2>, 2> transfer_matrix(const SLProblem& prob,
                                                            double x_s, double x0) {
    std::array<std::array<double, 2>, 2> m{};
    for (int c = 0; c < 2; ++c) {
        std::array<double, 2> init{c == 0 ? 1.0 : 0.0, c == 0 ? 0.0 : 1.0};
        auto sol = solve_tau(prob, 0.0, x_s, init, x0, {}, {1e-12, 0.0});
        m[0][c] = sol.value(x0);
        m[1][c] = sol.quasi_value(x0);
    }
    return m;
}

/// Largest-gain input direction (right singular vector of the top singular
/// value) of a 2x2 matrix, plus the separation sigma_2/sigma_1 that bounds
/// the contamination of the extracted direction.
struct TopSingular {
    std::array<double, 2> v{1, 0};
    double separation = 1.0;
};

inline TopSingular top_right_singular(const std::array<std::array<double, 2>, 2>& m) {
    // eigenvector of m^T m for the larger eigenvalue
    double a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    double b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    double c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    double tr = a + c, det = a * c - b * b;
    double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    double lam = tr / 2 + disc;
    TopSingular out;
    std::array<double, 2> v{};
    if (std::abs(b) > 1e-300) {
        v = {b, lam - a};
    } else {
        v = a >= c ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
    }
    double n = std::hypot(v[0], v[1]);
    out.v = {v[0] / n, v[1] / n};
    double det_m = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    out.separation = lam > 0 ? std::abs(det_m) / lam : 1.0;  // sigma2/sigma1
    return out;
}

inline std::array<double, 2> mat_vec(const std::array<std::array<double, 2>, 2>& m,
                                     const std::array<double, 2>& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

} // namespace detail

/// Evaluate a kernel candidate at sorted points, regenerating each side from
/// its stable representation.  Returns pairs (y, y^{[1]}).
inline std::vector<std::array<double, 2>> kernel_values(const SLProblem& prob,
                                                        const KernelCandidate& cand,
                                                        std::vector<double> points) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    std::vector<std::array<double, 2>> out(points.size());

    auto run_side = [&](bool below) {
        std::vector<double> side_pts;
        for (double t : points)
            if ((t < cand.x0) == below && t != cand.x0) side_pts.push_back(t);
        if (side_pts.empty()) return;
        const KernelCandidate::SidePiece& piece = below ? cand.piece_a : cand.piece_b;
        OdeOptions tight{1e-12, 0.0};
        SolutionFn sol;
        if (piece.active) {
            sol = solve_tau(prob, 0.0, piece.x_start, piece.start, cand.x0, side_pts,
                            tight);
        } else {
            double target = below ? side_pts.front() : side_pts.back();
            sol = solve_tau(prob, 0.0, cand.x0, cand.data0, target, side_pts, tight);
        }
        for (std::size_t i = 0; i < points.size(); ++i)
            if ((points[i] < cand.x0) == below && points[i] != cand.x0)
                out[i] = {sol.value(points[i]), sol.quasi_value(points[i])};
    };
    run_side(true);
    run_side(false);
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i] == cand.x0) out[i] = cand.data0;
    return out;
}

namespace detail {

/// L^2 trend of a candidate toward one endpoint, evaluated on the stable side
/// representation.
inline Trend candidate_l2_trend(const SLProblem& prob, const KernelCandidate& cand,
                                Side side) {
    double stop = approach_limit(prob, side);
    std::vector<double> pts;
    for (int k = 0; k <= 90; ++k)
        pts.push_back(cand.x0 + (stop - cand.x0) * (1.0 - std::pow(2.0, -0.3 * k)));
    pts.push_back(stop);
    auto vals = kernel_values(prob, cand, pts);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<double> moduli_vals(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) moduli_vals[i] = sqr(vals[i][0]);
    GridFn moduli(pts, std::move(moduli_vals));
    double inner = std::abs(stop - cand.x0);
    double d = endpoint(prob.interval, side);
    bool infinite = !std::isfinite(d);
    double eps0 = 0.75 * inner;
    double floor_off = std::abs(stop - d);
    int levels = infinite
                     ? 24
                     : std::min(24, static_cast<int>(
                                        std::log2(eps0 / (floor_off + 1e-300))) -
                                    1);
    if (levels < 12) return Trend::inconclusive;
    return scan_endpoint_integral(
               [&](double x) { return moduli(x) * prob.r(x); }, cand.x0,
               infinite ? (side == Side::a ? -inf : inf) : d, levels, eps0, inner)
        .trend;
}

} // namespace detail

/// Kernel of T_max: the tau y = 0 solutions lying in L^2((a,b); r dx),
/// detected by integrability scans.  At a limit-point endpoint the recessive
/// direction is found from the top singular direction of the transfer matrix
/// from near the endpoint to the anchor, which is numerically stable; the
/// candidate keeps that representation for later evaluation near the end.
inline KernelBasis kernel_basis(const SLProblem& prob) {
    KernelBasis out;
    out.class_a = classify_endpoint(prob, Side::a);
    out.class_b = classify_endpoint(prob, Side::b);
    double x0 = prob.anchor();

    auto lp = [](const EndpointClass& c) { return c.kind == EndpointKind::limit_point; };

    auto recessive_direction = [&](double x_s, double& separation) {
        auto m = detail::transfer_matrix(prob, x_s, x0);
        auto top = detail::top_right_singular(m);
        separation = top.separation;
        auto d0 = detail::mat_vec(m, top.v);
        double n = std::hypot(d0[0], d0[1]);
        return std::pair{std::array<double, 2>{d0[0] / n, d0[1] / n},
                         std::array<double, 2>{top.v[0] / n, top.v[1] / n}};
    };

    auto make_lp_candidate = [&](Side side) {
        KernelCandidate cand;
        cand.x0 = x0;
        double d = endpoint(prob.interval, side);

        // The extracted direction carries contamination on the order of the
        // approach depth (the (y, y^{[1]}) basis degenerates toward the
        // endpoint), so deepen until the direction stabilizes between
        // consecutive depths.  Strong dichotomies stabilize immediately;
        // a solve that underflows keeps the last achievable depth.
        double x_s = detail::approach_limit(prob, side);
        double sep = 1.0;
        auto [dir, start] = recessive_direction(x_s, sep);
        if (std::isfinite(d)) {
            for (double frac : {1e-8, 1e-10, 1e-12}) {
                double deeper = detail::approach_limit(prob, side, frac);
                try {
                    double sep2 = 1.0;
                    auto [dir2, start2] = recessive_direction(deeper, sep2);
                    double change =
                        std::abs(dir[0] * dir2[1] - dir[1] * dir2[0]);
                    x_s = deeper;
                    dir = dir2;
                    start = start2;
                    if (change <= 1e-11) break;
                } catch (const NumericError&) {
                    break;  // too stiff to go deeper; keep what we have
                }
            }
        }
        cand.data0 = dir;
        auto& piece = side == Side::a ? cand.piece_a : cand.piece_b;
        piece.active = true;
        piece.x_start = x_s;
        piece.start = start;

        // Truncation robustness: the recessive direction must be stable
        // under moving the start point well inward; otherwise the dichotomy
        // is too weak over the working range to trust (e.g. polynomial
        // solutions at an infinite endpoint).
        double x_s2 = std::isfinite(d) ? detail::approach_limit(prob, side, 1e-4)
                                       : x0 + 0.5 * (x_s - x0);
        double sep2_unused = 1.0;
        auto [dir2, start2] = recessive_direction(x_s2, sep2_unused);
        (void)start2;
        double cross = dir[0] * dir2[1] - dir[1] * dir2[0];
        piece.robust = std::abs(cross) <= 1e-3;
        return cand;
    };

    bool lp_a = lp(out.class_a), lp_b = lp(out.class_b);
    if (!lp_a && !lp_b) {
        for (int c = 0; c < 2; ++c) {
            KernelCandidate cand;
            cand.x0 = x0;
            cand.data0 = {c == 0 ? 1.0 : 0.0, c == 0 ? 0.0 : 1.0};
            out.candidates.push_back(cand);
        }
    } else if (lp_a && lp_b) {
        // the BC-relevant distinguished solution: recessive at a
        out.candidates.push_back(make_lp_candidate(Side::a));
    } else {
        out.candidates.push_back(make_lp_candidate(lp_a ? Side::a : Side::b));
    }

    for (auto& cand : out.candidates) {
        cand.trend_a = detail::candidate_l2_trend(prob, cand, Side::a);
        cand.trend_b = detail::candidate_l2_trend(prob, cand, Side::b);
        if (!cand.piece_a.robust) cand.trend_a = Trend::inconclusive;
        if (!cand.piece_b.robust) cand.trend_b = Trend::inconclusive;
        cand.l2_a = cand.trend_a == Trend::converged;
        cand.l2_b = cand.trend_b == Trend::converged;
        if (cand.in_l2()) ++out.dim;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue of K on the kernel

struct ZetaReport {
    double zeta = 0;
    double spread = 0;  // max-min of the ratio over the grid
    int kernel_dim = 0;
    bool ok = false;
    std::string detail;
};

/// zeta with K u = zeta u for the kernel representative u, computed as the
/// ratio (Ku)(x)/u(x) over the middle 80% of the working interval.  A
/// non-constant ratio signals an invariance failure upstream and is
/// reported, not asserted away.
inline ZetaReport k_eigenvalue_on_kernel(const SLProblem& prob, const KTransform& K,
                                         std::size_t n_grid = 160) {
    ZetaReport rep;
    KernelBasis kb = kernel_basis(prob);
    rep.kernel_dim = kb.dim;
    const KernelCandidate* u = nullptr;
    for (const auto& c : kb.candidates)
        if (c.in_l2()) u = &c;
    if (!u && kb.candidates.size() == 1) u = &kb.candidates[0];
    if (!u || (kb.dim > 1)) {
        rep.detail = "kernel dimension != 1";
        return rep;
    }

    Interval w = prob.working_interval();
    double span = w.b - w.a;
    double lo = w.a + 0.1 * span, hi = w.b - 0.1 * span;
    // keep phi(grid) inside the numerically reachable range
    double stop_a = detail::approach_limit(prob, Side::a);
    double stop_b = detail::approach_limit(prob, Side::b);
    if (K.phi(hi) > stop_b) hi = std::min(hi, K.phi_inverse(stop_b));
    if (K.phi(lo) < stop_a) lo = std::max(lo, K.phi_inverse(stop_a));
    std::vector<double> grid = uniform_grid(lo, hi, n_grid);
    std::vector<double> needed = grid;
    for (double x : grid) needed.push_back(K.phi(x));
    auto vals = kernel_values(prob, *u, needed);

    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    auto value_at = [&](double x) {
        auto it = std::lower_bound(needed.begin(), needed.end(), x);
        return vals[static_cast<std::size_t>(it - needed.begin())][0];
    };

    double zmin = inf, zmax = -inf, zsum = 0;
    std::size_t cnt = 0;
    for (double x : grid) {
        double ux = value_at(x);
        if (std::abs(ux) < 1e-300) continue;
        double ratio = K.A(x) * value_at(K.phi(x)) / ux;
        zmin = std::min(zmin, ratio);
        zmax = std::max(zmax, ratio);
        zsum += ratio;
        ++cnt;
    }
    if (cnt == 0) {
        rep.detail = "kernel representative vanishes on the sample";
        return rep;
    }
    rep.zeta = zsum / static_cast<double>(cnt);
    rep.spread = zmax - zmin;
    rep.ok = rep.spread <= 1e-8 * std::abs(rep.zeta);
    if (!rep.ok) rep.detail = "ratio not constant: K may not preserve the kernel";
    return rep;
}

} // namespace kinvsl
