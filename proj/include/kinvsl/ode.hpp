#pragma once

// Adaptive Dormand-Prince 5(4) integration of the quasi-derivative system
//
//   y' = y1 / p(x),   y1' = (q(x) - z r(x)) y - r(x) eta(x),
//
// the first-order form in which solutions of tau y = z y + eta stay finite
// at endpoints where p degenerates.  Requested output points are hit
// exactly (the step is clamped), so downstream consumers never interpolate.

#include "kinvsl/core.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <vector>

namespace kinvsl {

struct QuasiSystem {
    std::function<double(double)> p, q, r;
    double z = 0.0;
    std::function<double(double)> eta;  // optional inhomogeneity (tau y = z y + eta)

    std::array<double, 2> rhs(double x, const std::array<double, 2>& y) const {
        double e = eta ? eta(x) : 0.0;
        return {y[1] / p(x), (q(x) - z * r(x)) * y[0] - r(x) * e};
    }
};

struct OdeOptions {
    double rtol = 1e-11;
    double atol = 1e-14;
    std::size_t max_steps = 4000000;
};

enum class OdeStatus { ok, step_underflow };

struct OdeTrace {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y1;
    OdeStatus status = OdeStatus::ok;
    double reached = 0.0;
};

namespace detail {

// Dormand-Prince coefficients
inline constexpr double dp_c[7] = {0., 1. / 5, 3. / 10, 4. / 5, 8. / 9, 1., 1.};
inline constexpr double dp_a[7][6] = {
    {},
    {1. / 5},
    {3. / 40, 9. / 40},
    {44. / 45, -56. / 15, 32. / 9},
    {19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729},
    {9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656},
    {35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84}};
inline constexpr double dp_b5[7] = {35. / 384,     0., 500. / 1113, 125. / 192,
                                    -2187. / 6784, 11. / 84, 0.};
inline constexpr double dp_b4[7] = {5179. / 57600,    0.,          7571. / 16695, 393. / 640,
                                    -92097. / 339200, 187. / 2100, 1. / 40};

} // namespace detail

/// Integrate from `x0` (state `y0`) to `x_end`, recording the state at every
/// point of `outputs` (which must lie between x0 and x_end and be sorted in
/// the direction of integration; x0/x_end themselves are always recorded).
inline OdeTrace integrate_quasi(const QuasiSystem& sys, double x0,
                                std::array<double, 2> y0, double x_end,
                                std::vector<double> outputs = {},
                                OdeOptions opt = {}) {
    OdeTrace trace;
    double dir = x_end > x0 ? 1.0 : -1.0;
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    if (dir < 0) std::reverse(outputs.begin(), outputs.end());
    // keep only outputs strictly inside the integration span
    std::erase_if(outputs, [&](double t) {
        return (t - x0) * dir <= 0 || (t - x_end) * dir > 0;
    });
    std::size_t next_out = 0;

    auto record = [&](double x, const std::array<double, 2>& y) {
        trace.x.push_back(x);
        trace.y.push_back(y[0]);
        trace.y1.push_back(y[1]);
    };

    double x = x0;
    std::array<double, 2> y = y0;
    record(x, y);

    auto f0 = sys.rhs(x, y);
    // initial step heuristic
    double scale = std::max({std::abs(y[0]), std::abs(y[1]), 1e-8});
    double d0 = std::max(std::abs(f0[0]), std::abs(f0[1]));
    double h = dir * std::min(std::abs(x_end - x0),
                              d0 > 0 ? 0.01 * scale / d0 : 0.01 * std::abs(x_end - x0));
    if (h == 0) h = dir * 1e-8;

    std::array<std::array<double, 2>, 7> k;
    k[0] = f0;
    bool fsal_valid = true;

    for (std::size_t step = 0; step < opt.max_steps; ++step) {
        if ((x - x_end) * dir >= 0) break;
        double target = next_out < outputs.size() ? outputs[next_out] : x_end;
        double gap = target - x;
        if (std::abs(gap) <= 1e-14 * std::max({1.0, std::abs(x), std::abs(target)})) {
            // within double resolution of the target: snap and move on
            x = target;
            if (next_out < outputs.size() && target == outputs[next_out]) {
                record(x, y);
                ++next_out;
            } else if (target == x_end) {
                record(x, y);
            }
            fsal_valid = false;
            continue;
        }
        if ((x + h - target) * dir > 0) h = gap;

        if (!fsal_valid) {
            k[0] = sys.rhs(x, y);
            fsal_valid = true;
        }
        bool bad = false;
        std::array<double, 2> y5{}, y4{};
        for (int s = 1; s < 7; ++s) {
            std::array<double, 2> ys = y;
            for (int j = 0; j < s; ++j) {
                ys[0] += h * detail::dp_a[s][j] * k[j][0];
                ys[1] += h * detail::dp_a[s][j] * k[j][1];
            }
            k[s] = sys.rhs(x + detail::dp_c[s] * h, ys);
            if (!std::isfinite(k[s][0]) || !std::isfinite(k[s][1])) bad = true;
        }
        if (!bad) {
            y5 = y;
            y4 = y;
            for (int s = 0; s < 7; ++s) {
                y5[0] += h * detail::dp_b5[s] * k[s][0];
                y5[1] += h * detail::dp_b5[s] * k[s][1];
                y4[0] += h * detail::dp_b4[s] * k[s][0];
                y4[1] += h * detail::dp_b4[s] * k[s][1];
            }
            if (!std::isfinite(y5[0]) || !std::isfinite(y5[1])) bad = true;
        }

        double err = 0;
        if (!bad) {
            // component scales are coupled through the state norm so a
            // momentary zero of one component cannot stall the step control,
            // and pure relative control (atol = 0) stays meaningful for
            // solutions of tiny magnitude
            double nrm = 0.01 * (std::abs(y[0]) + std::abs(y[1]) + std::abs(y5[0]) +
                                 std::abs(y5[1]));
            for (int i = 0; i < 2; ++i) {
                double sc = opt.atol +
                            opt.rtol * (std::max(std::abs(y[i]), std::abs(y5[i])) + nrm);
                err = std::max(err, std::abs(y5[i] - y4[i]) / sc);
            }
        } else {
            err = 10.0;
        }

        if (err <= 1.0) {
            x += h;
            y = y5;
            k[0] = k[6];  // FSAL
            if (next_out < outputs.size() && x == outputs[next_out]) {
                record(x, y);
                ++next_out;
            } else if (x == x_end) {
                record(x, y);
            }
            double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::clamp(grow, 0.2, 5.0);
        } else {
            double shrink = bad ? 0.25 : std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= shrink;
            fsal_valid = !bad && fsal_valid;
            if (x + h == x) {  // no representable progress left
                trace.status = OdeStatus::step_underflow;
                trace.reached = x;
                return trace;
            }
        }
    }
    trace.reached = x;
    if (trace.x.empty() || trace.x.back() != x) record(x, y);
    return trace;
}

} // namespace kinvsl
