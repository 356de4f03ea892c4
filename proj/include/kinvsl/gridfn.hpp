#pragma once

#include "kinvsl/core.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace kinvsl {

/// Function sampled on a strictly increasing grid.  Evaluation between nodes
/// uses monotone cubic (Fritsch–Carlson) interpolation, so interpolated
/// values never overshoot the data.
class GridFn {
public:
    GridFn() = default;

    GridFn(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size() || x_.size() < 2)
            throw InputError("GridFn: need matching grids with >= 2 points");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                throw InputError("GridFn: grid must be strictly increasing");
        build_slopes();
    }

    const std::vector<double>& grid() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    std::size_t size() const { return x_.size(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

    bool covers(double x) const { return x >= x_.front() && x <= x_.back(); }

    double operator()(double x) const {
        if (!covers(x))
            throw NumericError("GridFn: evaluation outside grid range");
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (i >= x_.size() - 1) i = x_.size() - 2;
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double h00 = (1 + 2 * t) * sqr(1 - t);
        double h10 = t * sqr(1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    }

private:
    std::vector<double> x_, y_, m_;

    // Fritsch–Carlson monotone slopes
    void build_slopes() {
        std::size_t n = x_.size();
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        m_.assign(n, 0.0);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0) {
                m_[i] = 0.0;
            } else {
                double w1 = 2 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
                double w2 = (x_[i + 1] - x_[i]) + 2 * (x_[i] - x_[i - 1]);
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0) {
                m_[i] = m_[i + 1] = 0;
                continue;
            }
            double a = m_[i] / d[i], b = m_[i + 1] / d[i];
            double s = a * a + b * b;
            if (s > 9) {
                double tau = 3.0 / std::sqrt(s);
                m_[i] = tau * a * d[i];
                m_[i + 1] = tau * b * d[i];
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Grid builders

/// n uniform points on [lo, hi] inclusive.
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.front() = lo;
    g.back() = hi;
    return g;
}

/// Interior grid of the interval `iv`, geometric toward any endpoint flagged
/// singular (or infinite), following x_k = d ± span·10^{-k/8}.  Infinite
/// endpoints are truncated at distance `span_inf`.
inline std::vector<double> graded_grid(const Interval& iv, std::size_t n,
                                       bool singular_a, bool singular_b,
                                       double span_inf = 40.0) {
    double a = iv.a, b = iv.b;
    bool inf_a = !std::isfinite(a), inf_b = !std::isfinite(b);
    double lo = inf_a ? (std::isfinite(b) ? b - span_inf : -span_inf) : a;
    double hi = inf_b ? (std::isfinite(a) ? a + span_inf : span_inf) : b;
    double span = hi - lo;
    bool grade_a = singular_a || inf_a;
    bool grade_b = singular_b || inf_b;

    std::vector<double> pts;
    pts.reserve(n + 32);
    // uniform interior backbone (open: skip exact endpoints)
    for (std::size_t i = 1; i + 1 <= n; ++i)
        pts.push_back(lo + span * static_cast<double>(i) / static_cast<double>(n + 1));
    // Geometric tails probing the endpoint behavior.  Depth stops at
    // 10^{-4} of the span: closer to a fixed endpoint, evaluating
    // coefficients at phi^{-1}(x) loses ~eps/(d - x) relative accuracy to
    // rounding of phi^{-1} itself, which would swamp genuine residuals.
    const int levels = 32;
    for (int k = 8; k <= levels; ++k) {
        double off = span * std::pow(10.0, -static_cast<double>(k) / 8.0);
        if (grade_a) pts.push_back(lo + off);
        if (grade_b) pts.push_back(hi - off);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    // keep strictly interior
    while (!pts.empty() && pts.front() <= lo) pts.erase(pts.begin());
    while (!pts.empty() && pts.back() >= hi) pts.pop_back();
    return pts;
}

} // namespace kinvsl
