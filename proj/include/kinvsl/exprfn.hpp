#pragma once

#include "kinvsl/core.hpp"
#include "kinvsl/expr.hpp"

#include <utility>
#include <vector>

namespace kinvsl {

/// A parsed closed-form function of one variable with its parameter bindings
/// and domain.  The bound AST (parameters substituted) is cached, as are the
/// first two symbolic derivatives, so repeated evaluation is allocation-free.
class ExprFn {
public:
    ExprFn() = default;

    ExprFn(Expr expr, ParamMap params, Interval domain,
           std::vector<double> singular = {})
        : expr_(std::move(expr)),
          params_(std::move(params)),
          domain_(domain),
          singular_(std::move(singular)) {
        bound_ = substitute_params(expr_, params_);
    }

    static ExprFn parse(std::string_view source, ParamMap params = {},
                        Interval domain = {}) {
        return ExprFn(kinvsl::parse(source), std::move(params), domain);
    }

    static ExprFn constant(double v, Interval domain = {}) {
        return ExprFn(make_number(v), {}, domain);
    }

    static ExprFn identity(Interval domain = {}) {
        return ExprFn(make_var(), {}, domain);
    }

    bool valid() const { return static_cast<bool>(expr_); }

    double operator()(double x) const { return eval(bound_, x); }

    /// First derivative value at x.
    double d1(double x) const { return eval(deriv_expr(1), x); }

    /// Second derivative value at x.
    double d2(double x) const { return eval(deriv_expr(2), x); }

    /// Derivative as a new ExprFn over the same domain.
    ExprFn derivative() const {
        ExprFn out;
        out.expr_ = differentiate(expr_);
        out.params_ = params_;
        out.domain_ = domain_;
        out.singular_ = singular_;
        out.bound_ = deriv_expr(1);
        return out;
    }

    /// this ∘ inner, on `domain` (callers supply the pulled-back interval).
    ExprFn composed_with(const ExprFn& inner, Interval domain) const {
        ExprFn out;
        ParamMap merged = params_;
        for (const auto& [k, v] : inner.params_) merged.emplace(k, v);
        out.expr_ = compose(expr_, inner.expr_);
        out.params_ = std::move(merged);
        out.domain_ = domain;
        out.bound_ = compose(bound_, inner.bound_);
        return out;
    }

    ExprFn scaled(double factor) const {
        ExprFn out = *this;
        out.expr_ = make_mul(make_number(factor), expr_);
        out.bound_ = make_mul(make_number(factor), bound_);
        out.d1_.reset();
        out.d2_.reset();
        return out;
    }

    const Expr& ast() const { return expr_; }
    const Expr& bound_ast() const { return bound_; }
    const ParamMap& params() const { return params_; }
    const Interval& domain() const { return domain_; }
    const std::vector<double>& singular_points() const { return singular_; }

    std::string str() const { return to_string(expr_); }

private:
    Expr expr_;
    ParamMap params_;
    Interval domain_;
    std::vector<double> singular_;
    Expr bound_;
    // lazily built derivative ASTs of the bound expression
    mutable Expr d1_, d2_;

    const Expr& deriv_expr(int order) const {
        if (!d1_) d1_ = differentiate(bound_);
        if (order == 1) return d1_;
        if (!d2_) d2_ = differentiate(d1_);
        return d2_;
    }
};

} // namespace kinvsl
