#pragma once

// Problem/transform specification files: a JSON object with coefficient
// expression strings, the interval, the parameter bindings and the K data:
//
//   { "interval": [0, "inf"],
//     "p": "1", "q": "gamma/(1-exp(-sqrt(mu)*x))^2+mu/4", "r": "1",
//     "params": {"gamma": 0, "mu": 4, "c": 3},
//     "K": {"A": "...", "phi": "...", "phi_inv": "...", "C": 1},
//     "singular": [0],
//     "gallery_id": "example_3_11" }

#include "kinvsl/problem.hpp"
#include "kinvsl/report.hpp"

#include <fstream>
#include <optional>
#include <string>

namespace kinvsl {

struct ProblemSpec {
    SLProblem problem;
    KTransform K;
    std::string gallery_id;
};

namespace detail {

inline double parse_endpoint(const Json& v) {
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return inf;
        if (s == "-inf") return -inf;
        throw InputError("interval endpoint must be a number, \"inf\" or \"-inf\"");
    }
    if (!v.is_number()) throw InputError("interval endpoint must be numeric");
    return v.get<double>();
}

inline ExprFn parse_field(const Json& spec, const std::string& key,
                          const ParamMap& params, Interval iv) {
    if (!spec.contains(key) || !spec.at(key).is_string())
        throw InputError("spec field '" + key + "' must be an expression string");
    Expr e = parse(spec.at(key).get<std::string>());
    for (const auto& name : free_params(e))
        if (!params.count(name))
            throw InputError("expression '" + key + "' uses unbound identifier '" +
                             name + "'");
    return ExprFn(e, params, iv);
}

} // namespace detail

inline ProblemSpec load_problem_spec(const Json& spec) {
    if (!spec.is_object()) throw InputError("problem spec must be a JSON object");
    if (!spec.contains("interval") || !spec.at("interval").is_array() ||
        spec.at("interval").size() != 2)
        throw InputError("spec requires \"interval\": [a, b]");
    Interval iv{detail::parse_endpoint(spec.at("interval")[0]),
                detail::parse_endpoint(spec.at("interval")[1])};
    if (!(iv.a < iv.b)) throw InputError("interval must satisfy a < b");

    ParamMap params;
    if (spec.contains("params")) {
        if (!spec.at("params").is_object())
            throw InputError("\"params\" must map names to numbers");
        for (auto it = spec.at("params").begin(); it != spec.at("params").end(); ++it) {
            if (!it.value().is_number())
                throw InputError("parameter '" + it.key() + "' must be numeric");
            params[it.key()] = it.value().get<double>();
        }
    }

    ProblemSpec out;
    out.problem.interval = iv;
    out.problem.p = detail::parse_field(spec, "p", params, iv);
    out.problem.q = detail::parse_field(spec, "q", params, iv);
    out.problem.r = detail::parse_field(spec, "r", params, iv);
    if (spec.contains("singular")) {
        for (const auto& v : spec.at("singular"))
            out.problem.singular.push_back(v.get<double>());
    }
    if (spec.contains("truncation")) {
        out.problem.truncation_span = spec.at("truncation").get<double>();
        if (!(out.problem.truncation_span > 0))
            throw InputError("\"truncation\" must be positive");
    }

    if (!spec.contains("K") || !spec.at("K").is_object())
        throw InputError("spec requires the \"K\" object (A, phi, C)");
    const Json& kj = spec.at("K");
    out.K.A = detail::parse_field(kj, "A", params, iv);
    out.K.phi = detail::parse_field(kj, "phi", params, iv);
    if (kj.contains("phi_inv"))
        out.K.phi_inv = detail::parse_field(kj, "phi_inv", params, iv);
    if (!kj.contains("C") || !kj.at("C").is_number())
        throw InputError("K requires the numeric weight constant \"C\"");
    out.K.C = kj.at("C").get<double>();
    if (!(out.K.C > 0)) throw InputError("K.C must be positive");
    out.K.interval = iv;

    if (spec.contains("gallery_id")) out.gallery_id = spec.at("gallery_id").get<std::string>();
    return out;
}

inline ProblemSpec load_problem_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open spec file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InputError("malformed JSON in " + path + ": " + e.what());
    }
    return load_problem_spec(j);
}

} // namespace kinvsl
