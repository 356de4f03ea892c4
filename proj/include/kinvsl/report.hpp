#pragma once

// Deterministic report serialization: insertion-ordered objects and fixed
// %.12e formatting for floating-point numbers, so identical inputs produce
// byte-identical output.

#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <string>

namespace kinvsl {

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_json(std::ostream& os, const Json& j, int indent, int depth) {
    auto pad = [&](int d) {
        for (int i = 0; i < indent * d; ++i) os.put(' ');
    };
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            std::size_t k = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++k) {
                pad(depth + 1);
                os << '"' << it.key() << "\": ";
                dump_json(os, it.value(), indent, depth + 1);
                if (k + 1 < j.size()) os << ',';
                os << '\n';
            }
            pad(depth);
            os << '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                pad(depth + 1);
                dump_json(os, j[k], indent, depth + 1);
                if (k + 1 < j.size()) os << ',';
                os << '\n';
            }
            pad(depth);
            os << ']';
            return;
        }
        case Json::value_t::number_float: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12e", j.get<double>());
            os << buf;
            return;
        }
        default:
            os << j.dump();  // strings, ints, bools, null
    }
}

} // namespace detail

/// Serialize with fixed float formatting (%.12e) and stable field order.
inline std::string dump_report(const Json& j, int indent = 2) {
    std::ostringstream os;
    detail::dump_json(os, j, indent, 0);
    os << '\n';
    return os.str();
}

} // namespace kinvsl
