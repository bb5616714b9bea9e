#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <string>

#include "microeval/errors.hpp"

namespace microeval {

// Renders JSON with sorted keys and every floating-point number printed as
// fixed %.6f, so semantically equal reports are byte-identical across runs
// and platforms. nlohmann objects already iterate in key order.
inline void canonical_dump_into(const nlohmann::json& value, std::string& out, int indent) {
    const std::string pad(static_cast<size_t>(indent) * 2, ' ');
    const std::string pad_in(static_cast<size_t>(indent + 1) * 2, ' ');
    switch (value.type()) {
        case nlohmann::json::value_t::object: {
            if (value.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = value.begin(); it != value.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                out += nlohmann::json(it.key()).dump();
                out += ": ";
                canonical_dump_into(it.value(), out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (value.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& element : value) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                canonical_dump_into(element, out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            double d = value.get<double>();
            if (!std::isfinite(d)) throw PreconditionError("non-finite number in report");
            if (d == 0.0) d = 0.0;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", d);
            out += buf;
            return;
        }
        default:
            out += value.dump();
            return;
    }
}

inline std::string canonical_dump(const nlohmann::json& value) {
    std::string out;
    canonical_dump_into(value, out, 0);
    out += "\n";
    return out;
}

}  // namespace microeval
