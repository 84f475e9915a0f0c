#pragma once

#include <string>

#include "json.hpp"
#include "rmm/error.hpp"
#include "rmm/io.hpp"

namespace rmm::detail {

using nlohmann::json;

inline json decimal(double value) { return io::format_decimal(value); }

/// Accepts a decimal string or a JSON number.
inline double real_field(const json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ValidationError("missing field '" + key + "'");
    }
    const auto& v = obj.at(key);
    if (v.is_string()) {
        return io::parse_decimal(v.get<std::string>());
    }
    if (v.is_number()) {
        return v.get<double>();
    }
    throw ValidationError("field '" + key + "' is not a number");
}

}  // namespace rmm::detail
