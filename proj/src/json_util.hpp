#pragma once

// Internal helpers shared by the JSON codecs.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "plctopo/error.hpp"
#include "plctopo/tline.hpp"

namespace plctopo::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Parses `text`, translating syntax errors into ParseError with line/column.
inline Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError("malformed JSON: " + std::string(e.what()), line, column);
    }
}

inline const Json& require(const Json& obj, const char* key, std::string_view where) {
    if (!obj.is_object()) throw ParseError(std::string(where) + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string(where) + ": missing key \"" + key + "\"");
    return *it;
}

inline double require_number(const Json& obj, const char* key, std::string_view where) {
    const Json& v = require(obj, key, where);
    if (!v.is_number()) throw ParseError(std::string(where) + ": \"" + key + "\" must be a number");
    return v.get<double>();
}

inline int require_int(const Json& obj, const char* key, std::string_view where) {
    const Json& v = require(obj, key, where);
    if (!v.is_number_integer()) throw ParseError(std::string(where) + ": \"" + key + "\" must be an integer");
    return v.get<int>();
}

inline const Json& require_array(const Json& obj, const char* key, std::string_view where) {
    const Json& v = require(obj, key, where);
    if (!v.is_array()) throw ParseError(std::string(where) + ": \"" + key + "\" must be an array");
    return v;
}

inline Complex read_admittance(const Json& obj, std::string_view where) {
    return {require_number(obj, "g_s", where), require_number(obj, "b_s", where)};
}

}  // namespace plctopo::detail
