#pragma once

#include <ammlab/pool_core.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

namespace ammlab::json_util {

// Unknown keys are a hard error: a typo must not silently fall back to a default.
inline void require_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
T get(const nlohmann::json& j, const char* key, std::string_view where) {
    if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(where) + ": bad value for '" + key + "': " + e.what());
    }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback, std::string_view where) {
    if (!j.contains(key)) return fallback;
    return get<T>(j, key, where);
}

} // namespace ammlab::json_util
