#pragma once

#include <string>

#include <json.hpp>

#include "loadfc/errors.hpp"
#include "loadfc/series.hpp"

namespace loadfc::detail {

inline Date config_date(const nlohmann::json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + ": expected a YYYY-MM-DD string");
  try {
    return parse_date(j.get<std::string>());
  } catch (const DataError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

template <class T>
T config_value(const nlohmann::json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

template <class T>
T config_required(const nlohmann::json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError("config is missing required field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

}  // namespace loadfc::detail
