#pragma once

#include <string>

#include <json.hpp>

#include "cloudrank/decimal.hpp"
#include "cloudrank/errors.hpp"

namespace cloudrank::detail {

using Json = nlohmann::json;

inline const Json& Require(const Json& object, const char* key, const std::string& where) {
  if (!object.is_object()) {
    throw ValidationError(where, "expected an object");
  }
  const auto it = object.find(key);
  if (it == object.end()) {
    throw ValidationError(where, std::string("missing field '") + key + "'");
  }
  return *it;
}

inline std::string RequireString(const Json& object, const char* key, const std::string& where) {
  const Json& value = Require(object, key, where);
  if (!value.is_string()) {
    throw ValidationError(where, std::string("field '") + key + "' must be a string");
  }
  return value.get<std::string>();
}

inline std::string OptionalString(const Json& object, const char* key, std::string fallback) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) {
    return fallback;
  }
  if (!it->is_string()) {
    throw ValidationError(key, "must be a string");
  }
  return it->get<std::string>();
}

// Numbers are taken through their shortest textual form; strings are parsed exactly.
inline Decimal ToDecimal(const Json& value, const std::string& where) {
  try {
    if (value.is_number_integer()) {
      return Decimal::FromInteger(value.get<std::int64_t>());
    }
    if (value.is_number_unsigned()) {
      return Decimal::FromInteger(static_cast<std::int64_t>(value.get<std::uint64_t>()));
    }
    if (value.is_number_float()) {
      return Decimal::FromDouble(value.get<double>());
    }
    if (value.is_string()) {
      return Decimal::Parse(value.get<std::string>());
    }
  } catch (const std::exception& e) {
    throw ValidationError(where, e.what());
  }
  throw ValidationError(where, "expected a decimal number");
}

inline Decimal RequireDecimal(const Json& object, const char* key, const std::string& where) {
  return ToDecimal(Require(object, key, where), where + "." + key);
}

inline double RequireDouble(const Json& object, const char* key, const std::string& where) {
  const Json& value = Require(object, key, where);
  if (!value.is_number()) {
    throw ValidationError(where, std::string("field '") + key + "' must be a number");
  }
  return value.get<double>();
}

}  // namespace cloudrank::detail
