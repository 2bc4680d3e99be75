#pragma once

#include <stdexcept>
#include <string>

namespace cloudrank {

// Input failed a schema or invariant check. `where` names the offending record or field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}

  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cloudrank
