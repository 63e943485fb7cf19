#pragma once

#include <stdexcept>
#include <string>

namespace pphi2 {

// validation errors map to exit code 2, numerical ones to exit code 3
enum class ErrorKind { validation, numerical };

class Error : public std::runtime_error {
 public:
  Error(std::string code, ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        field_(std::move(field)),
        kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  std::string field_;
  ErrorKind kind_;
};

inline Error validation_error(std::string code, const std::string& message,
                              std::string field = {}) {
  return Error(std::move(code), ErrorKind::validation, message, std::move(field));
}

inline Error numerical_error(std::string code, const std::string& message) {
  return Error(std::move(code), ErrorKind::numerical, message);
}

}  // namespace pphi2
