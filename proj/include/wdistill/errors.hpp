#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace wdistill {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable category used in CLI error reports.
  virtual const char* kind() const noexcept { return "error"; }
};

/// Input rejected before any computation; carries every violated constraint.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  explicit ValidationError(const std::string& violation)
      : ValidationError(std::vector<std::string>{violation}) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }
  const char* kind() const noexcept override { return "validation"; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "validation failed";
    for (const auto& s : v) out += "; " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// A quadrature or extrapolation did not reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved_error)
      : Error(what + " (achieved error estimate " + format(achieved_error) + ")"),
        achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }
  const char* kind() const noexcept override { return "numerical"; }

 private:
  static std::string format(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
  }
  double achieved_error_;
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

class LookupError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "lookup"; }
};

}  // namespace wdistill
