#pragma once

#include <stdexcept>
#include <string>

namespace opdyn {

enum class ErrorKind {
  Validation = 2,
  Instability = 3,
  Numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad input: malformed scenario, out-of-range parameter, wrong dimensions.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
  ValidationError(const std::string& field, const std::string& what)
      : Error(ErrorKind::Validation, field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, long iterations = -1)
      : Error(ErrorKind::Numerical, what), iterations_(iterations) {}
  long iterations() const { return iterations_; }

 private:
  long iterations_;
};

/// Refusal to compute a steady state; carries the serialized stability report.
class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, std::string report_json)
      : Error(ErrorKind::Instability, what), report_(std::move(report_json)) {}
  const std::string& report_json() const { return report_; }

 private:
  std::string report_;
};

}  // namespace opdyn
