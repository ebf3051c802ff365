#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hilbertlab {

enum class ErrorKind {
  InvalidInput,
  NonCollinear,
  DegenerateConfiguration,
  SingularTransform,
  PointAtInfinity,
  PointOutside,
  NoConvergence,
  AuditFailed,
  AtomTooHeavy,
  DegenerateMeasure,
  OrbitEscapesDomain,
  MemoryBudgetExceeded,
  BadSignature,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NonCollinear: return "NonCollinear";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::SingularTransform: return "SingularTransform";
    case ErrorKind::PointAtInfinity: return "PointAtInfinity";
    case ErrorKind::PointOutside: return "PointOutside";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::AuditFailed: return "AuditFailed";
    case ErrorKind::AtomTooHeavy: return "AtomTooHeavy";
    case ErrorKind::DegenerateMeasure: return "DegenerateMeasure";
    case ErrorKind::OrbitEscapesDomain: return "OrbitEscapesDomain";
    case ErrorKind::MemoryBudgetExceeded: return "MemoryBudgetExceeded";
    case ErrorKind::BadSignature: return "BadSignature";
  }
  return "Unknown";
}

/// Numerical failures (iteration or memory budgets) as opposed to bad input.
constexpr bool is_numerical(ErrorKind kind) {
  return kind == ErrorKind::NoConvergence || kind == ErrorKind::MemoryBudgetExceeded;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an iteration budget is exhausted; carries where it happened.
class NoConvergence : public Error {
 public:
  NoConvergence(std::string module, std::string operation, long budget)
      : Error(ErrorKind::NoConvergence,
              module + "::" + operation + " exceeded budget " + std::to_string(budget)),
        module_(std::move(module)),
        operation_(std::move(operation)),
        budget_(budget) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }
  long budget() const noexcept { return budget_; }

 private:
  std::string module_;
  std::string operation_;
  long budget_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace hilbertlab
