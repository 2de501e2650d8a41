#ifndef SAPOPT_ERRORS_HPP
#define SAPOPT_ERRORS_HPP

#include <optional>
#include <stdexcept>
#include <string>

namespace sapopt {

enum class ErrorCode {
  EmptyDomain,
  ZeroScale,
  Unbounded,
  NotConvex,
  InvalidInput,
  DimensionMismatch,
  SingularKkt,
  TooManyDegreesOfFreedom,
  TooManyConstraintRows,
  BudgetExceeded,
  LotMismatch,
  UnboundedInteger,
  ParseError,
};

inline const char* to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::ZeroScale: return "ZeroScale";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NotConvex: return "NotConvex";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::TooManyDegreesOfFreedom: return "TooManyDegreesOfFreedom";
    case ErrorCode::TooManyConstraintRows: return "TooManyConstraintRows";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::LotMismatch: return "LotMismatch";
    case ErrorCode::UnboundedInteger: return "UnboundedInteger";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code and, for per-component
/// failures, the index of the offending component.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what, std::optional<long> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index)
  {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<long> index() const noexcept { return index_; }

private:
  ErrorCode code_;
  std::optional<long> index_;
};

}  // namespace sapopt

#endif  // SAPOPT_ERRORS_HPP
