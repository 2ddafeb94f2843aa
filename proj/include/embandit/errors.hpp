#ifndef EMBANDIT_ERRORS_HPP
#define EMBANDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace embandit {

// Base of everything the library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Pull budget exhausted; signals a failed trial, not a bug.
struct CapExceeded final : Error {
  using Error::Error;
};

struct DimensionTooSmall final : Error {
  using Error::Error;
};

struct ParseError final : Error {
  long line = 0;
  long column = 0;
  ParseError(const std::string& what, long line_, long column_)
      : Error(what + " (line " + std::to_string(line_) + ", column " +
              std::to_string(column_) + ")"),
        line(line_),
        column(column_) {}
};

struct MeanOutOfRange final : Error {
  using Error::Error;
};

struct InfeasibleDirection final : Error {
  using Error::Error;
};

struct TooLarge final : Error {
  using Error::Error;
};

struct BudgetTooSmall final : Error {
  using Error::Error;
};

// Rounding post-check failed: a solver/rounding bug, not user error.
struct GuaranteeViolated final : Error {
  using Error::Error;
};

struct RankDeficit final : Error {
  using Error::Error;
};

struct NotPSD final : Error {
  using Error::Error;
};

struct NotReachable final : Error {
  using Error::Error;
};

struct SingularInformation final : Error {
  using Error::Error;
};

struct OddWidth final : Error {
  using Error::Error;
};

struct OddDim final : Error {
  using Error::Error;
};

struct NotUnitNorm final : Error {
  using Error::Error;
};

struct Diverged final : Error {
  using Error::Error;
};

struct ConfigError final : Error {
  std::string field;
  ConfigError(const std::string& field_, const std::string& what)
      : Error(field_ + ": " + what), field(field_) {}
};

}  // namespace embandit

#endif  // EMBANDIT_ERRORS_HPP
