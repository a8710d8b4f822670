#pragma once

#include <stdexcept>
#include <string>

namespace dyadnet {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  IdentityPair,
  NodeOutOfRange,
  IndexOutOfRange,
  EmptyCell,
  AllCellsEmpty,
  AmbiguousSpecialRegressor,
  NonPositiveDensity,
  SingularDesign,
  IsolatedNodes,
  GroupTooSmall,
  EmptyReference,
  UnknownLevelValue,
  LevelCollapse,
  ParseError,
  DuplicatePair,
  SelfLoop,
  MissingPair,
  UnknownColumn,
};

// Usage errors are caller mistakes, data errors come from inputs, numerical
// errors from the fitting stage. The CLI maps them to exit codes 2/3/4.
enum class ErrorCategory { Usage, Data, Numerical };

const char* to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dyadnet
