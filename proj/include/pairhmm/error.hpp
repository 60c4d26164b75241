#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pairhmm {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ShapeMismatch,
  NonErgodic,
  ImpossibleSequence,
  SequenceTooShort,
  ZeroRow,
  KTooLarge,
  NumericalBreakdown,
  SingularKKT,
  NonFeasibleStart,
  ParseError,
  EmptyCorpus,
  NoPairs,
  EmptyIndex,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pairhmm
