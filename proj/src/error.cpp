#include "pairhmm/error.hpp"

namespace pairhmm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonErgodic: return "NonErgodic";
    case ErrorCode::ImpossibleSequence: return "ImpossibleSequence";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorCode::SingularKKT: return "SingularKKT";
    case ErrorCode::NonFeasibleStart: return "NonFeasibleStart";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace pairhmm
