#include "harmctl/error.hpp"

namespace harm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::InconsistentLabel: return "InconsistentLabel";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::OrphanPrediction: return "OrphanPrediction";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::AlphaTooSmall: return "AlphaTooSmall";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::AlphaSplitInvalid: return "AlphaSplitInvalid";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::EmptyGrid:
    case ErrorCode::InvalidProfile:
    case ErrorCode::LambdaOutOfRange:
      return 1;
    case ErrorCode::AlphaTooSmall:
    case ErrorCode::Infeasible:
    case ErrorCode::AlphaSplitInvalid:
      return 2;
    default:
      return 3;
  }
}

}  // namespace harm
