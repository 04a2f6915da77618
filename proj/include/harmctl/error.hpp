#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace harm {

enum class ErrorCode {
  MissingColumn,
  MalformedRow,
  ScoreOutOfRange,
  DuplicateInstance,
  UnknownLabel,
  InconsistentLabel,
  InvalidRecord,
  OrphanPrediction,
  EmptyDataset,
  LambdaOutOfRange,
  EmptyGrid,
  AlphaTooSmall,
  Infeasible,
  AlphaSplitInvalid,
  EmptyStratum,
  DegenerateRow,
  InvalidProfile,
  InsufficientData,
  ConfigInvalid,
  Io,
};

std::string_view to_string(ErrorCode code);

// Process exit code contract: 0 ok, 1 config, 2 infeasible calibration, 3 data.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace harm
