#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pwsc {

enum class ErrorCode {
  ConfigError,
  QuadratureFailure,
  UnsupportedModel,
  BlowUp,
  StepSizeUnderflow,
  NonConvergence,
  Indeterminate,
  RootFindingFailure,
  OnOrBelowManifold,
  ThresholdUnavailable,
  DomainError,
  NoHopfRegime,
  NoCycleFound,
  BracketInvalid,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pwsc
