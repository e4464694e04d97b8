#include "pwsc/error.hpp"

namespace pwsc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::UnsupportedModel: return "UnsupportedModel";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::Indeterminate: return "Indeterminate";
    case ErrorCode::RootFindingFailure: return "RootFindingFailure";
    case ErrorCode::OnOrBelowManifold: return "OnOrBelowManifold";
    case ErrorCode::ThresholdUnavailable: return "ThresholdUnavailable";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NoHopfRegime: return "NoHopfRegime";
    case ErrorCode::NoCycleFound: return "NoCycleFound";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace pwsc
