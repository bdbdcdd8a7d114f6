#include "plom/error.hpp"

namespace plom {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::ConstantRow: return "ConstantRow";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::RankDeficiency: return "RankDeficiency";
    case Errc::ToleranceUnreachable: return "ToleranceUnreachable";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteKernel: return "NonFiniteKernel";
    case Errc::EigSolverFailure: return "EigSolverFailure";
    case Errc::NoValidEpsilon: return "NoValidEpsilon";
    case Errc::NumericalBlowup: return "NumericalBlowup";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularHessian: return "SingularHessian";
    case Errc::EmptySampleList: return "EmptySampleList";
    case Errc::PartitionMismatch: return "PartitionMismatch";
    case Errc::InvalidEpsilon: return "InvalidEpsilon";
    case Errc::CholeskyFailure: return "CholeskyFailure";
    case Errc::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

int exit_status(Errc code) {
  switch (code) {
    case Errc::ConfigInvalid:
    case Errc::DimensionMismatch:
    case Errc::PartitionMismatch:
    case Errc::EmptySampleList:
    case Errc::InvalidEpsilon:
    case Errc::TooFewSamples:
    case Errc::IoFailure:
      return 2;
    case Errc::NoConvergence:
      return 4;
    default:
      return 3;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace plom
