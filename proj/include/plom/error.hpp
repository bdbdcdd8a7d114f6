#pragma once

#include <stdexcept>
#include <string>

namespace plom {

enum class Errc {
  ConstantRow,
  TooFewSamples,
  RankDeficiency,
  ToleranceUnreachable,
  DimensionMismatch,
  NonFiniteKernel,
  EigSolverFailure,
  NoValidEpsilon,
  NumericalBlowup,
  ConfigInvalid,
  NoConvergence,
  SingularHessian,
  EmptySampleList,
  PartitionMismatch,
  InvalidEpsilon,
  CholeskyFailure,
  IoFailure,
};

const char* to_string(Errc code);

// Process exit status for the command line tool: 2 config, 3 numeric, 4 convergence.
int exit_status(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace plom
