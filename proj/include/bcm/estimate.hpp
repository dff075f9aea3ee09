#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcm/discretization.hpp"
#include "bcm/model.hpp"
#include "bcm/oracle.hpp"
#include "bcm/pencil.hpp"
#include "bcm/recovery.hpp"

namespace bcm {

enum class RecoveryPath {
  kPaper,  // chain-projection coefficient assembly
  kLsq,    // least-squares amplitudes against the recovered poles
  kBoth,   // paper-path model plus the lsq model for cross-checking
};

struct EstimateOptions {
  PencilConfig pencil;
  DerivativeMode derivative = DerivativeMode::kFiniteDifference;
  const ExpPolyModel* reference = nullptr;  // required in analytic mode
  RecoveryPath recovery = RecoveryPath::kPaper;
  // Per-eigenpair residuals do not reject broadband noise (every direction
  // of a full-rank noise kernel looks like an eigenvector), so the pipeline
  // additionally requires the recovered model to reproduce the trace:
  // clusters are rejected wholesale when the reconstruction residual
  // exceeds this guard.
  double noise_guard = 0.1;
};

struct EstimateResult {
  ExpPolyModel model;                      // primary recovery path
  std::optional<ExpPolyModel> lsq_model;   // set for RecoveryPath::kBoth
  std::vector<JordanCluster> clusters;
  double residual = 0.0;  // reconstruction residual of `model`
  std::vector<std::string> notes;
};

// Full spectral estimation pipeline: kernel pencil -> forward/adjoint
// truncated eigensolves -> cluster matching -> coefficient recovery ->
// reconstruction guard.  Throws InvalidInputError for grid violations,
// NoSpectrumError when nothing passes filtering, NumericalError on
// decomposition breakdown.
EstimateResult estimate_model(const SignalTrace& trace,
                              const EstimateOptions& options);

}  // namespace bcm
