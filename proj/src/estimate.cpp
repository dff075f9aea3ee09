#include "bcm/estimate.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace bcm {

EstimateResult estimate_model(const SignalTrace& trace,
                              const EstimateOptions& options) {
  if (options.derivative == DerivativeMode::kAnalytic &&
      options.reference == nullptr) {
    throw InvalidInputError("estimate: analytic mode needs a reference model");
  }
  const KernelPencil pencil =
      build_pencil(trace, options.derivative, options.reference);

  const std::vector<JordanCluster> forward =
      solve_forward(pencil, options.pencil);
  const std::vector<JordanCluster> adjoint =
      solve_adjoint(pencil, options.pencil);

  EstimateResult result;
  result.clusters =
      match_clusters(forward, adjoint, options.pencil, &result.notes);
  if (result.clusters.empty()) {
    throw NoSpectrumError("no clusters passed filtering");
  }

  std::vector<Pole> poles;
  poles.reserve(result.clusters.size());
  for (const JordanCluster& c : result.clusters) {
    poles.push_back(Pole{c.lambda, c.multiplicity});
  }

  switch (options.recovery) {
    case RecoveryPath::kPaper:
      result.model = recover_coefficients(result.clusters, pencil, trace);
      break;
    case RecoveryPath::kLsq:
      result.model = recover_amplitudes_lsq(poles, trace);
      break;
    case RecoveryPath::kBoth:
      result.model = recover_coefficients(result.clusters, pencil, trace);
      result.lsq_model = recover_amplitudes_lsq(poles, trace);
      break;
  }

  result.residual = reconstruction_residual(result.model, trace);

  bool any_unrecovered = false;
  for (const Mode& m : result.model.modes) {
    any_unrecovered = any_unrecovered || m.unrecovered;
    if (m.unrecovered) {
      std::ostringstream os;
      os << "degenerate pairing: coefficients of the mode at lambda = ("
         << m.pole.lambda.real() << "," << m.pole.lambda.imag()
         << ") were not recovered";
      result.notes.push_back(os.str());
    }
  }

  // Written as a negated <= so NaN/Inf residuals also reject.
  if (!any_unrecovered && !(result.residual <= options.noise_guard)) {
    std::ostringstream os;
    os << "no clusters passed filtering: reconstruction residual "
       << result.residual << " exceeds the noise guard " << options.noise_guard;
    throw NoSpectrumError(os.str());
  }
  return result;
}

}  // namespace bcm
