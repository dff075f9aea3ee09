#pragma once

#include <cstddef>
#include <vector>

#include "bcm/model.hpp"

namespace bcm {

struct EstimateOptions;  // see bcm/estimate.hpp

// Boundary response observed at the two ends of the interval: channel 0 is
// v(0,t), channel 1 is v(1,t), sampled on one shared grid.
struct TwoChannelResponse {
  SignalTrace channel0;
  SignalTrace channel1;
};

// Shared pole set with per-channel amplitude polynomials.  A channel may
// carry an all-zero coefficient list for a mode it does not excite; the pole
// stays in the set because the other channel sees it.
struct TwoChannelModel {
  std::vector<Pole> poles;  // canonical order: (Re lambda, Im lambda)
  std::vector<std::vector<Complex>> coeffs0;  // factorial basis, per pole
  std::vector<std::vector<Complex>> coeffs1;
};

// Single-channel view (always built with the non-generic flag set, since a
// channel is allowed to miss modes).
ExpPolyModel channel_model(const TwoChannelModel& model, int channel);

// Poles and multiplicities come from channel 0's kernel pencil (channel 1 if
// channel 0 is numerically zero); both channels' amplitudes are then fitted
// against the shared poles by linear least squares, and modes a channel does
// not excite inherit exact zero coefficients.
TwoChannelModel estimate_two_channel(const TwoChannelResponse& resp,
                                     const EstimateOptions& options);

struct GenericityReport {
  bool generic = true;
  std::vector<std::size_t> failing_modes;  // indices into TwoChannelModel::poles
};

// A mode passes if at least one channel gives it a leading coefficient with
// modulus above threshold * (largest coefficient modulus in the model).
GenericityReport is_generic(const TwoChannelModel& model,
                            double threshold = 1e-8);

// Evaluates both channels on the grid t_from + j*h up to t_to (inclusive of
// the last node <= t_to + h/2).  Refuses growth beyond the overflow guard
// max(Re lambda)*t > 700 with an InvalidInputError.
TwoChannelResponse extend_response(const TwoChannelModel& model, double t_from,
                                   double t_to, double h);

}  // namespace bcm
