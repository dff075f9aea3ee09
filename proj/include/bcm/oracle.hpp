#pragma once

#include <vector>

#include "bcm/model.hpp"

namespace bcm {

// Classical shifted-Hankel sample pencil on the raw trace: an estimation
// path fully independent of the connecting-operator machinery, used for
// cross-validation.  Returns simple poles only (multiplicity 1), eigenvalues
// mapped z -> log(z)/h with the imaginary part folded into (-pi/h, pi/h].
// An order_cap above the numerical rank is reduced silently.
std::vector<Pole> matrix_pencil_estimate(const SignalTrace& trace,
                                         int order_cap);

// Relative L2 error between the model evaluated on the trace grid and the
// trace values (0 for a perfect match; 1 for the zero model against any
// nonzero trace).
double reconstruction_residual(const ExpPolyModel& model,
                               const SignalTrace& trace);

}  // namespace bcm
