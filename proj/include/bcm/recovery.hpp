#pragma once

#include <vector>

#include "bcm/discretization.hpp"
#include "bcm/model.hpp"
#include "bcm/pencil.hpp"

namespace bcm {

// Projections of the response onto a cluster's control chains:
//   b_i = <r(T-.), g^i>   (conjugation on the control, sesquilinear)
//   d_i = sum_j w_j r(T-tau_j) f^i_j   (bilinear)
// r(T-tau_j) is read from the trace at exact sample nodes.
struct ProjectionCoeffs {
  std::vector<Complex> b;
  std::vector<Complex> d;
  int level = 0;
};

// Rescales the forward chain (f only; the split is immaterial to downstream
// products) so that <C^T f^i, g^i> = 1 for every chain index.  Throws
// NumericalError on a degenerate pairing.
void normalize_level0(JordanCluster& cluster, const KernelPencil& pencil);

// Projection coefficients at normalization level l.  Levels l >= 1 are
// defined through the chain identity [C^T (d/dt - lambda)]^l f^i =
// C^T f^{i-l}, under which every level's normalization constant collapses to
// the level-0 pairing for chain-consistent families; the level argument
// therefore only gates availability: the result is empty once
// l >= multiplicity (no coefficient a^{l+1} exists).
ProjectionCoeffs project_b_d(const JordanCluster& cluster,
                             const KernelPencil& pencil, int level);

// Assembles the amplitude coefficients of every matched cluster.  Works on
// the raw (unnormalized) chains through the pairing Gram matrix
// Q[i][m] = <C^T f^i, g^m>: under the pencil's chain freedom the computed
// chains are Toeplitz contaminations of the true ones, Q is lower-triangular
// Toeplitz in i-m, and back-substitution against the anti-diagonal averages
// of Q removes the contamination exactly.  For L = 1 this reduces to the
// plain normalized product b*d.  A degenerate pairing (|Q_0| below
// 1e-12 * chain scale) marks the mode unrecovered instead of failing.
ExpPolyModel recover_coefficients(const std::vector<JordanCluster>& clusters,
                                  const KernelPencil& pencil,
                                  const SignalTrace& trace);

// Independent amplitude path: least-squares fit of the factorial-basis
// confluent columns t^i e^{lambda t} / i! against the trace, with column
// norm scaling.  Rank deficiency raises an error naming the closest pole
// pair.
ExpPolyModel recover_amplitudes_lsq(const std::vector<Pole>& poles,
                                    const SignalTrace& trace);

}  // namespace bcm
