#pragma once

#include <cstddef>
#include <vector>

#include "bcm/model.hpp"
#include "bcm/types.hpp"

namespace bcm {

// Uniform grid t_i = i*h on [0,T] with trapezoid quadrature weights
// w = h*(1/2, 1, ..., 1, 1/2).
struct Grid {
  double T = 0.0;
  std::size_t n = 0;
  double h = 0.0;
  RealVec weights;
};

Grid make_grid(double T, std::size_t n);

// Discrete kernels of the connecting operator and its time derivative:
// R[i][j] = r(2T - t_i - t_j), Rdot[i][j] = rdot(2T - t_i - t_j).  Because
// the trace spans [0,2T] with 2n-1 samples, every kernel argument lands
// exactly on a sample node: entry (i,j) is trace value 2(n-1)-i-j, which
// makes both matrices Hankel by construction (constant anti-diagonals).
struct KernelPencil {
  Grid grid;
  Mat R;
  Mat Rdot;
  SignalTrace trace;  // the generating samples, kept for coefficient recovery
};

enum class DerivativeMode {
  kFiniteDifference,  // stencils on the trace itself
  kAnalytic,          // exact derivative of a supplied ground-truth model
};

// Derivative samples of a uniformly spaced sequence: 4th-order central
// stencil in the interior, 2nd-order one-sided/short stencils at the two
// edge nodes on each end.
std::vector<Complex> derivative_samples(const std::vector<Complex>& values,
                                        double h);

// Requires an odd sample count 2n-1 (n >= 8) and a trace starting at t = 0.
// In analytic mode `truth` supplies rdot; in finite-difference mode the
// derivative comes from derivative_samples on the trace.
KernelPencil build_pencil(const SignalTrace& trace, DerivativeMode mode,
                          const ExpPolyModel* truth = nullptr);

// Quadrature discretization of (C^T f)(t_i) = int_0^T r(2T-t_i-tau) f(tau)
// dtau, i.e. R*W*f with W the diagonal weight matrix.
Vec apply_connecting(const KernelPencil& pencil, const Vec& f);

// Sesquilinear quadrature pairing sum_i w_i a_i conj(b_i).
Complex inner_product(const Vec& a, const Vec& b, const Grid& grid);

// Same stencil family as derivative_samples, applied to a control on [0,T].
Vec differentiate(const Vec& f, const Grid& grid);

}  // namespace bcm
