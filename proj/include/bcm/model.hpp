#pragma once

#include <cstddef>
#include <vector>

#include "bcm/types.hpp"

namespace bcm {

// Signals are finite sums of exponential-polynomial modes
//
//   r(t) = sum_k e^{lambda_k t} (a_k^1 + a_k^2 t + a_k^3 t^2/2! + ...),
//
// i.e. amplitude polynomials are stored in the factorial-weighted basis
// t^{i-1}/(i-1)!.  The recovery formulas produce coefficients in this basis
// directly; the plain monomial basis is available as a view via
// to_monomial/from_monomial.

struct Pole {
  Complex lambda;
  int multiplicity = 1;  // chain length L >= 1; polynomial degree is L-1
};

struct Mode {
  Pole pole;
  std::vector<Complex> coeffs;  // a^1..a^L, factorial basis, length = L
  bool unrecovered = false;     // set when a degenerate pairing blocked recovery
};

struct ExpPolyModel {
  std::vector<Mode> modes;  // canonical order: sorted by (Re lambda, Im lambda)
  bool non_generic = false; // permits a vanishing leading coefficient a^L
};

// Poles closer than this relative separation cannot coexist in one model;
// the spectral estimator would merge them into a single cluster anyway
// (matches the pencil module's default cluster tolerance scale).
inline constexpr double kPoleMergeTol = 1e-6;

// Validates invariants (finite poles, multiplicity/coefficient length match,
// pairwise pole separation, nonzero leading coefficients unless non_generic)
// and sorts modes canonically.  Throws InvalidInputError on violation.
ExpPolyModel make_model(std::vector<Mode> modes, bool non_generic = false);

Complex evaluate(const ExpPolyModel& model, double t);

// Exact analytic derivative; in the factorial basis the derivative of a mode
// has coefficients a'^i = lambda a^i + a^{i+1}.
Complex evaluate_derivative(const ExpPolyModel& model, double t);

struct SignalTrace {
  double t0 = 0.0;
  double h = 0.0;                // positive step; sample j sits at t0 + j*h
  std::vector<Complex> values;
};

SignalTrace synthesize(const ExpPolyModel& model, double t0, double h,
                       std::size_t n);

// Basis bridges: monomial coefficient of t^i equals a^{i+1}/i!.
std::vector<Complex> to_monomial(const std::vector<Complex>& coeffs);
std::vector<Complex> from_monomial(const std::vector<Complex>& monomial);

// Relative L2 distance of the two signals over [w0, w1], by trapezoid
// quadrature on at least 1001 nodes; normalized by the larger signal norm so
// the distance is symmetric, and 0 exactly when both signals vanish.
double model_distance(const ExpPolyModel& a, const ExpPolyModel& b, double w0,
                      double w1, std::size_t nodes = 1001);

}  // namespace bcm
