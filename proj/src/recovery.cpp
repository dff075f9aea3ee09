#include "bcm/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/QR>

namespace bcm {

namespace {

constexpr double kDegeneratePairingTol = 1e-12;

// r(T - tau_j) read off the trace: T - tau_j = (n-1-j)*h is sample n-1-j.
Vec response_at_reflected_nodes(const KernelPencil& pencil,
                                const SignalTrace& trace) {
  const std::size_t n = pencil.grid.n;
  if (trace.values.size() != 2 * n - 1) {
    throw InvalidInputError("recovery: trace does not match the pencil grid");
  }
  Vec r(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    r(static_cast<Eigen::Index>(j)) = trace.values[n - 1 - j];
  }
  return r;
}

struct ClusterQuadratures {
  Mat q;              // Q[i][m] = <C^T f^i, g^m>
  std::vector<Complex> q_diag;  // anti-index averages Q_delta
  std::vector<Complex> b;       // <r_T, g^i>
  std::vector<Complex> d;       // sum_j w_j r_T(j) f^i_j
  double scale = 0.0;
};

ClusterQuadratures cluster_quadratures(const JordanCluster& cluster,
                                       const KernelPencil& pencil,
                                       const Vec& r_reflected) {
  const int L = cluster.multiplicity;
  ClusterQuadratures out;
  std::vector<Vec> cf(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    cf[static_cast<std::size_t>(i)] =
        apply_connecting(pencil, cluster.chain[static_cast<std::size_t>(i)]);
  }
  out.q.resize(L, L);
  for (int i = 0; i < L; ++i) {
    for (int m = 0; m < L; ++m) {
      out.q(i, m) =
          inner_product(cf[static_cast<std::size_t>(i)],
                        cluster.adjoint_chain[static_cast<std::size_t>(m)],
                        pencil.grid);
    }
  }
  out.q_diag.resize(static_cast<std::size_t>(L));
  for (int delta = 0; delta < L; ++delta) {
    Complex sum = 0.0;
    for (int i = delta; i < L; ++i) sum += out.q(i, i - delta);
    out.q_diag[static_cast<std::size_t>(delta)] =
        sum / static_cast<double>(L - delta);
  }
  out.b.resize(static_cast<std::size_t>(L));
  out.d.resize(static_cast<std::size_t>(L));
  const Vec w = pencil.grid.weights.cast<Complex>();
  for (int i = 0; i < L; ++i) {
    out.b[static_cast<std::size_t>(i)] = inner_product(
        r_reflected, cluster.adjoint_chain[static_cast<std::size_t>(i)],
        pencil.grid);
    out.d[static_cast<std::size_t>(i)] =
        (w.array() * r_reflected.array() *
         cluster.chain[static_cast<std::size_t>(i)].array())
            .sum();
  }
  double scale = 0.0;
  for (int i = 0; i < L; ++i) {
    scale += cf[static_cast<std::size_t>(i)].norm() *
             cluster.adjoint_chain[static_cast<std::size_t>(i)].norm();
  }
  out.scale = scale / static_cast<double>(L);
  return out;
}

}  // namespace

void normalize_level0(JordanCluster& cluster, const KernelPencil& pencil) {
  if (cluster.adjoint_chain.size() != cluster.chain.size()) {
    throw InvalidInputError("normalize: cluster has no matched adjoint chain");
  }
  for (std::size_t i = 0; i < cluster.chain.size(); ++i) {
    const Vec cf = apply_connecting(pencil, cluster.chain[i]);
    const Complex q = inner_product(cf, cluster.adjoint_chain[i], pencil.grid);
    const double scale = cf.norm() * cluster.adjoint_chain[i].norm();
    if (!(std::abs(q) > kDegeneratePairingTol * scale)) {
      std::ostringstream os;
      os << "degenerate pairing at chain index " << (i + 1);
      throw NumericalError(os.str());
    }
    cluster.chain[i] /= q;
  }
}

ProjectionCoeffs project_b_d(const JordanCluster& cluster,
                             const KernelPencil& pencil, int level) {
  ProjectionCoeffs out;
  out.level = level;
  if (level < 0) {
    throw InvalidInputError("project: level must be non-negative");
  }
  if (level >= cluster.multiplicity) {
    return out;  // no coefficient a^{level+1} exists
  }
  const Vec r_reflected = response_at_reflected_nodes(pencil, pencil.trace);
  const Vec w = pencil.grid.weights.cast<Complex>();
  const int L = cluster.multiplicity;
  out.b.resize(static_cast<std::size_t>(L));
  out.d.resize(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    out.b[static_cast<std::size_t>(i)] = inner_product(
        r_reflected, cluster.adjoint_chain[static_cast<std::size_t>(i)],
        pencil.grid);
    out.d[static_cast<std::size_t>(i)] =
        (w.array() * r_reflected.array() *
         cluster.chain[static_cast<std::size_t>(i)].array())
            .sum();
  }
  return out;
}

ExpPolyModel recover_coefficients(const std::vector<JordanCluster>& clusters,
                                  const KernelPencil& pencil,
                                  const SignalTrace& trace) {
  const Vec r_reflected = response_at_reflected_nodes(pencil, trace);
  std::vector<Mode> modes;
  bool any_unrecovered = false;
  for (const JordanCluster& c : clusters) {
    if (c.adjoint_chain.size() != c.chain.size() || c.chain.empty()) {
      throw InvalidInputError("recover: cluster is not a matched pair");
    }
    const int L = c.multiplicity;
    const ClusterQuadratures quads = cluster_quadratures(c, pencil, r_reflected);

    Mode mode;
    mode.pole = Pole{c.lambda, L};
    mode.coeffs.assign(static_cast<std::size_t>(L), Complex(0.0));
    const Complex q0 = quads.q_diag[0];
    if (!(std::abs(q0) > kDegeneratePairingTol * quads.scale)) {
      mode.unrecovered = true;
      any_unrecovered = true;
      modes.push_back(std::move(mode));
      continue;
    }
    // Back-substitution down the anti-diagonals: delta = 0 recovers a^L,
    // delta = L-1 recovers a^1.
    for (int delta = 0; delta < L; ++delta) {
      const int l = L - 1 - delta;  // zero-based target coefficient index
      Complex acc = 0.0;
      for (int i = l; i < L; ++i) {
        acc += quads.b[static_cast<std::size_t>(i)] *
               quads.d[static_cast<std::size_t>(i - l)];
      }
      for (int r = 0; r < delta; ++r) {
        acc -= quads.q_diag[static_cast<std::size_t>(delta - r)] *
               mode.coeffs[static_cast<std::size_t>(L - 1 - r)];
      }
      mode.coeffs[static_cast<std::size_t>(l)] = acc / q0;
    }
    modes.push_back(std::move(mode));
  }
  return make_model(std::move(modes), /*non_generic=*/any_unrecovered);
}

ExpPolyModel recover_amplitudes_lsq(const std::vector<Pole>& poles,
                                    const SignalTrace& trace) {
  if (poles.empty()) {
    throw InvalidInputError("amplitude fit: empty pole set");
  }
  Eigen::Index cols = 0;
  for (const Pole& p : poles) {
    if (p.multiplicity < 1) {
      throw InvalidInputError("amplitude fit: multiplicity must be >= 1");
    }
    cols += p.multiplicity;
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(trace.values.size());
  if (cols > rows) {
    throw InvalidInputError("amplitude fit: more unknowns than samples");
  }

  Mat design(rows, cols);
  Eigen::Index col = 0;
  for (const Pole& p : poles) {
    for (int i = 0; i < p.multiplicity; ++i, ++col) {
      double fact = 1.0;
      for (int q = 2; q <= i; ++q) fact *= static_cast<double>(q);
      for (Eigen::Index j = 0; j < rows; ++j) {
        const double t = trace.t0 + static_cast<double>(j) * trace.h;
        design(j, col) =
            std::pow(t, static_cast<double>(i)) * std::exp(p.lambda * t) / fact;
      }
    }
  }

  RealVec scales(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double s = design.col(c).norm();
    scales(c) = s > 0.0 ? s : 1.0;
    design.col(c) /= scales(c);
  }

  Vec rhs(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    rhs(j) = trace.values[static_cast<std::size_t>(j)];
  }

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(design);
  if (cod.rank() < cols) {
    // Name the closest pole pair: that is where collinearity comes from.
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poles.size(); ++i) {
      for (std::size_t j = i + 1; j < poles.size(); ++j) {
        const double d = std::abs(poles[i].lambda - poles[j].lambda);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    std::ostringstream os;
    os << "amplitude fit: design matrix is rank deficient; closest poles ("
       << poles[bi].lambda.real() << "," << poles[bi].lambda.imag()
       << ") and (" << poles[bj].lambda.real() << ","
       << poles[bj].lambda.imag() << ")";
    throw NumericalError(os.str());
  }
  const Vec sol = cod.solve(rhs).cwiseQuotient(scales.cast<Complex>());

  std::vector<Mode> modes;
  bool zero_leading = false;
  col = 0;
  for (const Pole& p : poles) {
    Mode mode;
    mode.pole = p;
    mode.coeffs.resize(static_cast<std::size_t>(p.multiplicity));
    for (int i = 0; i < p.multiplicity; ++i, ++col) {
      mode.coeffs[static_cast<std::size_t>(i)] = sol(col);
    }
    zero_leading = zero_leading || std::abs(mode.coeffs.back()) == 0.0;
    modes.push_back(std::move(mode));
  }
  // An exactly-zero fit (e.g. a silent channel) is legitimate here.
  return make_model(std::move(modes), /*non_generic=*/zero_leading);
}

}  // namespace bcm
