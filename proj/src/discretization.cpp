#include "bcm/discretization.hpp"

#include <cmath>
#include <sstream>

namespace bcm {

Grid make_grid(double T, std::size_t n) {
  if (!(T > 0.0)) {
    throw InvalidInputError("grid: T must be positive");
  }
  if (n < 8) {
    throw InvalidInputError("grid: need at least 8 nodes");
  }
  Grid grid;
  grid.T = T;
  grid.n = n;
  grid.h = T / static_cast<double>(n - 1);
  grid.weights = RealVec::Constant(static_cast<Eigen::Index>(n), grid.h);
  grid.weights(0) = grid.h / 2.0;
  grid.weights(static_cast<Eigen::Index>(n) - 1) = grid.h / 2.0;
  return grid;
}

std::vector<Complex> derivative_samples(const std::vector<Complex>& values,
                                        double h) {
  const std::size_t N = values.size();
  if (N < 5) {
    throw InvalidInputError("derivative: too few nodes");
  }
  if (!(h > 0.0)) {
    throw InvalidInputError("derivative: step must be positive");
  }
  std::vector<Complex> d(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (i >= 2 && i + 2 < N) {
      d[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] -
              values[i + 2]) /
             (12.0 * h);
    } else if (i == 0) {
      d[i] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    } else if (i == 1) {
      d[i] = (values[2] - values[0]) / (2.0 * h);
    } else if (i + 2 == N) {
      d[i] = (values[N - 1] - values[N - 3]) / (2.0 * h);
    } else {  // i + 1 == N
      d[i] = (3.0 * values[N - 1] - 4.0 * values[N - 2] + values[N - 3]) /
             (2.0 * h);
    }
  }
  return d;
}

KernelPencil build_pencil(const SignalTrace& trace, DerivativeMode mode,
                          const ExpPolyModel* truth) {
  const std::size_t N = trace.values.size();
  if (N < 15 || N % 2 == 0) {
    std::ostringstream os;
    os << "pencil: trace must hold an odd number (2n-1, n >= 8) of samples, "
          "got "
       << N;
    throw InvalidInputError(os.str());
  }
  const std::size_t n = (N + 1) / 2;
  const double span = static_cast<double>(N - 1) * trace.h;
  if (std::abs(trace.t0) > 1e-12 * span) {
    throw InvalidInputError("pencil: trace must start at t = 0");
  }
  if (mode == DerivativeMode::kAnalytic && truth == nullptr) {
    throw InvalidInputError("pencil: analytic mode needs a reference model");
  }

  std::vector<Complex> dr;
  if (mode == DerivativeMode::kFiniteDifference) {
    dr = derivative_samples(trace.values, trace.h);
  } else {
    dr.resize(N);
    for (std::size_t m = 0; m < N; ++m) {
      dr[m] = evaluate_derivative(*truth, static_cast<double>(m) * trace.h);
    }
  }

  KernelPencil pencil;
  pencil.grid = make_grid(static_cast<double>(n - 1) * trace.h, n);
  pencil.trace = trace;
  const Eigen::Index ni = static_cast<Eigen::Index>(n);
  pencil.R.resize(ni, ni);
  pencil.Rdot.resize(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      const std::size_t m = 2 * (n - 1) - static_cast<std::size_t>(i + j);
      pencil.R(i, j) = trace.values[m];
      pencil.Rdot(i, j) = dr[m];
    }
  }
  return pencil;
}

Vec apply_connecting(const KernelPencil& pencil, const Vec& f) {
  if (f.size() != pencil.R.cols()) {
    throw InvalidInputError("apply_connecting: control length mismatch");
  }
  return pencil.R * pencil.grid.weights.cast<Complex>().cwiseProduct(f);
}

Complex inner_product(const Vec& a, const Vec& b, const Grid& grid) {
  if (a.size() != b.size() ||
      a.size() != static_cast<Eigen::Index>(grid.n)) {
    throw InvalidInputError("inner_product: length mismatch");
  }
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    s += grid.weights(i) * a(i) * std::conj(b(i));
  }
  return s;
}

Vec differentiate(const Vec& f, const Grid& grid) {
  if (f.size() != static_cast<Eigen::Index>(grid.n)) {
    throw InvalidInputError("differentiate: control length mismatch");
  }
  if (grid.n < 5) {
    throw InvalidInputError("differentiate: too few nodes");
  }
  std::vector<Complex> values(f.data(), f.data() + f.size());
  const std::vector<Complex> d = derivative_samples(values, grid.h);
  Vec out(f.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = d[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace bcm
