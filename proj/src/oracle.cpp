#include "bcm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace bcm {

std::vector<Pole> matrix_pencil_estimate(const SignalTrace& trace,
                                         int order_cap) {
  const std::size_t N = trace.values.size();
  if (N < 4) {
    throw InvalidInputError("matrix pencil: too few samples");
  }
  if (order_cap < 1) {
    throw InvalidInputError("matrix pencil: order cap must be >= 1");
  }
  const std::size_t p = N / 2;
  const Eigen::Index rows = static_cast<Eigen::Index>(p);
  const Eigen::Index colc = static_cast<Eigen::Index>(N - p);
  Mat y0(rows, colc);
  Mat y1(rows, colc);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < colc; ++j) {
      y0(i, j) = trace.values[static_cast<std::size_t>(i + j)];
      y1(i, j) = trace.values[static_cast<std::size_t>(i + j) + 1];
    }
  }
  Eigen::BDCSVD<Mat> svd(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) {
    throw NoSpectrumError("matrix pencil: zero data");
  }
  Eigen::Index rho = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > 1e-10 * sigma(0)) ++rho;
  }
  rho = std::min<Eigen::Index>(rho, order_cap);
  const Mat k =
      sigma.head(rho).cwiseInverse().cast<Complex>().asDiagonal() *
      (svd.matrixU().leftCols(rho).adjoint() * y1 *
       svd.matrixV().leftCols(rho));
  Eigen::ComplexEigenSolver<Mat> eig(k, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("matrix pencil: eigensolve failed");
  }
  std::vector<Pole> poles;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const Complex z = eig.eigenvalues()(i);
    if (std::abs(z) < std::numeric_limits<double>::min()) continue;
    poles.push_back(Pole{std::log(z) / trace.h, 1});
  }
  std::sort(poles.begin(), poles.end(), [](const Pole& a, const Pole& b) {
    if (a.lambda.real() != b.lambda.real()) {
      return a.lambda.real() < b.lambda.real();
    }
    return a.lambda.imag() < b.lambda.imag();
  });
  return poles;
}

double reconstruction_residual(const ExpPolyModel& model,
                               const SignalTrace& trace) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < trace.values.size(); ++j) {
    const double t = trace.t0 + static_cast<double>(j) * trace.h;
    num += std::norm(evaluate(model, t) - trace.values[j]);
    den += std::norm(trace.values[j]);
  }
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return std::sqrt(num / den);
}

}  // namespace bcm
