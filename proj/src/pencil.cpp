#include "bcm/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace bcm {

namespace {

// Relative radius for the validated-merge pass.  Defective eigenvalues of
// multiplicity L split by roughly (rounding error)^(1/L), i.e. far wider
// than cluster_tol; merging across this radius is safe because a merge is
// accepted only when the combined chain rebuilds exactly.
constexpr double kDefectMergeRadius = 2e-2;

bool lex_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

Mat thin_q(const Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  return qr.householderQ() * Mat::Identity(m.rows(), m.cols());
}

// Working state for one side of the problem after SVD truncation.
struct ReducedSolve {
  Mat A;        // Rdot*W (or its conjugate twin)
  Mat B;        // R*W
  Mat Vr;       // n x rho retained right singular directions
  Mat UrSinv;   // n x rho, Ur * diag(1/sigma)
  Mat AVr;      // A * Vr
  Mat BVr;      // B * Vr
  Mat evecs;    // rho x rho reduced right eigenvectors
  Mat levecs;   // rho x rho, rows are reduced left eigenvectors
  Vec evals;
  double norm_a = 0.0;  // Frobenius
  double norm_b = 0.0;
};

struct Candidate {
  JordanCluster cluster;
  std::vector<Eigen::Index> members;  // reduced eigenpair indices
};

double eigpair_residual(const ReducedSolve& rs, const Complex& lambda,
                        const Vec& f) {
  const double num = (rs.A * f - lambda * (rs.B * f)).norm();
  const double den =
      (rs.norm_a + std::abs(lambda) * rs.norm_b) * f.norm();
  return num / den;
}

// Two-sided refinement of the cluster representative: project the pencil on
// the QR-orthonormalized right/left cluster subspaces (the individual
// eigenvectors of a defective cluster are nearly parallel, the subspaces are
// well conditioned) and average the eigenvalues of the projected operator.
Complex refined_lambda(const ReducedSolve& rs,
                       const std::vector<Eigen::Index>& members, Mat* x_out) {
  const Eigen::Index k = static_cast<Eigen::Index>(members.size());
  Mat right(rs.Vr.rows(), k);
  Mat left(rs.UrSinv.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c) {
    right.col(c) = rs.Vr * rs.evecs.col(members[c]);
    left.col(c) = rs.UrSinv * rs.levecs.row(members[c]).adjoint();
  }
  const Mat x = thin_q(right);
  const Mat y = thin_q(left);
  const Mat gb = y.adjoint() * rs.B * x;
  const Mat ga = y.adjoint() * rs.A * x;
  const Mat gp = gb.partialPivLu().solve(ga);
  if (x_out != nullptr) *x_out = x;
  return gp.trace() / static_cast<double>(k);
}

std::optional<Candidate> build_cluster(const ReducedSolve& rs,
                                       std::vector<Eigen::Index> members,
                                       const PencilConfig& config) {
  Mat x;
  const Complex lambda = refined_lambda(rs, members, &x);

  // Seed the chain with the minimum-residual direction inside the cluster's
  // eigenvector span: the smallest singular direction of (A - lambda B)|x.
  const Mat m = rs.A * x - lambda * (rs.B * x);
  Eigen::JacobiSVD<Mat> seed_svd(m, Eigen::ComputeThinV);
  Vec seed = x * seed_svd.matrixV().col(seed_svd.matrixV().cols() - 1);
  seed /= seed.norm();

  JordanCluster cluster;
  cluster.lambda = lambda;
  cluster.chain.push_back(seed);
  cluster.residuals.push_back(eigpair_residual(rs, lambda, seed));
  if (cluster.residuals[0] > config.residual_tol) {
    return std::nullopt;
  }

  const int target =
      std::min<int>(static_cast<int>(members.size()), config.max_chain);
  const Mat p = rs.AVr - lambda * rs.BVr;
  Eigen::CompleteOrthogonalDecomposition<Mat> lsq(p);
  for (int i = 1; i < target; ++i) {
    const Vec rhs = rs.B * cluster.chain.back();
    const Vec f = rs.Vr * lsq.solve(rhs);
    const double num = (rs.A * f - lambda * (rs.B * f) - rhs).norm();
    const double scale =
        (rs.norm_a + std::abs(lambda) * rs.norm_b) * f.norm() +
        rs.norm_b * cluster.chain.back().norm();
    const double rel = num / scale;
    if (rel > config.residual_tol) {
      cluster.truncated = true;
      break;
    }
    cluster.chain.push_back(f);
    cluster.residuals.push_back(rel);
  }
  cluster.multiplicity = static_cast<int>(cluster.chain.size());
  return Candidate{std::move(cluster), std::move(members)};
}

std::vector<JordanCluster> solve_side(const Mat& r, const Mat& rdot,
                                      const Grid& grid,
                                      const PencilConfig& config) {
  ReducedSolve rs;
  const Vec w = grid.weights.cast<Complex>();
  rs.B = r * w.asDiagonal();
  rs.A = rdot * w.asDiagonal();
  rs.norm_a = rs.A.norm();
  rs.norm_b = rs.B.norm();

  Eigen::BDCSVD<Mat> svd(rs.B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVec& sigma = svd.singularValues();
  Eigen::Index rho = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > config.rank_tol * sigma(0)) ++rho;
  }
  if (rho == 0) {
    throw NoSpectrumError("kernel numerically zero");
  }

  rs.Vr = svd.matrixV().leftCols(rho);
  rs.UrSinv = svd.matrixU().leftCols(rho) *
              sigma.head(rho).cwiseInverse().cast<Complex>().asDiagonal();
  rs.AVr = rs.A * rs.Vr;
  rs.BVr = rs.B * rs.Vr;
  const Mat k =
      sigma.head(rho).cwiseInverse().cast<Complex>().asDiagonal() *
      (svd.matrixU().leftCols(rho).adjoint() * rs.AVr);

  Eigen::ComplexEigenSolver<Mat> eig(k);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("pencil: reduced eigensolve failed");
  }
  rs.evals = eig.eigenvalues();
  rs.evecs = eig.eigenvectors();
  rs.levecs = rs.evecs.inverse();
  if (!rs.levecs.allFinite()) {
    throw NumericalError("pencil: eigenvector matrix is singular");
  }

  // Residual filter on the lifted eigenpairs.
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < rho; ++j) {
    const Vec f = rs.Vr * rs.evecs.col(j);
    if (eigpair_residual(rs, rs.evals(j), f) <= config.residual_tol) {
      kept.push_back(j);
    }
  }
  if (kept.empty()) return {};

  // Greedy single-linkage clustering in canonical eigenvalue order.
  std::sort(kept.begin(), kept.end(), [&](Eigen::Index a, Eigen::Index b) {
    return lex_less(rs.evals(a), rs.evals(b));
  });
  std::vector<std::vector<Eigen::Index>> groups;
  for (Eigen::Index idx : kept) {
    const double tol = config.cluster_tol * (1.0 + std::abs(rs.evals(idx)));
    bool placed = false;
    for (auto& g : groups) {
      for (Eigen::Index other : g) {
        if (std::abs(rs.evals(idx) - rs.evals(other)) <= tol) {
          g.push_back(idx);
          placed = true;
          break;
        }
      }
      if (placed) break;
    }
    if (!placed) groups.push_back({idx});
  }

  std::vector<Candidate> candidates;
  for (auto& g : groups) {
    if (auto cand = build_cluster(rs, std::move(g), config)) {
      candidates.push_back(std::move(*cand));
    }
  }

  // Validated merging of nearby clusters.
  const auto canonical = [](const Candidate& a, const Candidate& b) {
    return lex_less(a.cluster.lambda, b.cluster.lambda);
  };
  bool merged = true;
  while (merged) {
    merged = false;
    std::sort(candidates.begin(), candidates.end(), canonical);
    for (std::size_t i = 0; i < candidates.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < candidates.size(); ++j) {
        const Complex li = candidates[i].cluster.lambda;
        const Complex lj = candidates[j].cluster.lambda;
        const double radius = kDefectMergeRadius * (1.0 + std::abs(li));
        if (std::abs(li - lj) > radius) continue;
        std::vector<Eigen::Index> g = candidates[i].members;
        g.insert(g.end(), candidates[j].members.begin(),
                 candidates[j].members.end());
        const std::size_t want = g.size();
        auto cand = build_cluster(rs, std::move(g), config);
        if (cand && cand->cluster.chain.size() == want &&
            !cand->cluster.truncated) {
          candidates[i] = std::move(*cand);
          candidates.erase(candidates.begin() +
                           static_cast<std::ptrdiff_t>(j));
          merged = true;
          break;
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), canonical);

  std::vector<JordanCluster> clusters;
  clusters.reserve(candidates.size());
  for (Candidate& c : candidates) clusters.push_back(std::move(c.cluster));
  return clusters;
}

}  // namespace

std::vector<JordanCluster> solve_forward(const KernelPencil& pencil,
                                         const PencilConfig& config) {
  return solve_side(pencil.R, pencil.Rdot, pencil.grid, config);
}

std::vector<JordanCluster> solve_adjoint(const KernelPencil& pencil,
                                         const PencilConfig& config) {
  std::vector<JordanCluster> clusters =
      solve_side(pencil.R.conjugate(), pencil.Rdot.conjugate(), pencil.grid,
                 config);
  // Pairing orientation: the adjoint eigenvector goes last (g^L), so the
  // normalizations pairing f^i with g^i are well posed.
  for (JordanCluster& c : clusters) {
    std::reverse(c.chain.begin(), c.chain.end());
    std::reverse(c.residuals.begin(), c.residuals.end());
  }
  return clusters;
}

std::vector<JordanCluster> match_clusters(
    const std::vector<JordanCluster>& forward,
    const std::vector<JordanCluster>& adjoint, const PencilConfig& config,
    std::vector<std::string>* notes) {
  std::vector<bool> used(adjoint.size(), false);
  std::vector<JordanCluster> out;
  for (const JordanCluster& f : forward) {
    std::ptrdiff_t best = -1;
    double best_dist = 0.0;
    const double radius = config.cluster_tol * (1.0 + std::abs(f.lambda));
    for (std::size_t j = 0; j < adjoint.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(std::conj(adjoint[j].lambda) - f.lambda);
      if (d <= radius && (best < 0 || d < best_dist)) {
        best = static_cast<std::ptrdiff_t>(j);
        best_dist = d;
      }
    }
    if (best < 0) {
      if (notes != nullptr) {
        std::ostringstream os;
        os << "defect: one-sided eigenvalue at lambda = (" << f.lambda.real()
           << "," << f.lambda.imag() << ")";
        notes->push_back(os.str());
      }
      continue;
    }
    used[static_cast<std::size_t>(best)] = true;
    const JordanCluster& a = adjoint[static_cast<std::size_t>(best)];
    JordanCluster m;
    m.lambda = f.lambda;
    m.multiplicity = std::min(f.multiplicity, a.multiplicity);
    m.multiplicity_mismatch = f.multiplicity != a.multiplicity;
    m.truncated = f.truncated || a.truncated;
    const std::size_t L = static_cast<std::size_t>(m.multiplicity);
    m.chain.assign(f.chain.begin(),
                   f.chain.begin() + static_cast<std::ptrdiff_t>(L));
    m.residuals.assign(f.residuals.begin(),
                       f.residuals.begin() + static_cast<std::ptrdiff_t>(L));
    // The adjoint chain keeps its eigenvector end (the tail).
    m.adjoint_chain.assign(a.chain.end() - static_cast<std::ptrdiff_t>(L),
                           a.chain.end());
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace bcm
