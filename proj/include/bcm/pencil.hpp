#pragma once

#include <string>
#include <vector>

#include "bcm/discretization.hpp"
#include "bcm/types.hpp"

namespace bcm {

struct PencilConfig {
  double rank_tol = 1e-8;      // relative singular-value cutoff for R*W
  double cluster_tol = 1e-6;   // eigenvalue merge radius, scaled by (1+|lambda|)
  double residual_tol = 1e-6;  // spurious-eigenpair filter threshold
  int max_chain = 8;           // cap on Jordan chain length
};

// One recovered eigenvalue cluster: representative lambda, chain length L,
// chain vectors f^1..f^L with (Rdot*W - lambda R*W) f^i = R*W f^{i-1}
// (f^0 = 0), and, once matched, the adjoint chain g^1..g^L oriented so that
// g^L is the adjoint eigenvector.
struct JordanCluster {
  Complex lambda;
  int multiplicity = 0;
  std::vector<Vec> chain;
  std::vector<Vec> adjoint_chain;
  std::vector<double> residuals;  // per chain vector, relative
  bool truncated = false;         // chain stopped early at a residual failure
  bool multiplicity_mismatch = false;  // forward/adjoint lengths disagreed
};

// SVD-truncated generalized eigensolve of (Rdot*W, R*W): retain singular
// directions of R*W above rank_tol, solve the reduced dense eigenproblem,
// lift eigenvectors, filter by relative residual, cluster close eigenvalues,
// and build one Jordan chain per cluster.  Nearby clusters are merged only
// when the merged chain rebuilds to full length within residual_tol, which
// captures the O(eps^{1/L}) splitting of defective eigenvalues without
// loosening the base cluster radius.
std::vector<JordanCluster> solve_forward(const KernelPencil& pencil,
                                         const PencilConfig& config);

// Same machinery on the conjugated pair (conj(Rdot)*W, conj(R)*W); returned
// eigenvalues are the conjugates, and chains are reversed into the pairing
// orientation (adjoint eigenvector last).
std::vector<JordanCluster> solve_adjoint(const KernelPencil& pencil,
                                         const PencilConfig& config);

// Pairs each forward cluster with the adjoint cluster at the conjugate
// eigenvalue.  Unmatched clusters are excluded and reported via `notes`;
// multiplicity disagreements keep the shorter chain and set the flag.
std::vector<JordanCluster> match_clusters(
    const std::vector<JordanCluster>& forward,
    const std::vector<JordanCluster>& adjoint, const PencilConfig& config,
    std::vector<std::string>* notes = nullptr);

}  // namespace bcm
