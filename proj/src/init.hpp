// Initialization strategies: random normal factors, the scaled-matrix SVD
// recipe (categoricals expanded to Boolean columns, observed entries centered
// and rescaled, missing entries zeroed), and k-means++ seeding for clustering
// problems.
#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "problem.hpp"

namespace glrm {

Factors init_random(const GlrmProblem& p, std::uint64_t seed);

// The expanded, centered, variance-corrected matrix the SVD initialization
// decomposes, plus the bookkeeping needed to map singular vectors back onto
// Y blocks.
struct ScaledMatrix {
  Eigen::MatrixXd A;             // m x d_cov
  std::vector<double> mu;        // per expanded column
  std::vector<double> sigma;     // per expanded column
  std::vector<int> embed_col;    // expanded column -> global embedding column
  std::vector<bool> covered;     // per feature: expansion covers its block
};

ScaledMatrix build_scaled_matrix(const GlrmProblem& p);

Factors init_svd(const GlrmProblem& p);

// Requires one-hot (unit one-sparse) row structure; centroids are data rows
// with missing entries replaced by column means.
Factors init_kmeanspp(const GlrmProblem& p, std::uint64_t seed);

// Top-k singular triples by block power iteration with QR re-orthonormalization.
struct TopKSvd {
  Eigen::MatrixXd U;   // m x k
  Eigen::VectorXd s;   // k
  Eigen::MatrixXd V;   // n x k
};
TopKSvd top_k_svd(const Eigen::MatrixXd& A, int k, double tol = 1e-8, int max_iter = 300);

}  // namespace glrm
