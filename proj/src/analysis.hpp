// Analytical machinery around quadratically regularized PCA: the closed-form
// soft-thresholded SVD solution, the stationary-point value formula, the
// nuclear-norm factorization identity, and the spectral-norm certificate of
// global optimality.
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "problem.hpp"

namespace glrm {

// Soft-thresholded truncated SVD: X = U_k S~^{1/2}, Y = S~^{1/2} V_k^T with
// S~ = diag((sigma_i - gamma)_+). Fully observed real matrices only.
Factors qrpca_solve(const Eigen::MatrixXd& A, int k, double gamma);

// Objective value of the full quadratically regularized PCA problem
// ||A - XY||_F^2 + gamma (||X||_F^2 + ||Y||_F^2).
double qrpca_objective(const Eigen::MatrixXd& A, const Factors& f, double gamma);

// Value of the stationary point with active subspace S (0-based indices into
// the spectrum): sum_{i not in S} sigma_i^2 + sum_{i in S} (gamma^2 +
// 2 gamma |sigma_i - gamma|). Indices with sigma_i < gamma are rejected.
double stationary_value(const std::vector<double>& sigma, const std::vector<int>& active,
                        double gamma);

struct NuclearSplit {
  Eigen::MatrixXd X, Y;
  double nuclear_norm = 0.0;
};

// Factorization achieving ||Z||_* = (||X||_F^2 + ||Y||_F^2) / 2.
NuclearSplit nuclear_norm_split(const Eigen::MatrixXd& Z);

enum class CertifyStatus { Certified, CertifiedBorderline, Uncertified, Refused };

struct CertifyResult {
  CertifyStatus status = CertifyStatus::Refused;
  double spectral_norm = 0.0;
  std::string message;
  bool certified() const {
    return status == CertifyStatus::Certified || status == CertifyStatus::CertifiedBorderline;
  }
};

// Tests || G / gamma_cert + U V^T ||_2 <= 1 where G collects entrywise loss
// gradients over observed entries, (U, V) come from the thin SVD of Z = XY,
// and gamma_cert = 2 * gamma_reg (the library's quadreg(g) on both sides
// corresponds to (gamma_cert/2)(||X||^2 + ||Y||^2)). Refuses on nonconvex or
// kink-active losses and on non-quadratic regularizers.
CertifyResult certify_global(const GlrmProblem& p, const Factors& f);

// Spectral norm by power iteration on the symmetric dilation.
double spectral_norm(const Eigen::MatrixXd& M, double tol = 1e-9, int max_iter = 1000);

}  // namespace glrm
