#include "analysis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "util.hpp"

namespace glrm {

Factors qrpca_solve(const Eigen::MatrixXd& A, int k, double gamma) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (k < 1 || k > std::min(m, n)) throw std::invalid_argument("need 1 <= k <= min(m,n)");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Factors f;
  f.X = RowMajorMatrix::Zero(m, k);
  f.Y = Eigen::MatrixXd::Zero(k, n);
  f.sigma2 = Eigen::VectorXd::Ones(n);
  for (int r = 0; r < k; ++r) {
    double s = std::max(svd.singularValues()[r] - gamma, 0.0);
    double root = std::sqrt(s);
    f.X.col(r) = root * svd.matrixU().col(r);
    f.Y.row(r) = root * svd.matrixV().col(r).transpose();
  }
  return f;
}

double qrpca_objective(const Eigen::MatrixXd& A, const Factors& f, double gamma) {
  double fit = (A - f.X * f.Y).squaredNorm();
  return fit + gamma * (f.X.squaredNorm() + f.Y.squaredNorm());
}

double stationary_value(const std::vector<double>& sigma, const std::vector<int>& active,
                        double gamma) {
  std::vector<char> in(sigma.size(), 0);
  for (int idx : active) {
    if (idx < 0 || idx >= static_cast<int>(sigma.size()))
      throw std::invalid_argument("active index out of range");
    if (sigma[idx] < gamma)
      throw std::invalid_argument("active set contains a singular value below gamma");
    in[idx] = 1;
  }
  double v = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (in[i]) v += gamma * gamma + 2.0 * gamma * std::abs(sigma[i] - gamma);
    else v += sigma[i] * sigma[i];
  }
  return v;
}

NuclearSplit nuclear_norm_split(const Eigen::MatrixXd& Z) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double smax = s.size() ? s[0] : 0.0;
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > 1e-12 * std::max(smax, 1.0)) r = i + 1;
  NuclearSplit out;
  out.X = Eigen::MatrixXd::Zero(Z.rows(), std::max(r, 1));
  out.Y = Eigen::MatrixXd::Zero(std::max(r, 1), Z.cols());
  for (int i = 0; i < r; ++i) {
    double root = std::sqrt(s[i]);
    out.X.col(i) = root * svd.matrixU().col(i);
    out.Y.row(i) = root * svd.matrixV().col(i).transpose();
    out.nuclear_norm += s[i];
  }
  return out;
}

double spectral_norm(const Eigen::MatrixXd& M, double tol, int max_iter) {
  if (M.size() == 0 || M.norm() == 0.0) return 0.0;
  const int m = static_cast<int>(M.rows()), n = static_cast<int>(M.cols());
  // power iteration on the symmetric dilation [[0, M], [M^T, 0]]
  Rng rng = make_rng(0x51ab2ecull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(m), v(n);
  for (int i = 0; i < m; ++i) u[i] = gauss(rng);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  double nrm = std::sqrt(u.squaredNorm() + v.squaredNorm());
  u /= nrm;
  v /= nrm;
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd nu = M * v;
    Eigen::VectorXd nv = M.transpose() * u;
    double lam = std::sqrt(nu.squaredNorm() + nv.squaredNorm());
    if (lam == 0.0) return 0.0;
    u = nu / lam;
    v = nv / lam;
    if (std::abs(lam - prev) <= tol * std::max(lam, 1e-300)) return lam;
    prev = lam;
  }
  return prev;
}

CertifyResult certify_global(const GlrmProblem& p, const Factors& f) {
  CertifyResult res;

  // both regularizers must be quadratic with one shared strength
  const RegSpec& rr = p.row_reg(0);
  if (rr.kind != RegKind::QuadraticReg || !(rr.gamma > 0)) {
    res.message = "certificate requires quadratic regularization with gamma > 0 on rows";
    return res;
  }
  for (int j = 0; j < p.n(); ++j) {
    const RegSpec& cr = p.col_reg(j);
    if (cr.kind != RegKind::QuadraticReg || cr.gamma != rr.gamma) {
      res.message = "certificate requires the same quadratic regularization on all columns";
      return res;
    }
  }
  if (p.with_offset()) {
    res.message = "certificate does not cover offset-augmented problems";
    return res;
  }
  for (int j = 0; j < p.n(); ++j) {
    if (!p.loss(j).convex_in_u()) {
      res.message = "loss " + p.loss(j).name() + " is nonconvex; certificate unavailable";
      return res;
    }
  }

  // gradient matrix over the embedded width, zero outside Omega; refuse at
  // active kinks where the chosen subgradient may invalidate the certificate
  Eigen::MatrixXd Z = f.X * f.Y;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p.m(), p.d());
  Eigen::VectorXd dl;
  for (int i = 0; i < p.m(); ++i) {
    for (int j : p.row_obs(i)) {
      const int dj = p.embed_dim(j), off = p.embed_offset(j);
      Eigen::RowVectorXd u = Z.row(i).segment(off, dj);
      FeatureValue a = p.table().value(i, j);
      double kd = kink_distance(p.loss(j), std::span<const double>(u.data(), dj), a);
      if (kd < 1e-9) {
        res.message = "loss " + p.loss(j).name() + " sits on a kink at entry (" +
                      std::to_string(i + 1) + "," + std::to_string(j + 1) +
                      "); subgradient choice may produce an invalid certificate";
        return res;
      }
      dl.resize(dj);
      loss_grad(p.loss(j), std::span<const double>(u.data(), dj), a,
                std::span<double>(dl.data(), dj));
      G.row(i).segment(off, dj) = p.loss_weight(j) * dl.transpose();
    }
  }

  // quadreg(g) on both factors matches (gamma_cert / 2)(||X||^2 + ||Y||^2)
  // with gamma_cert = 2 g
  const double gamma_cert = 2.0 * rr.gamma;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  Eigen::MatrixXd UV = Eigen::MatrixXd::Zero(p.m(), p.d());
  for (int r = 0; r < svd.singularValues().size(); ++r) {
    if (svd.singularValues()[r] <= 1e-10 * std::max(smax, 1.0)) break;
    UV.noalias() += svd.matrixU().col(r) * svd.matrixV().col(r).transpose();
  }

  res.spectral_norm = spectral_norm(G / gamma_cert + UV);
  if (res.spectral_norm <= 1.0) {
    res.status = CertifyStatus::Certified;
    res.message = "certified";
  } else if (res.spectral_norm <= 1.0 + 1e-8) {
    res.status = CertifyStatus::CertifiedBorderline;
    res.message = "certified (within floating-point slack)";
  } else {
    res.status = CertifyStatus::Uncertified;
    res.message = "uncertified";
  }
  return res;
}

}  // namespace glrm
