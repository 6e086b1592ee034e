#include "init.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "util.hpp"

namespace glrm {

Factors init_random(const GlrmProblem& p, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Factors f = p.zero_factors();
  for (int i = 0; i < f.X.rows(); ++i)
    for (int c = 0; c < p.k(); ++c) f.X(i, c) = gauss(rng);
  for (int r = 0; r < f.Y.rows(); ++r)
    for (int c = 0; c < f.Y.cols(); ++c) f.Y(r, c) = gauss(rng);
  if (p.with_offset()) f.X.col(p.k()).setOnes();
  return f;
}

ScaledMatrix build_scaled_matrix(const GlrmProblem& p) {
  const int m = p.m(), n = p.n();
  ScaledMatrix sm;
  sm.covered.assign(n, false);

  // expansion plan: (feature j, level l or -1, global embedding column)
  struct Expanded { int j, level, embed; };
  std::vector<Expanded> plan;
  for (int j = 0; j < n; ++j) {
    const FeatureKind& kind = p.table().kind(j);
    const int dj = p.embed_dim(j);
    if (dj == 1 && (kind.tag == FeatureKind::Tag::Real || kind.tag == FeatureKind::Tag::Boolean ||
                    kind.tag == FeatureKind::Tag::Ordinal)) {
      sm.covered[j] = true;
      plan.push_back({j, -1, p.embed_offset(j)});
    } else if (kind.tag == FeatureKind::Tag::Categorical && dj == kind.levels) {
      sm.covered[j] = true;
      for (int l = 1; l <= kind.levels; ++l) plan.push_back({j, l, p.embed_offset(j) + l - 1});
    }
    // permutation/ranking/multi-ordinal blocks fall back to random init
  }

  const int dc = static_cast<int>(plan.size());
  sm.A = Eigen::MatrixXd::Zero(m, dc);
  sm.mu.assign(dc, 0.0);
  sm.sigma.assign(dc, 1.0);
  sm.embed_col.resize(dc);

  for (int c = 0; c < dc; ++c) {
    const auto& e = plan[c];
    sm.embed_col[c] = e.embed;
    double sum = 0.0;
    long cnt = 0;
    for (int i : p.col_obs(e.j)) {
      double v = p.table().value(i, e.j).x;
      if (e.level > 0) v = (static_cast<int>(v) == e.level) ? 1.0 : 0.0;
      sum += v;
      ++cnt;
    }
    if (cnt < 2)
      throw std::invalid_argument("column " + std::to_string(e.j + 1) +
                                  " has fewer than 2 observed entries; cannot scale");
    double mu = sum / static_cast<double>(cnt);
    double ss = 0.0;
    for (int i : p.col_obs(e.j)) {
      double v = p.table().value(i, e.j).x;
      if (e.level > 0) v = (static_cast<int>(v) == e.level) ? 1.0 : 0.0;
      ss += (v - mu) * (v - mu);
    }
    double var = ss / static_cast<double>(cnt - 1);
    double sigma = std::sqrt(var);
    if (sigma < 1e-12) {
      warn("constant column " + std::to_string(e.j + 1) + " in scaled matrix");
      sigma = 1.0;
    }
    sm.mu[c] = mu;
    sm.sigma[c] = sigma;
    double scale = static_cast<double>(m) / (sigma * static_cast<double>(cnt));
    for (int i : p.col_obs(e.j)) {
      double v = p.table().value(i, e.j).x;
      if (e.level > 0) v = (static_cast<int>(v) == e.level) ? 1.0 : 0.0;
      sm.A(i, c) = scale * (v - mu);
    }
  }
  return sm;
}

TopKSvd top_k_svd(const Eigen::MatrixXd& A, int k, double tol, int max_iter) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  const int kk = std::min({k, m, n});
  TopKSvd out;
  out.U = Eigen::MatrixXd::Zero(m, k);
  out.s = Eigen::VectorXd::Zero(k);
  out.V = Eigen::MatrixXd::Zero(n, k);
  if (kk == 0 || A.norm() == 0.0) return out;
  // oversampled block: clustered singular values converge slowly otherwise
  const int block = std::min(kk + 5, std::min(m, n));

  Rng rng = make_rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd V(n, block);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < block; ++c) V(i, c) = gauss(rng);
  {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
    V = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
  }

  Eigen::MatrixXd U(m, block);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(block);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd W = A * V;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr1(W);
    U = qr1.householderQ() * Eigen::MatrixXd::Identity(m, block);
    Eigen::MatrixXd Z = A.transpose() * U;
    Eigen::VectorXd est = Z.colwise().norm();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr2(Z);
    V = qr2.householderQ() * Eigen::MatrixXd::Identity(n, block);
    double ref = std::max(est[0], 1e-300);
    if ((est.head(kk) - prev.head(kk)).cwiseAbs().maxCoeff() <= tol * ref) break;
    prev = est;
  }

  // exact triples within the converged subspace
  Eigen::MatrixXd M = U.transpose() * A;  // block x n
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U.leftCols(kk) = U * svd.matrixU().leftCols(kk);
  out.s.head(kk) = svd.singularValues().head(kk);
  out.V.leftCols(kk) = svd.matrixV().leftCols(kk);
  if (kk < k) warn("requested " + std::to_string(k) + " singular triples, matrix supports " +
                   std::to_string(kk) + "; padding with zeros");
  return out;
}

Factors init_svd(const GlrmProblem& p) {
  ScaledMatrix sm = build_scaled_matrix(p);
  Factors f = p.zero_factors();
  const int k = p.k();

  Rng rng = make_rng(0x7b1fa3c2d4e5ull);  // uncovered blocks get fixed random entries
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (sm.A.cols() > 0) {
    TopKSvd svd = top_k_svd(sm.A, k);
    if (svd.s[std::min<int>(k, svd.s.size()) - 1] < 1e-12 * std::max(svd.s[0], 1e-300))
      warn("scaled matrix has rank below k; trailing directions are zero");
    Eigen::VectorXd root = svd.s.cwiseMax(0.0).cwiseSqrt();
    for (int i = 0; i < p.m(); ++i)
      for (int r = 0; r < k; ++r) f.X(i, r) = svd.U(i, r) * root[r];
    for (int c = 0; c < sm.A.cols(); ++c) {
      int ec = sm.embed_col[c];
      for (int r = 0; r < k; ++r) f.Y(r, ec) = root[r] * svd.V(c, r) * sm.sigma[c];
      if (p.with_offset()) f.Y(k, ec) = sm.mu[c];
    }
  }

  for (int j = 0; j < p.n(); ++j) {
    if (sm.covered[j]) continue;
    for (int c = 0; c < p.embed_dim(j); ++c)
      for (int r = 0; r < k; ++r) f.Y(r, p.embed_offset(j) + c) = gauss(rng);
  }
  if (p.with_offset()) f.X.col(k).setOnes();
  return f;
}

Factors init_kmeanspp(const GlrmProblem& p, std::uint64_t seed) {
  if (p.with_offset())
    throw std::invalid_argument("k-means++ initialization expects a problem without offset");
  if (p.row_reg(0).kind != RegKind::UnitOneSparseInd)
    throw std::invalid_argument("k-means++ initialization expects unit-one-sparse row structure");
  for (int j = 0; j < p.n(); ++j) {
    if (p.embed_dim(j) != 1 || p.table().kind(j).tag == FeatureKind::Tag::Interval)
      throw std::invalid_argument("k-means++ initialization expects scalar numeric columns");
  }
  const int m = p.m(), n = p.n(), k = p.k();
  if (k > m) throw std::invalid_argument("cannot place " + std::to_string(k) + " centroids on " +
                                         std::to_string(m) + " rows");

  // rows as numeric vectors, missing entries replaced by column means
  Eigen::MatrixXd pts(m, n);
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    long cnt = 0;
    for (int i : p.col_obs(j)) { sum += p.table().value(i, j).x; ++cnt; }
    double mu = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
    for (int i = 0; i < m; ++i)
      pts(i, j) = p.table().observed(i, j) ? p.table().value(i, j).x : mu;
  }

  Rng rng = make_rng(seed);
  std::vector<int> chosen;
  chosen.push_back(static_cast<int>(std::uniform_int_distribution<int>(0, m - 1)(rng)));
  Eigen::VectorXd d2 = (pts.rowwise() - pts.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      // all remaining points coincide with a centroid; take the first unchosen
      pick = 0;
      while (std::find(chosen.begin(), chosen.end(), pick) != chosen.end()) ++pick;
    } else {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      pick = m - 1;
      for (int i = 0; i < m; ++i) {
        acc += d2[i];
        if (r <= acc) { pick = i; break; }
      }
    }
    chosen.push_back(pick);
    Eigen::VectorXd nd = (pts.rowwise() - pts.row(pick)).rowwise().squaredNorm();
    d2 = d2.cwiseMin(nd);
  }

  Factors f = p.zero_factors();
  for (int l = 0; l < k; ++l) f.Y.row(l) = pts.row(chosen[l]);
  for (int i = 0; i < m; ++i) {
    int best = 0;
    double bd = (pts.row(i) - f.Y.row(0)).squaredNorm();
    for (int l = 1; l < k; ++l) {
      double dd = (pts.row(i) - f.Y.row(l)).squaredNorm();
      if (dd < bd) { bd = dd; best = l; }
    }
    f.X(i, best) = 1.0;
  }
  return f;
}

}  // namespace glrm
