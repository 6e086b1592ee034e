#include <Eigen/Dense>
#include <cmath>

#include "analysis.hpp"
#include "doctest.h"
#include "fit.hpp"
#include "helpers.hpp"
#include "init.hpp"

using namespace glrm;
using testutil::make_table;
using testutil::quad_problem;

TEST_CASE("qrpca with gamma 0 is the truncated SVD") {
  glrm::Rng rng(3);
  Eigen::MatrixXd A = testutil::random_gaussian(12, 9, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const int k = 4;
  Factors f = qrpca_solve(A, k, 0.0);
  double tail = 0.0;
  for (int r = k; r < svd.singularValues().size(); ++r)
    tail += svd.singularValues()[r] * svd.singularValues()[r];
  CHECK((A - f.X * f.Y).squaredNorm() == doctest::Approx(tail).epsilon(1e-8));
}

TEST_CASE("qrpca with gamma above the top singular value is identically zero") {
  glrm::Rng rng(5);
  Eigen::MatrixXd A = testutil::random_gaussian(8, 6, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  Factors f = qrpca_solve(A, 3, svd.singularValues()[0] + 0.5);
  CHECK(f.X.norm() == 0.0);
  CHECK(f.Y.norm() == 0.0);
}

TEST_CASE("diag(3,1) with k=1, gamma=1: XY = diag(2,0) and objective 6") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 3.0;
  A(1, 1) = 1.0;
  Factors f = qrpca_solve(A, 1, 1.0);
  Eigen::MatrixXd Z = f.X * f.Y;
  CHECK(Z(0, 0) == doctest::Approx(2.0));
  CHECK(std::abs(Z(0, 1)) + std::abs(Z(1, 0)) + std::abs(Z(1, 1)) <= 1e-12);
  CHECK(qrpca_objective(A, f, 1.0) == doctest::Approx(6.0));
  CHECK(stationary_value({3.0, 1.0}, {0}, 1.0) == doctest::Approx(6.0));
}

TEST_CASE("stationary value: empty active set and top-k dominance") {
  CHECK(stationary_value({3.0, 1.0}, {}, 1.0) == doctest::Approx(10.0));
  CHECK_THROWS_AS(stationary_value({3.0, 1.0}, {1}, 2.0), std::invalid_argument);

  glrm::Rng rng(11);
  std::uniform_real_distribution<double> unif(0.1, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> sigma(5);
    for (auto& s : sigma) s = unif(rng);
    std::sort(sigma.rbegin(), sigma.rend());
    double gamma = unif(rng) * 0.4;
    const int k = 3;
    int kp = 0;
    while (kp < 5 && sigma[kp] >= gamma) ++kp;

    // enumerate every admissible subset of size <= k
    double best = 1e300;
    std::vector<int> best_set;
    for (int mask = 0; mask < 32; ++mask) {
      std::vector<int> set;
      bool ok = true;
      for (int b = 0; b < 5; ++b)
        if (mask & (1 << b)) {
          if (sigma[b] < gamma) ok = false;
          set.push_back(b);
        }
      if (!ok || static_cast<int>(set.size()) > k) continue;
      double v = stationary_value(sigma, set, gamma);
      if (v < best) { best = v; best_set = set; }
    }
    // the top-k admissible subset attains the minimum
    std::vector<int> topk;
    for (int b = 0; b < std::min(k, kp); ++b) topk.push_back(b);
    CHECK(stationary_value(sigma, topk, gamma) == doctest::Approx(best).epsilon(1e-12));

    // and matches the analytical solve on diag(sigma)
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
    for (int b = 0; b < 5; ++b) A(b, b) = sigma[b];
    Factors f = qrpca_solve(A, k, gamma);
    CHECK(qrpca_objective(A, f, gamma) == doctest::Approx(best).epsilon(1e-8));
  }
}

TEST_CASE("nuclear norm split achieves the infimum") {
  Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
  NuclearSplit s = nuclear_norm_split(I3);
  CHECK(s.nuclear_norm == doctest::Approx(3.0));
  CHECK(0.5 * (s.X.squaredNorm() + s.Y.squaredNorm()) == doctest::Approx(3.0).epsilon(1e-12));

  NuclearSplit z = nuclear_norm_split(Eigen::MatrixXd::Zero(4, 3));
  CHECK(z.nuclear_norm == 0.0);
  CHECK(z.X.norm() == 0.0);

  glrm::Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd Z =
        testutil::random_gaussian(7, 2, rng) * testutil::random_gaussian(2, 6, rng);
    NuclearSplit sp = nuclear_norm_split(Z);
    CHECK((sp.X * sp.Y - Z).norm() <= 1e-10 * std::max(Z.norm(), 1.0));
    CHECK(0.5 * (sp.X.squaredNorm() + sp.Y.squaredNorm()) ==
          doctest::Approx(sp.nuclear_norm).epsilon(1e-8));
    // any other factorization does no better (Lemma: infimum over XY = Z)
    for (int t = 0; t < 5; ++t) {
      Eigen::MatrixXd T = testutil::random_gaussian(2, 2, rng);
      if (std::abs(T.determinant()) < 0.1) continue;
      Eigen::MatrixXd Xp = sp.X * T, Yp = T.inverse() * sp.Y;
      CHECK(0.5 * (Xp.squaredNorm() + Yp.squaredNorm()) >= sp.nuclear_norm - 1e-8);
    }
  }
}

TEST_CASE("the nuclear norm lower-bounds half the squared factor norms") {
  glrm::Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd X = testutil::random_gaussian(6, 3, rng);
    Eigen::MatrixXd Y = testutil::random_gaussian(3, 5, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X * Y);
    double nuc = svd.singularValues().sum();
    CHECK(nuc <= 0.5 * (X.squaredNorm() + Y.squaredNorm()) + 1e-9);
  }
}

TEST_CASE("qrpca factors are norm-balanced with average equal to the nuclear norm") {
  glrm::Rng rng(19);
  Eigen::MatrixXd A = testutil::random_gaussian(10, 8, rng);
  const int k = 3;
  const double gamma = 0.3;
  Factors f = qrpca_solve(A, k, gamma);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.X * f.Y);
  double nuc = svd.singularValues().sum();
  CHECK(f.X.squaredNorm() == doctest::Approx(f.Y.squaredNorm()).epsilon(1e-10));
  CHECK(0.5 * (f.X.squaredNorm() + f.Y.squaredNorm()) == doctest::Approx(nuc).epsilon(1e-10));
  // library objective = ||A - Z||^2 + 2 gamma ||Z||_* at the solution
  double obj = qrpca_objective(A, f, gamma);
  CHECK(obj == doctest::Approx((A - f.X * f.Y).squaredNorm() + 2 * gamma * nuc).epsilon(1e-10));
}

TEST_CASE("fit does not improve on the analytical solution") {
  glrm::Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd A = testutil::random_gaussian(10, 9, rng);
    const int k = 2;
    const double gamma = 0.4;
    Factors star = qrpca_solve(A, k, gamma);
    double opt = qrpca_objective(A, star, gamma);
    auto p = quad_problem(make_table(A), k, gamma);
    FitConfig cfg;
    cfg.max_outer_iters = 100;
    cfg.rel_tol = 0.0;
    auto [f, rep] = fit(p, star, cfg);
    CHECK(rep.final_objective() >= opt - 1e-8 * (1 + opt));
    CHECK(rep.objective.front() == doctest::Approx(opt));
  }
}

TEST_CASE("spectral norm matches the dense oracle") {
  glrm::Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd M = testutil::random_gaussian(8, 6, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    CHECK(spectral_norm(M) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-8));
  }
  CHECK(spectral_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("certificate accepts the analytical solution and rejects perturbations") {
  glrm::Rng rng(31);
  Eigen::MatrixXd A = testutil::random_gaussian(9, 7, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const int k = 2;
  // gamma strictly between sigma_{k+1} and sigma_k: the unconstrained
  // solution has rank <= k, so the certificate applies
  double gamma = 0.5 * (svd.singularValues()[k] + svd.singularValues()[k - 1]);
  auto p = quad_problem(make_table(A), k, gamma);
  Factors star = qrpca_solve(A, k, gamma);
  star.sigma2 = Eigen::VectorXd::Ones(7);
  CertifyResult good = certify_global(p, star);
  CHECK(good.certified());
  CHECK(good.spectral_norm <= 1.0 + 1e-8);

  for (int t = 0; t < 10; ++t) {
    Factors bad = star;
    bad.X += 0.3 * testutil::random_gaussian(9, k, rng);
    bad.Y += 0.3 * testutil::random_gaussian(k, 7, rng);
    CertifyResult res = certify_global(p, bad);
    CHECK(res.status == CertifyStatus::Uncertified);
    CHECK(res.spectral_norm > 1.0);
  }
}

TEST_CASE("zero factors certify exactly when gamma dominates the spectrum") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 3.0;
  A(1, 1) = 1.0;
  // G = -2A at Z = 0, certificate value = sigma_1 / gamma_reg
  auto high = quad_problem(make_table(A), 1, 3.5);
  Factors zero = high.zero_factors();
  CertifyResult ok = certify_global(high, zero);
  CHECK(ok.certified());
  CHECK(ok.spectral_norm == doctest::Approx(3.0 / 3.5).epsilon(1e-8));

  auto low = quad_problem(make_table(A), 1, 2.5);
  CertifyResult notok = certify_global(low, zero);
  CHECK(notok.status == CertifyStatus::Uncertified);
  CHECK(notok.spectral_norm == doctest::Approx(3.0 / 2.5).epsilon(1e-8));
}

TEST_CASE("certificate refuses nonconvex losses and active kinks") {
  // hinge data fitted so that some margin is exactly 1 -> active kink
  std::vector<FeatureKind> kinds(2, FeatureKind::boolean());
  auto t = std::make_shared<DataTable>(2, kinds);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) t->set(i, j, FeatureValue::number(1.0));
  std::vector<LossSpec> losses(2, LossSpec::hinge());
  std::vector<RegSpec> cr(2, RegSpec::quadratic(0.5));
  GlrmProblem p(t, losses, RegSpec::quadratic(0.5), cr, 1);
  Factors f = p.zero_factors();
  f.X.setOnes();
  f.Y.setOnes();  // x_i y_j = 1 = margin boundary
  CertifyResult res = certify_global(p, f);
  CHECK(res.status == CertifyStatus::Refused);
  CHECK(res.message.find("kink") != std::string::npos);

  // nonconvex loss is refused outright
  Eigen::MatrixXd P = Eigen::MatrixXd::Ones(2, 2) * 2.0;
  auto tp = make_table(P);
  std::vector<LossSpec> logs(2, LossSpec::logarithmic());
  GlrmProblem pl(tp, logs, RegSpec::quadratic(0.5), cr, 1);
  Factors fl = pl.zero_factors();
  fl.X.setOnes();
  fl.Y.setOnes();
  CHECK(certify_global(pl, fl).status == CertifyStatus::Refused);

  // non-quadratic regularization is out of the certificate's scope
  std::vector<RegSpec> nn(2, RegSpec::nonneg());
  GlrmProblem pn(tp, {LossSpec::quadratic(), LossSpec::quadratic()}, RegSpec::nonneg(), nn, 1);
  CHECK(certify_global(pn, pn.zero_factors()).status == CertifyStatus::Refused);
}
