// Shared test utilities: independent oracles (finite differences, brute-force
// prox search, exhaustive imputation) and random in-domain samplers for every
// loss variant.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include "loss.hpp"
#include "problem.hpp"
#include "types.hpp"
#include "util.hpp"

namespace testutil {

using glrm::FeatureValue;
using glrm::LossKind;
using glrm::LossSpec;

inline std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "glrm_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// central finite-difference gradient
inline std::vector<double> fd_grad(const LossSpec& spec, std::vector<double> u,
                                   const FeatureValue& a, double h = 1e-5) {
  std::vector<double> g(u.size());
  for (size_t c = 0; c < u.size(); ++c) {
    double orig = u[c];
    u[c] = orig + h;
    double fp = glrm::loss_value(spec, u, a);
    u[c] = orig - h;
    double fm = glrm::loss_value(spec, u, a);
    u[c] = orig;
    g[c] = (fp - fm) / (2 * h);
  }
  return g;
}

// random value in the loss's admissible domain
inline FeatureValue random_domain_value(const LossSpec& spec, glrm::Rng& rng) {
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.1, 5.0);
  switch (spec.kind) {
    case LossKind::Quadratic:
    case LossKind::L1:
    case LossKind::Huber:
    case LossKind::Quantile:
      return FeatureValue::number(unif(rng));
    case LossKind::Fractional:
    case LossKind::Logarithmic:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
      return FeatureValue::number(pos(rng));
    case LossKind::PoissonExp:
      return FeatureValue::number(std::uniform_int_distribution<int>(0, 8)(rng));
    case LossKind::Hinge:
    case LossKind::Logistic:
      return FeatureValue::number(rng() % 2 ? 1.0 : -1.0);
    case LossKind::OrdinalHinge:
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger:
    case LossKind::MultiOrdinal:
      return FeatureValue::number(std::uniform_int_distribution<int>(1, spec.levels)(rng));
    case LossKind::Interval: {
      double a = unif(rng), b = unif(rng);
      return FeatureValue::interval(std::min(a, b), std::max(a, b));
    }
    case LossKind::Permutation:
    case LossKind::RankingFull: {
      std::vector<int> p(spec.levels);
      std::iota(p.begin(), p.end(), 1);
      std::shuffle(p.begin(), p.end(), rng);
      return FeatureValue::permutation(p);
    }
    case LossKind::RankingPairwise: {
      std::vector<std::pair<int, int>> pairs;
      std::uniform_int_distribution<int> pick(1, spec.levels);
      for (int t = 0; t < spec.levels; ++t) {
        int a = pick(rng), b = pick(rng);
        if (a != b) pairs.emplace_back(a, b);
      }
      if (pairs.empty()) pairs.emplace_back(1, 2);
      return FeatureValue::comparisons(pairs);
    }
  }
  return FeatureValue::number(0.0);
}

// random u in the domain of the loss (positive where needed)
inline std::vector<double> random_u(const LossSpec& spec, glrm::Rng& rng, double span = 3.0) {
  std::vector<double> u(spec.embed_dim());
  std::uniform_real_distribution<double> unif(-span, span);
  std::uniform_real_distribution<double> pos(0.1, span);
  bool needs_pos = spec.kind == LossKind::Fractional || spec.kind == LossKind::Logarithmic ||
                   spec.kind == LossKind::KLDivergence || spec.kind == LossKind::ItakuraSaito ||
                   spec.kind == LossKind::BetaDivergence;
  for (auto& v : u) v = needs_pos ? pos(rng) : unif(rng);
  return u;
}

// exhaustive argmin over a finite feature domain; only valid for level- or
// permutation-valued losses
inline FeatureValue exhaustive_impute(const LossSpec& spec, std::span<const double> u) {
  switch (spec.kind) {
    case LossKind::Hinge:
    case LossKind::Logistic: {
      double vm = glrm::loss_value(spec, u, FeatureValue::number(-1.0));
      double vp = glrm::loss_value(spec, u, FeatureValue::number(1.0));
      return FeatureValue::number(vm < vp ? -1.0 : 1.0);
    }
    case LossKind::OrdinalHinge:
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger:
    case LossKind::MultiOrdinal: {
      int best = 1;
      double bv = glrm::loss_value(spec, u, FeatureValue::number(1));
      for (int l = 2; l <= spec.levels; ++l) {
        double v = glrm::loss_value(spec, u, FeatureValue::number(l));
        if (v < bv) { bv = v; best = l; }
      }
      return FeatureValue::number(best);
    }
    case LossKind::Permutation:
    case LossKind::RankingFull: {
      std::vector<int> perm(spec.levels);
      std::iota(perm.begin(), perm.end(), 1);
      std::vector<int> best = perm;
      double bv = glrm::loss_value(spec, u, FeatureValue::permutation(perm));
      while (std::next_permutation(perm.begin(), perm.end())) {
        double v = glrm::loss_value(spec, u, FeatureValue::permutation(perm));
        if (v < bv) { bv = v; best = perm; }
      }
      return FeatureValue::permutation(best);
    }
    default:
      throw std::logic_error("no finite domain to enumerate");
  }
}

inline std::shared_ptr<glrm::DataTable> make_table(const Eigen::MatrixXd& A) {
  std::vector<glrm::FeatureKind> kinds(A.cols(), glrm::FeatureKind::real());
  auto t = std::make_shared<glrm::DataTable>(static_cast<int>(A.rows()), kinds);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j) t->set(i, j, FeatureValue::number(A(i, j)));
  return t;
}

inline glrm::GlrmProblem quad_problem(std::shared_ptr<const glrm::DataTable> t, int k, double gamma,
                                      bool offset = false, bool scaling = false) {
  int n = t->cols();
  std::vector<LossSpec> losses(n, LossSpec::quadratic());
  std::vector<glrm::RegSpec> col_regs(n, gamma > 0 ? glrm::RegSpec::quadratic(gamma)
                                                   : glrm::RegSpec::zero());
  glrm::RegSpec row = gamma > 0 ? glrm::RegSpec::quadratic(gamma) : glrm::RegSpec::zero();
  return glrm::GlrmProblem(std::move(t), losses, row, col_regs, k, offset, scaling);
}

inline Eigen::MatrixXd random_gaussian(int m, int n, glrm::Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  return A;
}

inline Eigen::MatrixXd random_orthogonal(int k, glrm::Rng& rng) {
  Eigen::MatrixXd M = random_gaussian(k, k, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  return qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
}

}  // namespace testutil
