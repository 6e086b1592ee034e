#include "synth.hpp"

#include <Eigen/Core>
#include <cmath>
#include <random>
#include <stdexcept>

#include "util.hpp"

namespace glrm {

namespace {

Eigen::MatrixXd gaussian(int m, int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  return A;
}

SynthResult boolean_preset(Rng& rng) {
  const int m = 50, n = 50, k = 10;
  Eigen::MatrixXd Z = gaussian(m, k, rng) * gaussian(k, n, rng);
  std::vector<FeatureKind> kinds(n, FeatureKind::boolean());
  auto full = std::make_shared<DataTable>(m, kinds);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      full->set(i, j, FeatureValue::number(Z(i, j) >= 0 ? 1.0 : -1.0));
  return {full, full};
}

SynthResult censored_preset(Rng& rng, double obs_fraction) {
  const int m = 300, n = 300, k = 3;
  if (obs_fraction < 0) obs_fraction = 0.1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd X(m, k), Y(k, n);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < k; ++r) X(i, r) = unif(rng);
  for (int r = 0; r < k; ++r)
    for (int j = 0; j < n; ++j) Y(r, j) = unif(rng);
  Eigen::MatrixXd B = X * Y;
  double c = 0.5 * m * n / B.sum();  // about half the entries positive

  std::vector<FeatureKind> kinds(n, FeatureKind::boolean());
  auto full = std::make_shared<DataTable>(m, kinds);
  auto obs = std::make_shared<DataTable>(m, kinds);
  std::vector<std::pair<int, int>> positives;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      bool plus = unif(rng) < std::min(1.0, c * B(i, j));
      full->set(i, j, FeatureValue::number(plus ? 1.0 : -1.0));
      if (plus) positives.emplace_back(i, j);
    }
  std::shuffle(positives.begin(), positives.end(), rng);
  long take = std::lround(obs_fraction * static_cast<double>(positives.size()));
  for (long t = 0; t < take; ++t) obs->set(positives[t].first, positives[t].second,
                                           FeatureValue::number(1.0));
  return {obs, full};
}

SynthResult mixed_preset(Rng& rng, bool censor_block) {
  const int m = 100, n1 = 40, n2 = 30, n3 = 30, k = 10, d_ord = 7;
  const int n = n1 + n2 + n3;
  Eigen::MatrixXd Z = gaussian(m, k, rng) * gaussian(k, n, rng);
  std::vector<FeatureKind> kinds;
  for (int j = 0; j < n1; ++j) kinds.push_back(FeatureKind::real());
  for (int j = 0; j < n2; ++j) kinds.push_back(FeatureKind::boolean());
  for (int j = 0; j < n3; ++j) kinds.push_back(FeatureKind::ordinal(d_ord));
  auto full = std::make_shared<DataTable>(m, kinds);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double z = Z(i, j);
      FeatureValue v;
      if (j < n1) v = FeatureValue::number(z);
      else if (j < n1 + n2) v = FeatureValue::number(z >= 0 ? 1.0 : -1.0);
      else {
        double r = std::round(3.0 * z + 1.0);
        v = FeatureValue::number(std::clamp(r, 1.0, static_cast<double>(d_ord)));
      }
      full->set(i, j, v);
    }
  auto obs = std::make_shared<DataTable>(*full);
  if (censor_block) {
    // bottom half of the rows, last 3 numeric columns plus every Boolean and
    // ordinal column: 3.75% of numeric cells, 50% of the rest
    for (int i = m / 2; i < m; ++i)
      for (int j = n1 - 3; j < n; ++j) obs->clear(i, j);
  }
  return {obs, full};
}

SynthResult outlier_preset(Rng& rng, double obs_fraction, double outlier_hi) {
  const int m = 300, n = 300, k = 3;
  if (obs_fraction < 0) obs_fraction = 0.1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd A = gaussian(m, k, rng) * gaussian(k, n, rng);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (unif(rng) < 0.05) A(i, j) += unif(rng) * outlier_hi;

  std::vector<FeatureKind> kinds(n, FeatureKind::real());
  auto full = std::make_shared<DataTable>(m, kinds);
  auto obs = std::make_shared<DataTable>(m, kinds);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      full->set(i, j, FeatureValue::number(A(i, j)));
      if (unif(rng) < obs_fraction) obs->set(i, j, FeatureValue::number(A(i, j)));
    }
  return {obs, full};
}

SynthResult qrpca_preset(Rng& rng) {
  const int m = 30, n = 20;
  Eigen::MatrixXd A = gaussian(m, n, rng);
  std::vector<FeatureKind> kinds(n, FeatureKind::real());
  auto full = std::make_shared<DataTable>(m, kinds);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) full->set(i, j, FeatureValue::number(A(i, j)));
  return {full, full};
}

}  // namespace

SynthResult synth(const std::string& preset, std::uint64_t seed, double obs_fraction) {
  Rng rng = make_rng(seed);
  if (preset == "boolean") return boolean_preset(rng);
  if (preset == "censored") return censored_preset(rng, obs_fraction);
  if (preset == "mixed") return mixed_preset(rng, false);
  if (preset == "missing") return mixed_preset(rng, true);
  if (preset == "cv") return outlier_preset(rng, obs_fraction, 3.0);
  if (preset == "regpath") return outlier_preset(rng, obs_fraction, 1.0);
  if (preset == "qrpca") return qrpca_preset(rng);
  throw std::invalid_argument("unknown preset '" + preset +
                              "' (boolean, censored, mixed, missing, cv, regpath, qrpca)");
}

}  // namespace glrm
