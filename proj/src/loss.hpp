// Per-entry loss catalog. Every loss L(u, a) maps an embedded value
// u in R^{d_j} and an abstract feature value a to a nonnegative penalty, and
// exposes a subgradient in u, the imputation argmin over a, and generalized
// column statistics (mu_j, sigma2_j).
#pragma once

#include <span>
#include <string>
#include <vector>

#include "types.hpp"

namespace glrm {

enum class LossKind {
  Quadratic, L1, Huber, Quantile, Fractional, Logarithmic, PoissonExp,
  KLDivergence, ItakuraSaito, BetaDivergence, Hinge, Logistic, OrdinalHinge,
  Interval, OneVsAll, CrammerSinger, MultiOrdinal, Permutation, RankingFull,
  RankingPairwise,
};

struct LossSpec {
  LossKind kind = LossKind::Quadratic;
  int levels = 0;       // d for level/order-valued variants
  double alpha = 0.5;   // quantile
  double beta = 1.5;    // beta divergence

  static LossSpec quadratic() { return {LossKind::Quadratic}; }
  static LossSpec l1() { return {LossKind::L1}; }
  static LossSpec huber() { return {LossKind::Huber}; }
  static LossSpec quantile(double a);
  static LossSpec fractional() { return {LossKind::Fractional}; }
  static LossSpec logarithmic() { return {LossKind::Logarithmic}; }
  static LossSpec poisson() { return {LossKind::PoissonExp}; }
  static LossSpec kl() { return {LossKind::KLDivergence}; }
  static LossSpec itakura_saito() { return {LossKind::ItakuraSaito}; }
  static LossSpec beta_divergence(double b);
  static LossSpec hinge() { return {LossKind::Hinge}; }
  static LossSpec logistic() { return {LossKind::Logistic}; }
  static LossSpec ordinal_hinge(int d);
  static LossSpec interval() { return {LossKind::Interval}; }
  static LossSpec one_vs_all(int d);
  static LossSpec crammer_singer(int d);
  static LossSpec multi_ordinal(int d);
  static LossSpec permutation(int d);
  static LossSpec ranking(int d);
  static LossSpec ranking_pairs(int d);

  // Columns of Y occupied by this loss: 1 for scalar variants, d or d-1 for
  // the multi-dimensional ones.
  int embed_dim() const;

  // Logarithmic loss is nonconvex by construction; Itakura-Saito and beta
  // divergences outside beta in [1,2] also fail convexity in u even though
  // they are perfectly usable losses.
  bool convex_in_u() const;

  // True when the loss accepts cells of this column kind.
  bool accepts(const FeatureKind& k) const;

  std::string name() const;                         // catalog string, with params
  static LossSpec parse(const std::string& name, const FeatureKind* kind = nullptr);
};

// Throws std::domain_error when `a` is outside the variant's admissible set.
void check_admissible(const LossSpec& spec, const FeatureValue& a);

double loss_value(const LossSpec& spec, std::span<const double> u, const FeatureValue& a);

// Subgradient of u -> L(u, a). Conventions at nondifferentiable points:
// hinge-family terms contribute 0 once inactive (the boundary counts as
// inactive); l1 and quantile return 0 at u = a; fractional keeps the
// hyperbolic branch at the crossover. Each choice lies in the subdifferential
// wherever the loss is convex.
void loss_grad(const LossSpec& spec, std::span<const double> u, const FeatureValue& a,
               std::span<double> g);

// argmin_a L(u, a) over the variant's natural domain; finite domains break
// ties toward the smallest level / lexicographically smallest permutation.
FeatureValue loss_impute(const LossSpec& spec, std::span<const double> u);

// argmin over the column kind's domain instead (a Boolean column under
// quadratic loss imputes sign(u), an ordinal one the nearest level).
FeatureValue loss_impute_kind(const LossSpec& spec, std::span<const double> u,
                              const FeatureKind& kind);

struct ColumnStats {
  std::vector<double> mu;
  double sigma2 = 1.0;
};

// mu = argmin_mu sum_i L(mu, a_i) by golden-section (coordinate-wise for
// multi-dimensional variants), sigma2 = sum_i L(mu, a_i) / (n - 1), clamped
// below at 1e-12. Unbounded directions are clamped to [-1e3, 1e3] with a
// warning.
ColumnStats column_stats(const LossSpec& spec, std::span<const FeatureValue> cells);

// Smallest distance from (u, a) to a kink of the loss; +inf for C^1 variants.
// The optimality certificate refuses entries sitting on a kink.
double kink_distance(const LossSpec& spec, std::span<const double> u, const FeatureValue& a);

}  // namespace glrm
