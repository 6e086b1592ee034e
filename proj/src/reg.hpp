// Row/column regularizer catalog: values (possibly +inf for indicators) and
// exact proximal operators, including the nonconvex set indicators which are
// projected exactly by enumeration.
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace glrm {

enum class RegKind {
  Zero, QuadraticReg, L1Reg, NonnegInd, BoxInd, OneSparseInd, UnitOneSparseInd,
  SimplexInd, BlockSparseInd, MaxNormInd, L2Unsquared, OneSparseNonnegInd,
  L1PlusNonneg, FixedEntry,
};

struct RegSpec {
  RegKind kind = RegKind::Zero;
  double gamma = 0.0;          // quadreg, l1reg, l2, l1_nonneg
  double lo = 0.0, hi = 1.0;   // box
  double mu = 1.0;             // maxnorm
  std::vector<int> blocks{};   // blocksparse partition sizes (sum = k)
  std::shared_ptr<RegSpec> inner{};  // fixed-entry wrapper
  double fixed_value = 1.0;
  int fixed_index = 0;

  static RegSpec zero() { return {}; }
  static RegSpec quadratic(double g);
  static RegSpec l1(double g);
  static RegSpec nonneg() { return {RegKind::NonnegInd}; }
  static RegSpec box(double lo, double hi);
  static RegSpec one_sparse() { return {RegKind::OneSparseInd}; }
  static RegSpec unit_one_sparse() { return {RegKind::UnitOneSparseInd}; }
  static RegSpec simplex() { return {RegKind::SimplexInd}; }
  static RegSpec block_sparse(std::vector<int> partition);
  static RegSpec max_norm(double mu);
  static RegSpec l2_unsquared(double g);
  static RegSpec one_sparse_nonneg() { return {RegKind::OneSparseNonnegInd}; }
  static RegSpec l1_nonneg(double g);
  // pins coordinate `index` to `value` and applies `in` to the remaining
  // coordinates; index 0 is the catalog's fixed_first form, the model uses
  // the offset column's index
  static RegSpec fixed_entry(RegSpec in, double value, int index = 0);

  bool is_indicator() const;
  bool convex() const;
  // value depends only on coordinate 2-norms, so the (m+n)k - k^2 degrees of
  // freedom count applies
  bool orthogonally_invariant() const;
  std::string name() const;
  static RegSpec parse(const std::string& name, double gamma);
};

// Rescales the gamma of a gamma-carrying spec (through fixed-entry wrappers).
// Throws for variants without a strength parameter.
void reg_set_gamma(RegSpec& spec, double gamma);

double reg_value(const RegSpec& spec, std::span<const double> v);

// Proximal point of alpha * spec at v: argmin_x alpha*r(x) + 0.5 ||x - v||^2.
void reg_prox(const RegSpec& spec, std::span<const double> v, double alpha, std::span<double> out);

}  // namespace glrm
