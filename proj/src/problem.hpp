// The GLRM problem statement and fitted factors: embedding bookkeeping for
// multi-dimensional losses, column offsets via the augmented-regularizer
// trick, loss scaling, table imputation, and model serialization.
#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "loss.hpp"
#include "reg.hpp"
#include "types.hpp"

namespace glrm {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Factors {
  RowMajorMatrix X;     // m x k_eff, rows are representations
  Eigen::MatrixXd Y;    // k_eff x d, column blocks per feature
  Eigen::VectorXd sigma2;  // n, all ones when unscaled
};

class GlrmProblem {
 public:
  GlrmProblem(std::shared_ptr<const DataTable> table, std::vector<LossSpec> losses,
              RegSpec row_reg, std::vector<RegSpec> col_regs, int k,
              bool with_offset = false, bool with_scaling = false);

  const DataTable& table() const { return *table_; }
  std::shared_ptr<const DataTable> table_ptr() const { return table_; }
  int m() const { return table_->rows(); }
  int n() const { return table_->cols(); }
  int k() const { return k_; }
  int k_eff() const { return with_offset_ ? k_ + 1 : k_; }
  int d() const { return d_total_; }
  bool with_offset() const { return with_offset_; }
  bool with_scaling() const { return with_scaling_; }

  const LossSpec& loss(int j) const { return losses_[j]; }
  const std::vector<LossSpec>& losses() const { return losses_; }
  // user-supplied regularizer on the free coordinates
  const RegSpec& row_reg(int i) const { return row_regs_[i]; }
  const RegSpec& col_reg(int j) const { return col_regs_[j]; }
  // with offset, the row regularizer wrapped so the offset coordinate is
  // pinned to one
  const RegSpec& effective_row_reg(int i) const { return eff_row_regs_[i]; }

  double sigma2(int j) const { return sigma2_[j]; }
  const Eigen::VectorXd& sigma2() const { return sigma2_; }
  double loss_weight(int j) const { return with_scaling_ ? 1.0 / sigma2_[j] : 1.0; }

  int embed_dim(int j) const { return d_j_[j]; }
  int embed_offset(int j) const { return col_off_[j]; }

  const std::vector<int>& row_obs(int i) const { return rows_obs_[i]; }
  const std::vector<int>& col_obs(int j) const { return cols_obs_[j]; }
  long n_obs() const { return n_obs_; }

  Factors zero_factors() const;
  GlrmProblem with_rank(int k) const;
  GlrmProblem with_gamma(double gamma) const;        // rescales both reg sides
  GlrmProblem with_table(std::shared_ptr<const DataTable> t) const;

 private:
  std::shared_ptr<const DataTable> table_;
  std::vector<LossSpec> losses_;
  std::vector<RegSpec> row_regs_, eff_row_regs_, col_regs_;
  int k_;
  bool with_offset_, with_scaling_;
  Eigen::VectorXd sigma2_;
  std::vector<int> d_j_, col_off_;
  int d_total_ = 0;
  std::vector<std::vector<int>> rows_obs_, cols_obs_;
  long n_obs_ = 0;
};

double objective(const GlrmProblem& p, const Factors& f);

// Per-row and per-column partial objectives used by the step acceptance rule:
// the row/column's loss terms plus its own regularizer.
double row_objective(const GlrmProblem& p, const Factors& f, int i,
                     const Eigen::RowVectorXd& xi);
double col_objective(const GlrmProblem& p, const Factors& f, int j,
                     const Eigen::MatrixXd& yj);

// Every cell, observed or not, replaced by the loss imputation of x_i Y_j
// constrained to the column kind.
DataTable impute_table(const GlrmProblem& p, const Factors& f);

// Factors frequently violate indicator constraints right after random
// initialization; one prox pass restores feasibility.
void project_feasible(const GlrmProblem& p, Factors& f);

int degrees_of_freedom(const GlrmProblem& p, const Factors& f);

struct ModelMeta {
  int m = 0, n = 0, k = 0;
  bool with_offset = false, with_scaling = false;
  std::vector<std::string> loss_names;
  std::string row_reg_name;
  double row_gamma = 0.0;
  std::vector<std::string> col_reg_names;
  std::vector<double> col_gammas;
  std::vector<FeatureKind> kinds;
};

struct Model {
  Factors factors;
  ModelMeta meta;
};

ModelMeta make_meta(const GlrmProblem& p, double row_gamma, double col_gamma);
void save_model(const Factors& f, const ModelMeta& meta, const std::string& path);
Model load_model(const std::string& path);

// Rebuild a problem from loaded metadata plus a table (for impute/certify).
GlrmProblem problem_from_meta(const ModelMeta& meta, std::shared_ptr<const DataTable> table);

}  // namespace glrm
