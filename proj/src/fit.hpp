// Fitting engines: alternating proximal gradient with the adaptive per-row /
// per-column step rule (default), exact alternating minimization for
// quadratic objectives with Gram caching and prox-prox inner iterations,
// single-row solves, and stochastic gradient passes.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "problem.hpp"

namespace glrm {

struct FitConfig {
  int max_outer_iters = 200;
  double rel_tol = 1e-4;          // on relative objective decrease
  double init_step = 1.0;         // alpha_i = alpha_j = 1, scaled by 1/n_i per row
  double step_decrease = 0.7;     // on per-row objective increase
  double step_increase = 1.05;    // on decrease
  int inner_prox_iters = 1;       // prox-prox repeats in the exact quadratic engine
  double sample_fraction = 0.0;   // 0 disables sampling
  bool stochastic_acceptance = false;
  std::uint64_t seed = 0;
  int threads = 1;
  // test/diagnostic hook, called after every outer iteration
  std::function<void(int, const Factors&)> iter_callback;

  void validate() const;
};

struct FitReport {
  std::vector<double> objective;   // index 0 is the objective at the initial point
  std::vector<double> seconds;     // wall time of each outer iteration
  std::string termination;         // "converged" or "max_iters"
  std::vector<double> row_steps, col_steps;

  double final_objective() const { return objective.back(); }
  int iterations() const { return static_cast<int>(objective.size()) - 1; }
  // The default export omits wall times so histories are reproducible
  // byte-for-byte under a fixed seed.
  void write_tsv(const std::string& path, bool include_time = false) const;
};

std::pair<Factors, FitReport> fit(const GlrmProblem& p, const Factors& init, const FitConfig& cfg);

std::pair<Factors, FitReport> fit_stochastic(const GlrmProblem& p, const Factors& init,
                                             const FitConfig& cfg);

// Exact alternating minimization for all-quadratic losses. Rows and columns
// with zero/quadratic regularizers are solved by cached Cholesky solves;
// one-sparse and unit-one-sparse rows are solved exactly by enumeration;
// anything else runs the prox-prox update cfg.inner_prox_iters times.
std::pair<Factors, FitReport> fit_exact_quadratic(const GlrmProblem& p, const Factors& init,
                                                  const FitConfig& cfg);

// Runs the row update loop alone against a fixed Y, to rel_tol.
Eigen::RowVectorXd solve_row(const GlrmProblem& p, const Eigen::MatrixXd& Y, int i,
                             const Eigen::RowVectorXd& x0, const FitConfig& cfg);

}  // namespace glrm
