// Model selection: regularization paths by warm starting (homotopy),
// Monte-Carlo cross-validation over (k, gamma), and the error metrics used
// throughout the experiments.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fit.hpp"
#include "problem.hpp"

namespace glrm {

struct EvalMetrics {
  double normalized_loss = 0.0;    // scaled per-entry loss
  double rms = std::nan("");       // raw inner products vs numeric values
  double rms_imputed = std::nan("");  // imputed (domain-constrained) values vs truth
  double misclassification = std::nan("");  // level-valued cells only
  double mse_real = std::nan("");  // real columns only
  double precision_at = std::nan("");
  double positive_rate = std::nan("");      // share of +1 among ranked entries
  long count = 0;
};

// Scores `entries` of `truth` (typically a heldout set or the complement of
// Omega) against the model. top_t > 0 additionally ranks the given entries of
// Boolean columns by x_i y_j and reports precision at top_t; that requires at
// least one Boolean column.
EvalMetrics metrics(const GlrmProblem& p, const Factors& f, const DataTable& truth,
                    const std::vector<std::pair<int, int>>& entries, int top_t = 0);

struct PathEntry {
  double gamma = 0.0;
  Factors factors;
  double objective = 0.0;
  double objective_delta = std::nan("");   // previous minus current (scree annotation)
  double noise_objective = std::nan("");   // same fit on permuted entries (parallel analysis)
  double train_error = 0.0;
  double test_error = std::nan("");
  int iterations = 0;
};

struct PathOptions {
  bool noise_baseline = false;
  std::uint64_t noise_seed = 1;
};

// Fits gammas[0] from `init`, then warm-starts every following gamma from the
// previous solution, rescaling the regularizers in place. Gammas must be
// strictly descending.
std::vector<PathEntry> reg_path(const GlrmProblem& p, const std::vector<double>& gammas,
                                const Factors& init, const FitConfig& cfg,
                                const DataTable* truth = nullptr,
                                const std::vector<std::pair<int, int>>* heldout = nullptr,
                                const PathOptions& opts = {});

struct CvCell {
  int k = 0;
  double gamma = 0.0;
  int fold = 0;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct CvSummary {
  int k = 0;
  double gamma = 0.0;
  double mean_train = 0.0;
  double mean_test = 0.0;
};

struct CvResult {
  std::vector<CvCell> cells;
  std::vector<CvSummary> summary;
  int best_k(double gamma) const;  // argmin-k of mean test error at this gamma
};

// What a fold resamples: observed entries (the default, for randomly placed
// observations), or whole rows/columns when examples or features are
// themselves sampled iid.
enum class CvResample { Entries, Rows, Columns };

// Monte-Carlo cross-validation: each fold holds out `fraction` of the
// observed entries (or rows/columns), fits every (k, gamma) on the remainder,
// and scores the heldout set. Deterministic per seed, including fold
// assignment.
CvResult cross_validate(const GlrmProblem& tmpl, const std::vector<int>& ks,
                        const std::vector<double>& gammas, double fraction, int folds,
                        std::uint64_t seed, const FitConfig& cfg,
                        const std::string& init_kind = "svd",
                        CvResample resample = CvResample::Entries);

void write_cv_tsv(const CvResult& cv, const std::string& path);
void write_path_tsv(const std::vector<PathEntry>& path, const std::string& pathname);

}  // namespace glrm
