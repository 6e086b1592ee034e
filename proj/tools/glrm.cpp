// glrm command line tool: fit, impute, cv, path, certify, synth.
// Talks to the library exclusively through the public C API.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glrm/glrm.h"

namespace {

struct ModelFlags {
  int rank = 2;
  double gamma = 0.1;
  std::vector<std::string> loss_overrides;
  std::string row_reg = "quadreg";
  std::string col_reg = "quadreg";
  bool no_offset = false;
  bool no_scaling = false;
  std::string na = "NA";
  std::string hints;
};

struct FitFlags {
  std::string init = "svd";
  uint64_t seed = 0;
  int threads = 0;
  int max_iters = 200;
  double tol = 1e-4;
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf, bool with_rank = true) {
  if (with_rank) cmd->add_option("--rank", mf.rank, "target rank k");
  cmd->add_option("--gamma", mf.gamma, "regularization strength");
  cmd->add_option("--loss-override", mf.loss_overrides,
                  "COL=NAME per-column loss override (1-based column)");
  cmd->add_option("--reg", mf.row_reg, "row regularizer catalog name");
  cmd->add_option("--col-reg", mf.col_reg, "column regularizer catalog name");
  cmd->add_flag("--no-offset", mf.no_offset, "disable the column offset");
  cmd->add_flag("--no-scaling", mf.no_scaling, "disable per-column loss scaling");
  cmd->add_option("--na", mf.na, "missing-value token");
  cmd->add_option("--hints", mf.hints, "column kind hints, e.g. 3=ordinal:7,5=interval");
}

void add_fit_flags(CLI::App* cmd, FitFlags& ff) {
  cmd->add_option("--init", ff.init, "svd, random, or kmeanspp");
  cmd->add_option("--seed", ff.seed, "random seed");
  cmd->add_option("--threads", ff.threads, "worker threads (0 = all cores)");
  cmd->add_option("--max-iters", ff.max_iters, "outer iteration cap");
  cmd->add_option("--tol", ff.tol, "relative objective decrease tolerance");
}

int fail(const char* what) {
  std::fprintf(stderr, "glrm: %s: %s\n", what, glrm_last_error());
  return 1;
}

glrm_fit_opts make_opts(const FitFlags& ff) {
  glrm_fit_opts opts;
  glrm_fit_opts_default(&opts);
  opts.max_iters = ff.max_iters;
  opts.rel_tol = ff.tol;
  opts.threads = ff.threads;
  opts.seed = ff.seed;
  return opts;
}

// shared problem construction for fit/cv/path
glrm_problem* build_problem(const std::string& csv, const ModelFlags& mf, glrm_table** out_table) {
  glrm_table* table = nullptr;
  if (glrm_table_read_csv(csv.c_str(), mf.na.c_str(), mf.hints.empty() ? nullptr : mf.hints.c_str(),
                          &table) != GLRM_OK) {
    fail("reading csv");
    return nullptr;
  }
  glrm_problem* prob = nullptr;
  if (glrm_problem_create(table, mf.rank, mf.gamma, mf.no_offset ? 0 : 1, mf.no_scaling ? 0 : 1,
                          &prob) != GLRM_OK) {
    fail("building problem");
    glrm_table_free(table);
    return nullptr;
  }
  int ncols = 0;
  glrm_table_dims(table, nullptr, &ncols, nullptr);
  for (const auto& ov : mf.loss_overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "glrm: --loss-override expects COL=NAME, got '%s'\n", ov.c_str());
      glrm_problem_free(prob);
      glrm_table_free(table);
      return nullptr;
    }
    std::string which = ov.substr(0, eq);
    std::string name = ov.substr(eq + 1);
    int lo = 1, hi = ncols;
    if (which != "all") lo = hi = std::stoi(which);
    for (int col = lo; col <= hi; ++col) {
      if (glrm_problem_set_loss(prob, col - 1, name.c_str()) != GLRM_OK) {
        fail("loss override");
        glrm_problem_free(prob);
        glrm_table_free(table);
        return nullptr;
      }
    }
  }
  if (glrm_problem_set_row_reg(prob, mf.row_reg.c_str(), mf.gamma) != GLRM_OK ||
      glrm_problem_set_col_reg(prob, mf.col_reg.c_str(), mf.gamma) != GLRM_OK) {
    fail("regularizer");
    glrm_problem_free(prob);
    glrm_table_free(table);
    return nullptr;
  }
  *out_table = table;
  return prob;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized low rank models"};
  app.require_subcommand(1);

  // fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "fit a low rank model to a CSV table");
  std::string fit_csv;
  ModelFlags fit_mf;
  FitFlags fit_ff;
  std::string fit_out = "model.glrm", fit_history;
  fit_cmd->add_option("csv", fit_csv, "input table")->required();
  add_model_flags(fit_cmd, fit_mf);
  add_fit_flags(fit_cmd, fit_ff);
  fit_cmd->add_option("--out", fit_out, "model file to write");
  fit_cmd->add_option("--history", fit_history, "convergence history TSV");

  // impute -------------------------------------------------------------
  auto* imp_cmd = app.add_subcommand("impute", "fill every cell from a fitted model");
  std::string imp_model, imp_csv, imp_out = "imputed.csv", imp_na = "NA";
  bool keep_observed = false;
  imp_cmd->add_option("model", imp_model, "fitted .glrm model")->required();
  imp_cmd->add_option("csv", imp_csv, "input table")->required();
  imp_cmd->add_option("--out", imp_out, "output CSV");
  imp_cmd->add_flag("--keep-observed", keep_observed, "copy observed cells unchanged");
  imp_cmd->add_option("--na", imp_na, "missing-value token");

  // cv -----------------------------------------------------------------
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate over ranks and gammas");
  std::string cv_csv, cv_ranks = "1,2,3,4,5", cv_gammas = "0", cv_out = "cv.tsv";
  double cv_fraction = 0.1;
  int cv_folds = 3;
  ModelFlags cv_mf;
  FitFlags cv_ff;
  cv_cmd->add_option("csv", cv_csv, "input table")->required();
  cv_cmd->add_option("--ranks", cv_ranks, "comma-separated rank grid");
  cv_cmd->add_option("--gammas", cv_gammas, "comma-separated gamma grid");
  cv_cmd->add_option("--holdout-fraction", cv_fraction, "held-out share of observed entries");
  cv_cmd->add_option("--folds", cv_folds, "resampling folds");
  add_model_flags(cv_cmd, cv_mf, /*with_rank=*/false);
  add_fit_flags(cv_cmd, cv_ff);
  cv_cmd->add_option("--out", cv_out, "report TSV");

  // path ----------------------------------------------------------------
  auto* path_cmd = app.add_subcommand("path", "regularization path with warm starts");
  std::string path_csv, path_gammas, path_out = "path.tsv";
  double path_fraction = 0.1;
  ModelFlags path_mf;
  FitFlags path_ff;
  path_cmd->add_option("csv", path_csv, "input table")->required();
  path_cmd->add_option("--gammas", path_gammas, "strictly descending gamma list")->required();
  path_cmd->add_option("--holdout-fraction", path_fraction, "held-out share for test error");
  add_model_flags(path_cmd, path_mf);
  add_fit_flags(path_cmd, path_ff);
  path_cmd->add_option("--out", path_out, "report TSV");

  // certify --------------------------------------------------------------
  auto* cert_cmd = app.add_subcommand("certify", "test global optimality of a fitted model");
  std::string cert_model, cert_csv, cert_na = "NA";
  cert_cmd->add_option("model", cert_model, "fitted .glrm model")->required();
  cert_cmd->add_option("csv", cert_csv, "table the model was fitted on")->required();
  cert_cmd->add_option("--na", cert_na, "missing-value token");

  // synth -----------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark table");
  std::string synth_preset, synth_out = "data.csv", synth_truth;
  uint64_t synth_seed = 0;
  double synth_obs = -1.0;
  synth_cmd->add_option("--preset", synth_preset,
                        "boolean, censored, mixed, missing, cv, regpath, qrpca")
      ->required();
  synth_cmd->add_option("--seed", synth_seed, "random seed");
  synth_cmd->add_option("--obs-fraction", synth_obs, "observed fraction (preset default if unset)");
  synth_cmd->add_option("--out", synth_out, "observed-table CSV");
  synth_cmd->add_option("--truth-out", synth_truth, "optional fully observed ground-truth CSV");

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) {
    glrm_table* table = nullptr;
    glrm_problem* prob = build_problem(fit_csv, fit_mf, &table);
    if (!prob) return 1;
    glrm_fit_opts opts = make_opts(fit_ff);
    glrm_model* model = nullptr;
    glrm_report* report = nullptr;
    if (glrm_fit(prob, fit_ff.init.c_str(), &opts, &model, &report) != GLRM_OK) return fail("fit");
    if (glrm_model_save(model, fit_out.c_str()) != GLRM_OK) return fail("saving model");
    long iters = 0;
    glrm_report_rows(report, &iters);
    double obj = 0;
    glrm_report_objective(report, iters - 1, &obj);
    char term[32];
    glrm_report_termination(report, term, sizeof term);
    std::printf("wrote %s (%s after %ld iterations, objective %.6g)\n", fit_out.c_str(), term,
                iters - 1, obj);
    if (!fit_history.empty()) {
      if (glrm_report_write(report, fit_history.c_str(), 0) != GLRM_OK) return fail("history");
      std::printf("wrote %s\n", fit_history.c_str());
    }
    glrm_report_free(report);
    glrm_model_free(model);
    glrm_problem_free(prob);
    glrm_table_free(table);
    return 0;
  }

  if (imp_cmd->parsed()) {
    glrm_model* model = nullptr;
    if (glrm_model_load(imp_model.c_str(), &model) != GLRM_OK) return fail("loading model");
    char hints[16384];
    if (glrm_model_kind_hints(model, hints, sizeof hints) != GLRM_OK) return fail("model kinds");
    glrm_table* table = nullptr;
    if (glrm_table_read_csv(imp_csv.c_str(), imp_na.c_str(), hints, &table) != GLRM_OK)
      return fail("reading csv");
    glrm_table* filled = nullptr;
    if (glrm_model_impute(model, table, keep_observed ? 1 : 0, &filled) != GLRM_OK)
      return fail("imputing");
    if (glrm_table_write_csv(filled, imp_out.c_str(), imp_na.c_str()) != GLRM_OK)
      return fail("writing csv");
    std::printf("wrote %s\n", imp_out.c_str());
    glrm_table_free(filled);
    glrm_table_free(table);
    glrm_model_free(model);
    return 0;
  }

  if (cv_cmd->parsed()) {
    glrm_table* table = nullptr;
    cv_mf.rank = 1;  // replaced per grid point
    glrm_problem* prob = build_problem(cv_csv, cv_mf, &table);
    if (!prob) return 1;
    glrm_fit_opts opts = make_opts(cv_ff);
    int best_k = -1;
    if (glrm_cross_validate(prob, cv_ranks.c_str(), cv_gammas.c_str(), cv_fraction, cv_folds,
                            cv_ff.seed, &opts, cv_out.c_str(), &best_k) != GLRM_OK)
      return fail("cross-validation");
    std::printf("wrote %s (best rank by mean test error: %d)\n", cv_out.c_str(), best_k);
    glrm_problem_free(prob);
    glrm_table_free(table);
    return 0;
  }

  if (path_cmd->parsed()) {
    glrm_table* table = nullptr;
    glrm_problem* prob = build_problem(path_csv, path_mf, &table);
    if (!prob) return 1;
    glrm_fit_opts opts = make_opts(path_ff);
    if (glrm_reg_path(prob, path_gammas.c_str(), path_fraction, path_ff.seed, &opts,
                      path_out.c_str()) != GLRM_OK)
      return fail("regularization path");
    std::printf("wrote %s\n", path_out.c_str());
    glrm_problem_free(prob);
    glrm_table_free(table);
    return 0;
  }

  if (cert_cmd->parsed()) {
    glrm_model* model = nullptr;
    if (glrm_model_load(cert_model.c_str(), &model) != GLRM_OK) return fail("loading model");
    char hints[16384];
    if (glrm_model_kind_hints(model, hints, sizeof hints) != GLRM_OK) return fail("model kinds");
    glrm_table* table = nullptr;
    if (glrm_table_read_csv(cert_csv.c_str(), cert_na.c_str(), hints, &table) != GLRM_OK)
      return fail("reading csv");
    double s = 0.0;
    int verdict = 0;
    if (glrm_model_certify(model, table, &s, &verdict) != GLRM_OK) return fail("certify");
    if (verdict < 0)
      std::printf("refused: %s\n", glrm_last_error());
    else
      std::printf("spectral norm %.10g: %s\n", s, verdict ? "certified" : "uncertified");
    glrm_table_free(table);
    glrm_model_free(model);
    return 0;
  }

  if (synth_cmd->parsed()) {
    glrm_table* obs = nullptr;
    glrm_table* full = nullptr;
    if (glrm_table_synth(synth_preset.c_str(), synth_seed, synth_obs, &obs,
                         synth_truth.empty() ? nullptr : &full) != GLRM_OK)
      return fail("synth");
    if (glrm_table_write_csv(obs, synth_out.c_str(), "NA") != GLRM_OK) return fail("writing csv");
    std::printf("wrote %s\n", synth_out.c_str());
    if (!synth_truth.empty()) {
      if (glrm_table_write_csv(full, synth_truth.c_str(), "NA") != GLRM_OK)
        return fail("writing truth csv");
      std::printf("wrote %s\n", synth_truth.c_str());
      glrm_table_free(full);
    }
    glrm_table_free(obs);
    return 0;
  }

  return 1;
}
