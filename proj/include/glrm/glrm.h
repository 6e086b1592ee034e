/*
 * glrm -- generalized low rank models.
 *
 * C interface to the fitting library: heterogeneous data tables, per-column
 * losses, row/column regularizers, proximal-gradient fitting, imputation,
 * model files, cross-validation, regularization paths, and the global
 * optimality certificate.
 *
 * Every function returns GLRM_OK (0) on success or a nonzero status; the
 * message for the most recent failure on the calling thread is available via
 * glrm_last_error(). Handles are opaque and must be released with the
 * matching *_free call.
 */
#ifndef GLRM_GLRM_H
#define GLRM_GLRM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum glrm_status {
  GLRM_OK = 0,
  GLRM_ERR_INVALID = 1,   /* bad arguments, shape mismatch, domain violation */
  GLRM_ERR_IO = 2,        /* file missing, unreadable, or malformed */
  GLRM_ERR_NUMERIC = 3,   /* numerical failure during fitting/analysis */
  GLRM_ERR_INTERNAL = 4
} glrm_status;

typedef struct glrm_table glrm_table;
typedef struct glrm_problem glrm_problem;
typedef struct glrm_model glrm_model;
typedef struct glrm_report glrm_report;

const char* glrm_last_error(void);
const char* glrm_version(void);

/* ---- tables ------------------------------------------------------------ */

/* kind_hints: NULL, or a comma-separated list "COL=KIND" with 1-based column
 * indexes and KIND in real|boolean|ordinal:D|categorical:D|interval. */
glrm_status glrm_table_read_csv(const char* path, const char* na_token, const char* kind_hints,
                                glrm_table** out);
glrm_status glrm_table_write_csv(const glrm_table* t, const char* path, const char* na_token);
glrm_status glrm_table_dims(const glrm_table* t, int* m, int* n, long* n_observed);
/* kind string of column j (0-based) into buf */
glrm_status glrm_table_kind(const glrm_table* t, int j, char* buf, size_t buflen);
void glrm_table_free(glrm_table* t);

/* synthetic presets: boolean, censored, mixed, missing, cv, regpath, qrpca.
 * obs_fraction < 0 keeps the preset default. out_full may be NULL. */
glrm_status glrm_table_synth(const char* preset, uint64_t seed, double obs_fraction,
                             glrm_table** out_observed, glrm_table** out_full);

/* ---- problems ----------------------------------------------------------- */

/* Builds a problem with losses chosen per column kind (real->huber,
 * boolean->hinge, ordinal->ordinal_hinge, categorical->onevsall,
 * interval->interval) and quadreg(gamma) on rows and columns. */
glrm_status glrm_problem_create(const glrm_table* t, int rank, double gamma, int with_offset,
                                int with_scaling, glrm_problem** out);
/* Override column j (0-based) with a catalog loss name, e.g. "quadratic",
 * "quantile:0.2", "multi_ordinal". Must precede glrm_fit. */
glrm_status glrm_problem_set_loss(glrm_problem* p, int j, const char* loss_name);
/* Catalog regularizer names, e.g. "quadreg", "nonneg", "unitonesparse". */
glrm_status glrm_problem_set_row_reg(glrm_problem* p, const char* name, double gamma);
glrm_status glrm_problem_set_col_reg(glrm_problem* p, const char* name, double gamma);
glrm_status glrm_problem_loss_name(const glrm_problem* p, int j, char* buf, size_t buflen);
void glrm_problem_free(glrm_problem* p);

/* ---- fitting ------------------------------------------------------------ */

typedef struct glrm_fit_opts {
  int max_iters;          /* default 200 */
  double rel_tol;         /* default 1e-4 */
  int threads;            /* default 0 = all cores */
  uint64_t seed;          /* random init / sampling */
  double sample_fraction; /* 0 disables stochastic passes */
  int inner_prox_iters;   /* exact-quadratic engine, default 1 */
} glrm_fit_opts;

void glrm_fit_opts_default(glrm_fit_opts* opts);

/* init: "svd" (falls back to random if the table cannot be scaled),
 * "random", or "kmeanspp". Infeasible random starts under indicator
 * regularizers are projected. */
glrm_status glrm_fit(glrm_problem* p, const char* init, const glrm_fit_opts* opts,
                     glrm_model** out_model, glrm_report** out_report);

/* ---- models ------------------------------------------------------------- */

glrm_status glrm_model_save(const glrm_model* mdl, const char* path);
glrm_status glrm_model_load(const char* path, glrm_model** out);
glrm_status glrm_model_dims(const glrm_model* mdl, int* m, int* n, int* k);
/* kind-hint string ("1=real,2=boolean,...") recording the kinds the model was
 * fitted on; pass it to glrm_table_read_csv so re-read tables match. */
glrm_status glrm_model_kind_hints(const glrm_model* mdl, char* buf, size_t buflen);
glrm_status glrm_model_objective(const glrm_model* mdl, const glrm_table* t, double* out);
/* keep_observed != 0 copies observed cells through; 0 imputes (denoises)
 * every cell. */
glrm_status glrm_model_impute(const glrm_model* mdl, const glrm_table* t, int keep_observed,
                              glrm_table** out);
/* verdict: 1 certified, 0 uncertified, -1 refused (message in last_error) */
glrm_status glrm_model_certify(const glrm_model* mdl, const glrm_table* t, double* spectral_norm,
                               int* verdict);
void glrm_model_free(glrm_model* mdl);

/* ---- reports ------------------------------------------------------------ */

glrm_status glrm_report_rows(const glrm_report* r, long* out);
glrm_status glrm_report_objective(const glrm_report* r, long row, double* out);
/* include_time writes a third wall-clock column (not byte-reproducible). */
glrm_status glrm_report_write(const glrm_report* r, const char* path, int include_time);
glrm_status glrm_report_termination(const glrm_report* r, char* buf, size_t buflen);
void glrm_report_free(glrm_report* r);

/* ---- model selection ----------------------------------------------------- */

/* Cross-validation over ranks x gammas (comma-separated lists), holding out
 * `fraction` of the observed entries per fold. Writes a TSV report and
 * returns the test-error-minimizing rank at the smallest gamma. */
glrm_status glrm_cross_validate(glrm_problem* p, const char* ranks, const char* gammas,
                                double fraction, int folds, uint64_t seed,
                                const glrm_fit_opts* opts, const char* report_path, int* best_k);

/* Regularization path over strictly descending gammas, warm-starting each fit
 * from the previous solution; holds out `holdout_fraction` of the observed
 * entries for the test-error column when positive. */
glrm_status glrm_reg_path(glrm_problem* p, const char* gammas, double holdout_fraction,
                          uint64_t seed, const glrm_fit_opts* opts, const char* report_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GLRM_GLRM_H */
