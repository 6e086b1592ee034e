// C API implementation: thin translation layer over the core library with
// opaque handles and thread-local error reporting.
#include "glrm/glrm.h"

#include <cstring>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "analysis.hpp"
#include "fit.hpp"
#include "init.hpp"
#include "problem.hpp"
#include "select.hpp"
#include "synth.hpp"
#include "types.hpp"
#include "util.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
glrm_status wrap(Fn&& fn) {
  try {
    fn();
    return GLRM_OK;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return GLRM_ERR_INVALID;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return GLRM_ERR_INVALID;
  } catch (const std::out_of_range& e) {
    set_error(e.what());
    return GLRM_ERR_INVALID;
  } catch (const std::runtime_error& e) {
    set_error(e.what());
    return GLRM_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return GLRM_ERR_INTERNAL;
  }
}

void copy_string(const std::string& s, char* buf, size_t buflen) {
  if (!buf || buflen == 0) throw std::invalid_argument("null output buffer");
  if (s.size() + 1 > buflen)
    throw std::invalid_argument("output buffer too small (need " +
                                std::to_string(s.size() + 1) + " bytes)");
  std::snprintf(buf, buflen, "%s", s.c_str());
}

std::vector<double> parse_doubles(const char* csv, const char* what) {
  if (!csv) throw std::invalid_argument(std::string("missing ") + what);
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  if (out.empty()) throw std::invalid_argument(std::string("empty ") + what);
  return out;
}

std::vector<int> parse_ints(const char* csv, const char* what) {
  std::vector<int> out;
  for (double v : parse_doubles(csv, what)) out.push_back(static_cast<int>(v));
  return out;
}

glrm::FeatureKind parse_kind_string(const std::string& s) {
  if (s == "real") return glrm::FeatureKind::real();
  if (s == "boolean") return glrm::FeatureKind::boolean();
  if (s == "interval") return glrm::FeatureKind::interval();
  auto pos = s.find(':');
  if (pos != std::string::npos) {
    int d = std::stoi(s.substr(pos + 1));
    std::string base = s.substr(0, pos);
    if (base == "ordinal") return glrm::FeatureKind::ordinal(d);
    if (base == "categorical") return glrm::FeatureKind::categorical(d);
  }
  throw std::invalid_argument("unknown kind '" + s + "'");
}

}  // namespace

struct glrm_table {
  std::shared_ptr<glrm::DataTable> table;
  std::vector<glrm::ColumnInfo> info;
};

struct glrm_problem {
  std::shared_ptr<const glrm::DataTable> table;
  std::vector<glrm::LossSpec> losses;
  glrm::RegSpec row_reg;
  double row_gamma = 0.0;
  std::vector<glrm::RegSpec> col_regs;
  double col_gamma = 0.0;
  int rank = 1;
  bool with_offset = true;
  bool with_scaling = true;

  glrm::GlrmProblem build() const {
    return glrm::GlrmProblem(table, losses, row_reg, col_regs, rank, with_offset, with_scaling);
  }
};

struct glrm_model {
  glrm::Model model;
};

struct glrm_report {
  glrm::FitReport report;
};

extern "C" {

const char* glrm_last_error(void) { return g_last_error.c_str(); }

const char* glrm_version(void) { return "1.0.0"; }

glrm_status glrm_table_read_csv(const char* path, const char* na_token, const char* kind_hints,
                                glrm_table** out) {
  return wrap([&] {
    if (!path || !out) throw std::invalid_argument("null argument");
    std::vector<std::optional<glrm::FeatureKind>> hints;
    if (kind_hints && *kind_hints) {
      // peek at the header to size the hint vector
      glrm::ReadResult probe = glrm::read_csv(path, na_token ? na_token : "NA");
      hints.assign(probe.table.cols(), std::nullopt);
      std::stringstream ss(kind_hints);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("hint must look like COL=KIND");
        int col = std::stoi(tok.substr(0, eq));
        if (col < 1 || col > static_cast<int>(hints.size()))
          throw std::invalid_argument("hint column out of range");
        hints[col - 1] = parse_kind_string(tok.substr(eq + 1));
      }
    }
    glrm::ReadResult r = glrm::read_csv(path, na_token ? na_token : "NA", hints);
    auto* t = new glrm_table;
    t->table = std::make_shared<glrm::DataTable>(std::move(r.table));
    t->info = std::move(r.info);
    *out = t;
  });
}

glrm_status glrm_table_write_csv(const glrm_table* t, const char* path, const char* na_token) {
  return wrap([&] {
    if (!t || !path) throw std::invalid_argument("null argument");
    glrm::write_csv(*t->table, path, t->info, na_token ? na_token : "NA");
  });
}

glrm_status glrm_table_dims(const glrm_table* t, int* m, int* n, long* n_observed) {
  return wrap([&] {
    if (!t) throw std::invalid_argument("null table");
    if (m) *m = t->table->rows();
    if (n) *n = t->table->cols();
    if (n_observed) *n_observed = t->table->n_observed();
  });
}

glrm_status glrm_table_kind(const glrm_table* t, int j, char* buf, size_t buflen) {
  return wrap([&] {
    if (!t) throw std::invalid_argument("null table");
    copy_string(t->table->kind(j).name(), buf, buflen);
  });
}

void glrm_table_free(glrm_table* t) { delete t; }

glrm_status glrm_table_synth(const char* preset, uint64_t seed, double obs_fraction,
                             glrm_table** out_observed, glrm_table** out_full) {
  return wrap([&] {
    if (!preset || !out_observed) throw std::invalid_argument("null argument");
    glrm::SynthResult r = glrm::synth(preset, seed, obs_fraction);
    auto* obs = new glrm_table;
    obs->table = r.observed;
    *out_observed = obs;
    if (out_full) {
      auto* full = new glrm_table;
      full->table = r.full;
      *out_full = full;
    }
  });
}

glrm_status glrm_problem_create(const glrm_table* t, int rank, double gamma, int with_offset,
                                int with_scaling, glrm_problem** out) {
  return wrap([&] {
    if (!t || !out) throw std::invalid_argument("null argument");
    auto p = std::make_unique<glrm_problem>();
    p->table = t->table;
    p->rank = rank;
    p->with_offset = with_offset != 0;
    p->with_scaling = with_scaling != 0;
    p->row_gamma = p->col_gamma = gamma;
    p->row_reg = glrm::RegSpec::quadratic(gamma);
    for (int j = 0; j < t->table->cols(); ++j) {
      const glrm::FeatureKind& kind = t->table->kind(j);
      switch (kind.tag) {
        case glrm::FeatureKind::Tag::Real:
          p->losses.push_back(glrm::LossSpec::huber());
          break;
        case glrm::FeatureKind::Tag::Boolean:
          p->losses.push_back(glrm::LossSpec::hinge());
          break;
        case glrm::FeatureKind::Tag::Ordinal:
          p->losses.push_back(glrm::LossSpec::ordinal_hinge(kind.levels));
          break;
        case glrm::FeatureKind::Tag::Categorical:
          p->losses.push_back(glrm::LossSpec::one_vs_all(kind.levels));
          break;
        case glrm::FeatureKind::Tag::Interval:
          p->losses.push_back(glrm::LossSpec::interval());
          break;
      }
      p->col_regs.push_back(glrm::RegSpec::quadratic(gamma));
    }
    // validate now so errors surface at creation
    p->build();
    *out = p.release();
  });
}

glrm_status glrm_problem_set_loss(glrm_problem* p, int j, const char* loss_name) {
  return wrap([&] {
    if (!p || !loss_name) throw std::invalid_argument("null argument");
    if (j < 0 || j >= static_cast<int>(p->losses.size()))
      throw std::invalid_argument("column index out of range");
    glrm::FeatureKind kind = p->table->kind(j);
    glrm::LossSpec spec = glrm::LossSpec::parse(loss_name, &kind);
    if (!spec.accepts(kind))
      throw std::invalid_argument("loss " + spec.name() + " does not accept column kind " +
                                  kind.name());
    p->losses[j] = spec;
  });
}

glrm_status glrm_problem_set_row_reg(glrm_problem* p, const char* name, double gamma) {
  return wrap([&] {
    if (!p || !name) throw std::invalid_argument("null argument");
    p->row_reg = glrm::RegSpec::parse(name, gamma);
    p->row_gamma = gamma;
  });
}

glrm_status glrm_problem_set_col_reg(glrm_problem* p, const char* name, double gamma) {
  return wrap([&] {
    if (!p || !name) throw std::invalid_argument("null argument");
    glrm::RegSpec spec = glrm::RegSpec::parse(name, gamma);
    for (auto& r : p->col_regs) r = spec;
    p->col_gamma = gamma;
  });
}

glrm_status glrm_problem_loss_name(const glrm_problem* p, int j, char* buf, size_t buflen) {
  return wrap([&] {
    if (!p) throw std::invalid_argument("null problem");
    if (j < 0 || j >= static_cast<int>(p->losses.size()))
      throw std::invalid_argument("column index out of range");
    copy_string(p->losses[j].name(), buf, buflen);
  });
}

void glrm_problem_free(glrm_problem* p) { delete p; }

void glrm_fit_opts_default(glrm_fit_opts* opts) {
  if (!opts) return;
  opts->max_iters = 200;
  opts->rel_tol = 1e-4;
  opts->threads = 0;
  opts->seed = 0;
  opts->sample_fraction = 0.0;
  opts->inner_prox_iters = 1;
}

namespace {

glrm::FitConfig to_config(const glrm_fit_opts* opts) {
  glrm::FitConfig cfg;
  if (opts) {
    cfg.max_outer_iters = opts->max_iters;
    cfg.rel_tol = opts->rel_tol;
    cfg.threads = opts->threads > 0
                      ? opts->threads
                      : std::max(1u, std::thread::hardware_concurrency());
    cfg.seed = opts->seed;
    cfg.sample_fraction = opts->sample_fraction;
    cfg.inner_prox_iters = opts->inner_prox_iters;
  }
  return cfg;
}

glrm::Factors make_init(const glrm::GlrmProblem& prob, const std::string& kind, uint64_t seed) {
  if (kind == "random") return glrm::init_random(prob, seed);
  if (kind == "kmeanspp") return glrm::init_kmeanspp(prob, seed);
  if (kind == "svd") {
    try {
      return glrm::init_svd(prob);
    } catch (const std::exception& e) {
      glrm::warn(std::string("svd initialization failed (") + e.what() +
                 "); falling back to random");
      return glrm::init_random(prob, seed);
    }
  }
  throw std::invalid_argument("unknown init '" + kind + "' (svd, random, kmeanspp)");
}

}  // namespace

glrm_status glrm_fit(glrm_problem* p, const char* init, const glrm_fit_opts* opts,
                     glrm_model** out_model, glrm_report** out_report) {
  return wrap([&] {
    if (!p || !out_model) throw std::invalid_argument("null argument");
    glrm::GlrmProblem prob = p->build();
    glrm::FitConfig cfg = to_config(opts);
    glrm::Factors start = make_init(prob, init ? init : "svd", cfg.seed);
    if (!std::isfinite(glrm::objective(prob, start))) glrm::project_feasible(prob, start);

    std::pair<glrm::Factors, glrm::FitReport> res =
        cfg.sample_fraction > 0.0 && cfg.sample_fraction < 1.0
            ? glrm::fit_stochastic(prob, start, cfg)
            : glrm::fit(prob, start, cfg);

    auto* mdl = new glrm_model;
    mdl->model.factors = std::move(res.first);
    mdl->model.meta = glrm::make_meta(prob, p->row_gamma, p->col_gamma);
    *out_model = mdl;
    if (out_report) {
      auto* rep = new glrm_report;
      rep->report = std::move(res.second);
      *out_report = rep;
    }
  });
}

glrm_status glrm_model_save(const glrm_model* mdl, const char* path) {
  return wrap([&] {
    if (!mdl || !path) throw std::invalid_argument("null argument");
    glrm::save_model(mdl->model.factors, mdl->model.meta, path);
  });
}

glrm_status glrm_model_load(const char* path, glrm_model** out) {
  return wrap([&] {
    if (!path || !out) throw std::invalid_argument("null argument");
    auto mdl = std::make_unique<glrm_model>();
    mdl->model = glrm::load_model(path);
    *out = mdl.release();
  });
}

glrm_status glrm_model_dims(const glrm_model* mdl, int* m, int* n, int* k) {
  return wrap([&] {
    if (!mdl) throw std::invalid_argument("null model");
    if (m) *m = mdl->model.meta.m;
    if (n) *n = mdl->model.meta.n;
    if (k) *k = mdl->model.meta.k;
  });
}

glrm_status glrm_model_kind_hints(const glrm_model* mdl, char* buf, size_t buflen) {
  return wrap([&] {
    if (!mdl) throw std::invalid_argument("null model");
    std::string hints;
    for (int j = 0; j < mdl->model.meta.n; ++j) {
      const glrm::FeatureKind& k = mdl->model.meta.kinds[j];
      std::string kind;
      switch (k.tag) {
        case glrm::FeatureKind::Tag::Real: kind = "real"; break;
        case glrm::FeatureKind::Tag::Boolean: kind = "boolean"; break;
        case glrm::FeatureKind::Tag::Ordinal: kind = "ordinal:" + std::to_string(k.levels); break;
        case glrm::FeatureKind::Tag::Categorical:
          kind = "categorical:" + std::to_string(k.levels);
          break;
        case glrm::FeatureKind::Tag::Interval: kind = "interval"; break;
      }
      if (j) hints += ",";
      hints += std::to_string(j + 1) + "=" + kind;
    }
    copy_string(hints, buf, buflen);
  });
}

glrm_status glrm_model_objective(const glrm_model* mdl, const glrm_table* t, double* out) {
  return wrap([&] {
    if (!mdl || !t || !out) throw std::invalid_argument("null argument");
    glrm::GlrmProblem prob = glrm::problem_from_meta(mdl->model.meta, t->table);
    *out = glrm::objective(prob, mdl->model.factors);
  });
}

glrm_status glrm_model_impute(const glrm_model* mdl, const glrm_table* t, int keep_observed,
                              glrm_table** out) {
  return wrap([&] {
    if (!mdl || !t || !out) throw std::invalid_argument("null argument");
    glrm::GlrmProblem prob = glrm::problem_from_meta(mdl->model.meta, t->table);
    glrm::DataTable imputed = glrm::impute_table(prob, mdl->model.factors);
    if (keep_observed) {
      for (int i = 0; i < t->table->rows(); ++i)
        for (int j = 0; j < t->table->cols(); ++j)
          if (t->table->observed(i, j)) imputed.set(i, j, t->table->value(i, j));
    }
    auto* o = new glrm_table;
    o->table = std::make_shared<glrm::DataTable>(std::move(imputed));
    o->info = t->info;
    *out = o;
  });
}

glrm_status glrm_model_certify(const glrm_model* mdl, const glrm_table* t, double* spectral_norm,
                               int* verdict) {
  return wrap([&] {
    if (!mdl || !t || !verdict) throw std::invalid_argument("null argument");
    glrm::GlrmProblem prob = glrm::problem_from_meta(mdl->model.meta, t->table);
    glrm::CertifyResult res = glrm::certify_global(prob, mdl->model.factors);
    if (spectral_norm) *spectral_norm = res.spectral_norm;
    if (res.status == glrm::CertifyStatus::Refused) {
      *verdict = -1;
      set_error(res.message);
    } else {
      *verdict = res.certified() ? 1 : 0;
    }
  });
}

void glrm_model_free(glrm_model* mdl) { delete mdl; }

glrm_status glrm_report_rows(const glrm_report* r, long* out) {
  return wrap([&] {
    if (!r || !out) throw std::invalid_argument("null argument");
    *out = static_cast<long>(r->report.objective.size());
  });
}

glrm_status glrm_report_objective(const glrm_report* r, long row, double* out) {
  return wrap([&] {
    if (!r || !out) throw std::invalid_argument("null argument");
    if (row < 0 || row >= static_cast<long>(r->report.objective.size()))
      throw std::invalid_argument("report row out of range");
    *out = r->report.objective[row];
  });
}

glrm_status glrm_report_write(const glrm_report* r, const char* path, int include_time) {
  return wrap([&] {
    if (!r || !path) throw std::invalid_argument("null argument");
    r->report.write_tsv(path, include_time != 0);
  });
}

glrm_status glrm_report_termination(const glrm_report* r, char* buf, size_t buflen) {
  return wrap([&] {
    if (!r) throw std::invalid_argument("null report");
    copy_string(r->report.termination, buf, buflen);
  });
}

void glrm_report_free(glrm_report* r) { delete r; }

glrm_status glrm_cross_validate(glrm_problem* p, const char* ranks, const char* gammas,
                                double fraction, int folds, uint64_t seed,
                                const glrm_fit_opts* opts, const char* report_path, int* best_k) {
  return wrap([&] {
    if (!p) throw std::invalid_argument("null problem");
    glrm::GlrmProblem prob = p->build();
    std::vector<int> ks = parse_ints(ranks, "ranks");
    std::vector<double> gs = parse_doubles(gammas, "gammas");
    glrm::CvResult cv =
        glrm::cross_validate(prob, ks, gs, fraction, folds, seed, to_config(opts));
    if (report_path) glrm::write_cv_tsv(cv, report_path);
    if (best_k) {
      double best = std::numeric_limits<double>::infinity();
      int bk = -1;
      for (const auto& s : cv.summary)
        if (s.mean_test < best) {
          best = s.mean_test;
          bk = s.k;
        }
      *best_k = bk;
    }
  });
}

glrm_status glrm_reg_path(glrm_problem* p, const char* gammas, double holdout_fraction,
                          uint64_t seed, const glrm_fit_opts* opts, const char* report_path) {
  return wrap([&] {
    if (!p || !report_path) throw std::invalid_argument("null argument");
    std::vector<double> gs = parse_doubles(gammas, "gammas");
    glrm::FitConfig cfg = to_config(opts);

    if (holdout_fraction > 0.0) {
      glrm::Holdout split = glrm::split_holdout(*p->table, holdout_fraction, seed);
      auto train = std::make_shared<glrm::DataTable>(std::move(split.train));
      glrm_problem tp = *p;
      tp.table = train;
      glrm::GlrmProblem prob = tp.build();
      glrm::Factors start = make_init(prob.with_gamma(gs.front()), "svd", seed);
      auto path = glrm::reg_path(prob, gs, start, cfg, p->table.get(), &split.heldout);
      glrm::write_path_tsv(path, report_path);
    } else {
      glrm::GlrmProblem prob = p->build();
      glrm::Factors start = make_init(prob.with_gamma(gs.front()), "svd", seed);
      auto path = glrm::reg_path(prob, gs, start, cfg);
      glrm::write_path_tsv(path, report_path);
    }
  });
}

}  // extern "C"
