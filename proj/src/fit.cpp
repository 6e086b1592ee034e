#include "fit.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "util.hpp"

namespace glrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// deterministic per (seed, iteration, index) stream for stochastic sampling
Rng stream_rng(std::uint64_t seed, std::uint64_t iter, std::uint64_t idx) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (iter + 1) + 0xbf58476d1ce4e5b9ull * (idx + 1);
  z ^= z >> 30;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return Rng(z);
}

// sample `count` of the first n indices of `pool` without replacement,
// returned ascending
std::vector<int> sample_without_replacement(const std::vector<int>& pool, int count, Rng& rng) {
  std::vector<int> idx(pool.size());
  for (size_t t = 0; t < pool.size(); ++t) idx[t] = static_cast<int>(t);
  for (int t = 0; t < count; ++t) {
    int r = std::uniform_int_distribution<int>(t, static_cast<int>(pool.size()) - 1)(rng);
    std::swap(idx[t], idx[r]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<int> out(count);
  for (int t = 0; t < count; ++t) out[t] = pool[idx[t]];
  return out;
}

struct PassMode {
  double fraction = 0.0;    // 0 or 1: full gradients
  bool acceptance = true;
  bool sqrt_schedule = false;
  std::uint64_t seed = 0;
};

// One proximal-gradient update of row i. Returns the new step scale and
// reports through `accepted` whether the candidate was applied.
double update_row(const GlrmProblem& p, Factors& f, int i, double alpha, int iter,
                  const FitConfig& cfg, const PassMode& mode, bool* accepted = nullptr) {
  const auto& obs = p.row_obs(i);
  const int keff = p.k_eff();
  Eigen::RowVectorXd xi = f.X.row(i);
  Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(keff);
  Eigen::VectorXd dl;

  const std::vector<int>* cols = &obs;
  std::vector<int> sampled;
  double scale = 1.0;
  if (mode.fraction > 0.0 && mode.fraction < 1.0 && !obs.empty()) {
    int s = std::max(1, static_cast<int>(std::lround(mode.fraction * obs.size())));
    Rng rng = stream_rng(mode.seed, iter, static_cast<std::uint64_t>(i));
    sampled = sample_without_replacement(obs, s, rng);
    cols = &sampled;
    scale = static_cast<double>(obs.size()) / static_cast<double>(s);
  }

  for (int j : *cols) {
    const int dj = p.embed_dim(j), off = p.embed_offset(j);
    auto Yj = f.Y.middleCols(off, dj);
    Eigen::RowVectorXd u = xi * Yj;
    dl.resize(dj);
    loss_grad(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j),
              std::span<double>(dl.data(), dj));
    g.noalias() += (scale * p.loss_weight(j)) * (Yj * dl).transpose();
  }

  double step = alpha / std::max<std::size_t>(obs.size(), 1);
  if (mode.sqrt_schedule) step /= std::sqrt(static_cast<double>(iter));
  Eigen::RowVectorXd z = xi - step * g;
  Eigen::RowVectorXd cand(keff);
  reg_prox(p.effective_row_reg(i), std::span<const double>(z.data(), keff), step,
           std::span<double>(cand.data(), keff));

  if (!mode.acceptance) {
    f.X.row(i) = cand;
    if (accepted) *accepted = true;
    return alpha;
  }
  double before = row_objective(p, f, i, xi);
  double after = row_objective(p, f, i, cand);
  if (after <= before) {
    f.X.row(i) = cand;
    if (accepted) *accepted = true;
    return alpha * cfg.step_increase;
  }
  if (accepted) *accepted = false;
  return alpha * cfg.step_decrease;
}

double update_col(const GlrmProblem& p, Factors& f, int j, double alpha, int iter,
                  const FitConfig& cfg, const PassMode& mode, bool* accepted = nullptr) {
  const auto& obs = p.col_obs(j);
  const int keff = p.k_eff(), k = p.k();
  const int dj = p.embed_dim(j), off = p.embed_offset(j);
  Eigen::MatrixXd yj = f.Y.middleCols(off, dj);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(keff, dj);
  Eigen::VectorXd dl(dj);

  const std::vector<int>* rows = &obs;
  std::vector<int> sampled;
  double scale = 1.0;
  if (mode.fraction > 0.0 && mode.fraction < 1.0 && !obs.empty()) {
    int s = std::max(1, static_cast<int>(std::lround(mode.fraction * obs.size())));
    Rng rng = stream_rng(mode.seed ^ 0x5851f42d4c957f2dull, iter, static_cast<std::uint64_t>(j));
    sampled = sample_without_replacement(obs, s, rng);
    rows = &sampled;
    scale = static_cast<double>(obs.size()) / static_cast<double>(s);
  }

  const double w = p.loss_weight(j);
  for (int i : *rows) {
    Eigen::RowVectorXd u = f.X.row(i) * yj;
    loss_grad(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j),
              std::span<double>(dl.data(), dj));
    G.noalias() += (scale * w) * (f.X.row(i).transpose() * dl.transpose());
  }

  double step = alpha / std::max<std::size_t>(obs.size(), 1);
  if (mode.sqrt_schedule) step /= std::sqrt(static_cast<double>(iter));
  Eigen::MatrixXd z = yj - step * G;

  // prox on the free rows; the offset row is unpenalized and keeps its step
  Eigen::MatrixXd cand = z;
  std::vector<double> flat(static_cast<size_t>(k) * dj), proxed(static_cast<size_t>(k) * dj);
  size_t t = 0;
  for (int c = 0; c < dj; ++c)
    for (int r = 0; r < k; ++r) flat[t++] = z(r, c);
  reg_prox(p.col_reg(j), flat, step, proxed);
  t = 0;
  for (int c = 0; c < dj; ++c)
    for (int r = 0; r < k; ++r) cand(r, c) = proxed[t++];

  if (!mode.acceptance) {
    f.Y.middleCols(off, dj) = cand;
    if (accepted) *accepted = true;
    return alpha;
  }
  double before = col_objective(p, f, j, yj);
  double after = col_objective(p, f, j, cand);
  if (after <= before) {
    f.Y.middleCols(off, dj) = cand;
    if (accepted) *accepted = true;
    return alpha * cfg.step_increase;
  }
  if (accepted) *accepted = false;
  return alpha * cfg.step_decrease;
}

double sampled_objective(const GlrmProblem& p, const Factors& f, int iter, const PassMode& mode) {
  double s = 0.0;
  for (int i = 0; i < p.m(); ++i) {
    const auto& obs = p.row_obs(i);
    if (obs.empty()) continue;
    int cnt = std::max(1, static_cast<int>(std::lround(mode.fraction * obs.size())));
    Rng rng = stream_rng(mode.seed ^ 0xda942042e4dd58b5ull, iter, static_cast<std::uint64_t>(i));
    std::vector<int> cols = sample_without_replacement(obs, cnt, rng);
    double scale = static_cast<double>(obs.size()) / static_cast<double>(cnt);
    Eigen::RowVectorXd xi = f.X.row(i);
    for (int j : cols) {
      const int dj = p.embed_dim(j), off = p.embed_offset(j);
      Eigen::RowVectorXd u = xi * f.Y.middleCols(off, dj);
      s += scale * p.loss_weight(j) *
           loss_value(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j));
    }
    std::span<const double> xs(xi.data(), xi.size());
    s += reg_value(p.effective_row_reg(i), xs);
  }
  for (int j = 0; j < p.n(); ++j) {
    const int dj = p.embed_dim(j), off = p.embed_offset(j);
    std::vector<double> flat;
    for (int c = 0; c < dj; ++c)
      for (int r = 0; r < p.k(); ++r) flat.push_back(f.Y(r, off + c));
    s += reg_value(p.col_reg(j), flat);
  }
  return s;
}

std::pair<Factors, FitReport> run_engine(const GlrmProblem& p, const Factors& init,
                                         const FitConfig& cfg, const PassMode& mode) {
  cfg.validate();
  if (init.X.rows() != p.m() || init.X.cols() != p.k_eff() || init.Y.rows() != p.k_eff() ||
      init.Y.cols() != p.d())
    throw std::invalid_argument("initial factors do not match problem shapes");

  Factors f = init;
  f.sigma2 = p.sigma2();
  FitReport rep;
  rep.row_steps.assign(p.m(), cfg.init_step);
  rep.col_steps.assign(p.n(), cfg.init_step);

  double obj = objective(p, f);
  if (obj == kInf)
    throw std::invalid_argument(
        "objective is infinite at the initial point; indicator regularizers need a feasible "
        "initialization (project it first)");
  bool exact_history = !(mode.fraction > 0.0 && mode.fraction < 1.0);
  rep.objective.push_back(exact_history ? obj : sampled_objective(p, f, 0, mode));

  const int threads = std::max(1, cfg.threads);
  std::vector<std::uint8_t> row_ok(p.m()), col_ok(p.n());
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    double t0 = now_seconds();
    parallel_for(p.m(), threads, [&](int i) {
      bool ok;
      rep.row_steps[i] = update_row(p, f, i, rep.row_steps[i], iter, cfg, mode, &ok);
      row_ok[i] = ok;
    });
    parallel_for(p.n(), threads, [&](int j) {
      bool ok;
      rep.col_steps[j] = update_col(p, f, j, rep.col_steps[j], iter, cfg, mode, &ok);
      col_ok[j] = ok;
    });
    rep.seconds.push_back(now_seconds() - t0);

    if (cfg.iter_callback) cfg.iter_callback(iter, f);

    if (exact_history) {
      double next = objective(p, f);
      rep.objective.push_back(next);
      double decrease = (obj - next) / std::max(std::abs(next), 1.0);
      obj = next;
      // a pass where everything got rejected only shrank step sizes; keep
      // going rather than declaring convergence on an untouched objective
      bool any_accepted =
          std::any_of(row_ok.begin(), row_ok.end(), [](std::uint8_t v) { return v != 0; }) ||
          std::any_of(col_ok.begin(), col_ok.end(), [](std::uint8_t v) { return v != 0; });
      if (mode.acceptance && any_accepted && decrease >= 0 && decrease < cfg.rel_tol) {
        rep.termination = "converged";
        return {std::move(f), std::move(rep)};
      }
    } else {
      rep.objective.push_back(sampled_objective(p, f, iter, mode));
    }
  }
  rep.termination = "max_iters";
  return {std::move(f), std::move(rep)};
}

}  // namespace

void FitConfig::validate() const {
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (!(rel_tol >= 0)) throw std::invalid_argument("rel_tol must be >= 0");
  if (!(step_decrease > 0 && step_decrease < 1))
    throw std::invalid_argument("step decrease factor must be in (0,1)");
  if (!(step_increase > 1)) throw std::invalid_argument("step increase factor must be > 1");
  if (inner_prox_iters < 1) throw std::invalid_argument("inner_prox_iters must be >= 1");
}

void FitReport::write_tsv(const std::string& path, bool include_time) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration\tobjective";
  if (include_time) out << "\tseconds";
  out << "\n";
  char buf[64];
  for (size_t t = 0; t < objective.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.17g", objective[t]);
    out << t << "\t" << buf;
    if (include_time) {
      double sec = t == 0 ? 0.0 : seconds[t - 1];
      std::snprintf(buf, sizeof(buf), "%.6g", sec);
      out << "\t" << buf;
    }
    out << "\n";
  }
}

std::pair<Factors, FitReport> fit(const GlrmProblem& p, const Factors& init, const FitConfig& cfg) {
  PassMode mode;
  mode.acceptance = true;
  return run_engine(p, init, cfg, mode);
}

std::pair<Factors, FitReport> fit_stochastic(const GlrmProblem& p, const Factors& init,
                                             const FitConfig& cfg) {
  if (!(cfg.sample_fraction > 0.0 && cfg.sample_fraction <= 1.0))
    throw std::invalid_argument("sample fraction must be in (0,1]");
  PassMode mode;
  mode.fraction = cfg.sample_fraction;
  mode.acceptance = cfg.stochastic_acceptance;
  mode.sqrt_schedule = !cfg.stochastic_acceptance;
  mode.seed = cfg.seed;
  return run_engine(p, init, cfg, mode);
}

Eigen::RowVectorXd solve_row(const GlrmProblem& p, const Eigen::MatrixXd& Y, int i,
                             const Eigen::RowVectorXd& x0, const FitConfig& cfg) {
  cfg.validate();
  if (i < 0 || i >= p.m()) throw std::out_of_range("row index out of range");
  if (Y.rows() != p.k_eff() || Y.cols() != p.d() || x0.size() != p.k_eff())
    throw std::invalid_argument("shapes do not match problem");
  const int keff = p.k_eff();

  if (p.row_obs(i).empty()) {
    // nothing observed: the row solves argmin r(x), i.e. the prox at 0 with a
    // large step
    Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(keff);
    Eigen::RowVectorXd out(keff);
    reg_prox(p.effective_row_reg(i), std::span<const double>(zero.data(), keff), 1e12,
             std::span<double>(out.data(), keff));
    return out;
  }

  Factors f = p.zero_factors();
  f.Y = Y;
  f.X.row(i) = x0;
  double alpha = cfg.init_step;
  double obj = row_objective(p, f, i, Eigen::RowVectorXd(f.X.row(i)));
  if (obj == kInf)
    throw std::invalid_argument("row objective infinite at x0; start from a feasible point");
  PassMode mode;
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    bool accepted;
    alpha = update_row(p, f, i, alpha, iter, cfg, mode, &accepted);
    double next = row_objective(p, f, i, Eigen::RowVectorXd(f.X.row(i)));
    double decrease = (obj - next) / std::max(std::abs(next), 1.0);
    obj = next;
    if (accepted && decrease < cfg.rel_tol && iter > 1) break;
  }
  return f.X.row(i);
}

// ---------------------------------------------------------------------------
// exact quadratic engine

namespace {

struct ExactSide {
  bool cacheable = false;               // shared Gram factorization valid
  bool diagonal = false;                // shared Gram is exactly diagonal (one-hot factors)
  Eigen::VectorXd diag;
  Eigen::LLT<Eigen::MatrixXd> cache;    // of G + reg diagonal
};

bool exactly_diagonal(const Eigen::MatrixXd& G) {
  for (int r = 0; r < G.rows(); ++r)
    for (int c = 0; c < G.cols(); ++c)
      if (r != c && G(r, c) != 0.0) return false;
  for (int r = 0; r < G.rows(); ++r)
    if (G(r, r) == 0.0) return false;
  return true;
}

double quad_gamma(const RegSpec& r) {
  if (r.kind == RegKind::Zero) return 0.0;
  if (r.kind == RegKind::QuadraticReg) return r.gamma;
  throw std::logic_error("not a quadratic-like regularizer");
}

bool closed_form_reg(const RegSpec& r) {
  return r.kind == RegKind::Zero || r.kind == RegKind::QuadraticReg;
}

Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(Eigen::MatrixXd M) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    warn("singular normal equations; adding 1e-10 ridge jitter");
    M.diagonal().array() += 1e-10;
    llt.compute(M);
    if (llt.info() != Eigen::Success) throw std::runtime_error("Cholesky failed even with jitter");
  }
  return llt;
}

// Solve min_x sum_j w (atil_ij - x y_j)^2 + gamma ||x||^2 over the free
// coordinates; with an offset the targets already subtract the offset row.
void exact_row_solve(const GlrmProblem& p, Factors& f, int i, const ExactSide& side,
                     const Eigen::MatrixXd& Yfree, const Eigen::RowVectorXd& yoff,
                     double& alpha, const FitConfig& cfg) {
  const int k = p.k();
  const auto& obs = p.row_obs(i);
  const RegSpec& reg = p.row_reg(i);

  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(k);
  auto target = [&](int j) {
    double a = p.table().value(i, j).x;
    return p.with_offset() ? a - yoff[j] : a;
  };

  if (closed_form_reg(reg)) {
    if (side.cacheable) {
      for (int j : obs) b.noalias() += target(j) * Yfree.col(j).transpose();
      if (side.diagonal) {
        for (int r = 0; r < k; ++r) f.X(i, r) = b[r] / side.diag[r];
      } else {
        f.X.row(i).head(k) = side.cache.solve(b.transpose()).transpose();
      }
    } else {
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
      for (int j : obs) {
        double w = p.loss_weight(j);
        G.noalias() += w * (Yfree.col(j) * Yfree.col(j).transpose());
        b.noalias() += w * target(j) * Yfree.col(j).transpose();
      }
      G.diagonal().array() += quad_gamma(reg);
      f.X.row(i).head(k) = factor_with_jitter(G).solve(b.transpose()).transpose();
    }
    return;
  }

  if (reg.kind == RegKind::UnitOneSparseInd || reg.kind == RegKind::OneSparseInd ||
      reg.kind == RegKind::OneSparseNonnegInd) {
    // exactly solvable by scanning the k candidate supports
    int best = 0;
    double bestCost = kInf, bestCoef = 1.0;
    for (int l = 0; l < k; ++l) {
      double coef = 1.0;
      if (reg.kind != RegKind::UnitOneSparseInd) {
        double num = 0.0, den = 0.0;
        for (int j : obs) {
          double w = p.loss_weight(j);
          num += w * target(j) * Yfree(l, j);
          den += w * Yfree(l, j) * Yfree(l, j);
        }
        coef = den > 0.0 ? num / den : 0.0;
        if (reg.kind == RegKind::OneSparseNonnegInd) coef = std::max(coef, 0.0);
      }
      double cost = 0.0;
      for (int j : obs) {
        double r = target(j) - coef * Yfree(l, j);
        cost += p.loss_weight(j) * r * r;
      }
      if (cost < bestCost) { bestCost = cost; best = l; bestCoef = coef; }
    }
    f.X.row(i).head(k).setZero();
    f.X(i, best) = bestCoef;
    return;
  }

  // general regularizer: prox-prox (one ADMM-like inner iteration per repeat)
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
  for (int j : obs) {
    double w = p.loss_weight(j);
    G.noalias() += w * (Yfree.col(j) * Yfree.col(j).transpose());
    b.noalias() += w * target(j) * Yfree.col(j).transpose();
  }
  Eigen::RowVectorXd x = f.X.row(i).head(k);
  double before = row_objective(p, f, i, Eigen::RowVectorXd(f.X.row(i)));
  for (int t = 0; t < cfg.inner_prox_iters; ++t) {
    double rho = 1.0 / (2.0 * alpha);
    Eigen::MatrixXd M = G;
    M.diagonal().array() += rho;
    Eigen::RowVectorXd v = factor_with_jitter(M).solve((b + rho * x).transpose()).transpose();
    Eigen::RowVectorXd px(k);
    reg_prox(reg, std::span<const double>(v.data(), k), alpha, std::span<double>(px.data(), k));
    x = px;
  }
  Eigen::RowVectorXd cand = f.X.row(i);
  cand.head(k) = x;
  double after = row_objective(p, f, i, cand);
  if (after <= before) {
    f.X.row(i) = cand;
    alpha *= cfg.step_increase;
  } else {
    alpha *= cfg.step_decrease;
  }
}

void exact_col_solve(const GlrmProblem& p, Factors& f, int j, const ExactSide& side,
                     double& alpha, const FitConfig& cfg) {
  const int k = p.k(), keff = p.k_eff();
  const auto& obs = p.col_obs(j);
  const RegSpec& reg = p.col_reg(j);

  if (closed_form_reg(reg)) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(keff);
    if (side.cacheable) {
      for (int i : obs) b.noalias() += p.table().value(i, j).x * f.X.row(i).transpose();
      if (side.diagonal) {
        // one-hot X makes G diagonal; direct division keeps centroids exact
        for (int r = 0; r < keff; ++r) f.Y(r, j) = b[r] / side.diag[r];
      } else {
        f.Y.col(j) = side.cache.solve(b);
      }
    } else {
      const double w = p.loss_weight(j);
      Eigen::MatrixXd G = Eigen::MatrixXd::Zero(keff, keff);
      for (int i : obs) {
        G.noalias() += w * (f.X.row(i).transpose() * f.X.row(i));
        b.noalias() += w * p.table().value(i, j).x * f.X.row(i).transpose();
      }
      for (int r = 0; r < k; ++r) G(r, r) += quad_gamma(reg);
      if (exactly_diagonal(G)) {
        for (int r = 0; r < keff; ++r) f.Y(r, j) = b[r] / G(r, r);
      } else {
        f.Y.col(j) = factor_with_jitter(G).solve(b);
      }
    }
    return;
  }

  // general column regularizer via prox-prox on the free coordinates
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(keff, keff);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(keff);
  for (int i : obs) {
    double w = p.loss_weight(j);
    G.noalias() += w * (f.X.row(i).transpose() * f.X.row(i));
    b.noalias() += w * p.table().value(i, j).x * f.X.row(i).transpose();
  }
  Eigen::MatrixXd yj = f.Y.col(j);
  double before = col_objective(p, f, j, yj);
  Eigen::VectorXd y = f.Y.col(j);
  for (int t = 0; t < cfg.inner_prox_iters; ++t) {
    double rho = 1.0 / (2.0 * alpha);
    Eigen::MatrixXd M = G;
    M.diagonal().array() += rho;
    Eigen::VectorXd v = factor_with_jitter(M).solve(b + rho * y);
    std::vector<double> flat(v.data(), v.data() + k), proxed(k);
    reg_prox(reg, flat, alpha, proxed);
    for (int r = 0; r < k; ++r) y[r] = proxed[r];
    if (keff > k) y[k] = v[k];
  }
  Eigen::MatrixXd cand = y;
  double after = col_objective(p, f, j, cand);
  if (after <= before) {
    f.Y.col(j) = y;
    alpha *= cfg.step_increase;
  } else {
    alpha *= cfg.step_decrease;
  }
}

}  // namespace

std::pair<Factors, FitReport> fit_exact_quadratic(const GlrmProblem& p, const Factors& init,
                                                  const FitConfig& cfg) {
  cfg.validate();
  for (int j = 0; j < p.n(); ++j)
    if (p.loss(j).kind != LossKind::Quadratic)
      throw std::invalid_argument("fit_exact_quadratic requires quadratic losses everywhere");
  if (init.X.rows() != p.m() || init.X.cols() != p.k_eff() || init.Y.rows() != p.k_eff() ||
      init.Y.cols() != p.d())
    throw std::invalid_argument("initial factors do not match problem shapes");

  const int k = p.k();
  const bool fully_observed = p.n_obs() == static_cast<long>(p.m()) * p.n();
  Factors f = init;
  f.sigma2 = p.sigma2();

  FitReport rep;
  rep.row_steps.assign(p.m(), cfg.init_step);
  rep.col_steps.assign(p.n(), cfg.init_step);
  double obj = objective(p, f);
  if (obj == kInf)
    throw std::invalid_argument(
        "objective is infinite at the initial point; indicator regularizers need a feasible "
        "initialization (project it first)");
  rep.objective.push_back(obj);

  const int threads = std::max(1, cfg.threads);
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    double t0 = now_seconds();

    // X pass
    {
      Eigen::MatrixXd Yfree = f.Y.topRows(k);
      Eigen::RowVectorXd yoff =
          p.with_offset() ? Eigen::RowVectorXd(f.Y.row(k)) : Eigen::RowVectorXd::Zero(p.n());
      ExactSide side;
      if (fully_observed && !p.with_scaling() && closed_form_reg(p.row_reg(0))) {
        Eigen::MatrixXd G = Yfree * Yfree.transpose();
        G.diagonal().array() += quad_gamma(p.row_reg(0));
        side.cacheable = true;
        if (exactly_diagonal(G)) {
          side.diagonal = true;
          side.diag = G.diagonal();
        } else {
          side.cache = factor_with_jitter(std::move(G));
        }
      }
      parallel_for(p.m(), threads, [&](int i) {
        exact_row_solve(p, f, i, side, Yfree, yoff, rep.row_steps[i], cfg);
      });
      if (p.with_offset()) f.X.col(k).setOnes();
    }

    // Y pass
    {
      ExactSide side;
      if (fully_observed && !p.with_scaling() && closed_form_reg(p.col_reg(0))) {
        bool uniform = true;
        for (int j = 1; j < p.n(); ++j)
          uniform = uniform && closed_form_reg(p.col_reg(j)) &&
                    quad_gamma(p.col_reg(j)) == quad_gamma(p.col_reg(0));
        if (uniform) {
          Eigen::MatrixXd G = f.X.transpose() * f.X;
          for (int r = 0; r < k; ++r) G(r, r) += quad_gamma(p.col_reg(0));
          side.cacheable = true;
          if (exactly_diagonal(G)) {
            side.diagonal = true;
            side.diag = G.diagonal();
          } else {
            side.cache = factor_with_jitter(std::move(G));
          }
        }
      }
      parallel_for(p.n(), threads, [&](int j) {
        exact_col_solve(p, f, j, side, rep.col_steps[j], cfg);
      });
    }

    rep.seconds.push_back(now_seconds() - t0);
    if (cfg.iter_callback) cfg.iter_callback(iter, f);

    double next = objective(p, f);
    rep.objective.push_back(next);
    double decrease = (obj - next) / std::max(std::abs(next), 1.0);
    obj = next;
    if (decrease >= 0 && decrease < cfg.rel_tol) {
      rep.termination = "converged";
      return {std::move(f), std::move(rep)};
    }
  }
  rep.termination = "max_iters";
  return {std::move(f), std::move(rep)};
}

}  // namespace glrm
