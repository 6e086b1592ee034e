#include "select.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include "init.hpp"
#include "util.hpp"

namespace glrm {

namespace {

double scaled_entry_loss(const GlrmProblem& p, const Factors& f, const DataTable& truth, int i,
                         int j) {
  const int dj = p.embed_dim(j), off = p.embed_offset(j);
  Eigen::RowVectorXd u = f.X.row(i) * f.Y.middleCols(off, dj);
  return p.loss_weight(j) *
         loss_value(p.loss(j), std::span<const double>(u.data(), dj), truth.value(i, j));
}

double normalized_error(const GlrmProblem& p, const Factors& f, const DataTable& truth,
                        const std::vector<std::pair<int, int>>& entries) {
  if (entries.empty()) return 0.0;
  double s = 0.0;
  for (auto [i, j] : entries) s += scaled_entry_loss(p, f, truth, i, j);
  return s / static_cast<double>(entries.size());
}

bool level_kind(const FeatureKind& k) {
  return k.tag == FeatureKind::Tag::Boolean || k.tag == FeatureKind::Tag::Ordinal ||
         k.tag == FeatureKind::Tag::Categorical;
}

}  // namespace

EvalMetrics metrics(const GlrmProblem& p, const Factors& f, const DataTable& truth,
                    const std::vector<std::pair<int, int>>& entries, int top_t) {
  EvalMetrics out;
  out.count = static_cast<long>(entries.size());
  double loss_sum = 0.0, rms_sum = 0.0, imp_sum = 0.0, mse_sum = 0.0;
  long rms_cnt = 0, imp_cnt = 0, mse_cnt = 0, mis_cnt = 0, lvl_cnt = 0;
  Eigen::RowVectorXd u;

  struct Ranked { double score; double truth; };
  std::vector<Ranked> ranked;
  bool has_bool = false;
  for (int j = 0; j < p.n(); ++j) has_bool = has_bool || truth.kind(j).tag == FeatureKind::Tag::Boolean;
  if (top_t > 0 && !has_bool)
    throw std::invalid_argument("precision_at needs at least one Boolean column");

  for (auto [i, j] : entries) {
    const int dj = p.embed_dim(j), off = p.embed_offset(j);
    u = f.X.row(i) * f.Y.middleCols(off, dj);
    FeatureValue a = truth.value(i, j);
    loss_sum += p.loss_weight(j) *
                loss_value(p.loss(j), std::span<const double>(u.data(), dj), a);

    const FeatureKind& kind = truth.kind(j);
    if (kind.tag != FeatureKind::Tag::Interval) {
      FeatureValue imp = loss_impute_kind(p.loss(j), std::span<const double>(u.data(), dj), kind);
      double ei = a.x - imp.x;
      imp_sum += ei * ei;
      ++imp_cnt;
      if (level_kind(kind)) {
        ++lvl_cnt;
        if (imp.x != a.x) ++mis_cnt;
      }
    }
    if (dj == 1 && kind.tag != FeatureKind::Tag::Interval) {
      double e = a.x - u[0];
      rms_sum += e * e;
      ++rms_cnt;
      if (kind.tag == FeatureKind::Tag::Real) {
        mse_sum += e * e;
        ++mse_cnt;
      }
    }
    if (top_t > 0 && kind.tag == FeatureKind::Tag::Boolean) ranked.push_back({u[0], a.x});
  }

  out.normalized_loss = entries.empty() ? 0.0 : loss_sum / static_cast<double>(entries.size());
  if (rms_cnt > 0) out.rms = std::sqrt(rms_sum / static_cast<double>(rms_cnt));
  if (imp_cnt > 0) out.rms_imputed = std::sqrt(imp_sum / static_cast<double>(imp_cnt));
  if (mse_cnt > 0) out.mse_real = mse_sum / static_cast<double>(mse_cnt);
  if (lvl_cnt > 0) out.misclassification = static_cast<double>(mis_cnt) / static_cast<double>(lvl_cnt);

  if (top_t > 0) {
    if (ranked.empty()) throw std::invalid_argument("precision_at found no Boolean entries to rank");
    long pos = 0;
    for (const auto& r : ranked) pos += r.truth > 0;
    out.positive_rate = static_cast<double>(pos) / static_cast<double>(ranked.size());
    std::partial_sort(ranked.begin(),
                      ranked.begin() + std::min<std::size_t>(top_t, ranked.size()), ranked.end(),
                      [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
    long take = std::min<long>(top_t, static_cast<long>(ranked.size()));
    long hit = 0;
    for (long t = 0; t < take; ++t) hit += ranked[t].truth > 0;
    out.precision_at = static_cast<double>(hit) / static_cast<double>(take);
  }
  return out;
}

namespace {

// permute each column's observed values among its observed slots: same
// marginals and mask, no low rank structure left
std::shared_ptr<DataTable> permute_entries(const DataTable& t, std::uint64_t seed) {
  auto out = std::make_shared<DataTable>(t);
  Rng rng = make_rng(seed);
  for (int j = 0; j < t.cols(); ++j) {
    std::vector<int> rows;
    for (int i = 0; i < t.rows(); ++i)
      if (t.observed(i, j)) rows.push_back(i);
    std::vector<int> perm = rows;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (size_t r = 0; r < rows.size(); ++r) out->set(rows[r], j, t.value(perm[r], j));
  }
  return out;
}

}  // namespace

std::vector<PathEntry> reg_path(const GlrmProblem& p, const std::vector<double>& gammas,
                                const Factors& init, const FitConfig& cfg, const DataTable* truth,
                                const std::vector<std::pair<int, int>>* heldout,
                                const PathOptions& opts) {
  if (gammas.empty()) throw std::invalid_argument("reg_path needs at least one gamma");
  for (size_t t = 1; t < gammas.size(); ++t)
    if (!(gammas[t] < gammas[t - 1]))
      throw std::invalid_argument("gammas must be strictly descending");

  std::vector<std::pair<int, int>> train = p.table().omega();

  std::vector<PathEntry> out;
  Factors warm = init;
  Factors noise_warm = init;
  std::shared_ptr<DataTable> noise_table;
  if (opts.noise_baseline) noise_table = permute_entries(p.table(), opts.noise_seed);

  double prev_obj = std::nan("");
  for (double gamma : gammas) {
    GlrmProblem at = p.with_gamma(gamma);
    auto [factors, rep] = fit(at, warm, cfg);
    PathEntry e;
    e.gamma = gamma;
    e.objective = rep.final_objective();
    e.iterations = rep.iterations();
    e.train_error = normalized_error(at, factors, at.table(), train);
    if (truth && heldout) e.test_error = normalized_error(at, factors, *truth, *heldout);
    if (!std::isnan(prev_obj)) e.objective_delta = prev_obj - e.objective;
    prev_obj = e.objective;
    if (opts.noise_baseline) {
      GlrmProblem noisy = at.with_table(noise_table);
      auto [nf, nrep] = fit(noisy, noise_warm, cfg);
      e.noise_objective = nrep.final_objective();
      noise_warm = std::move(nf);
    }
    warm = factors;
    e.factors = std::move(factors);
    out.push_back(std::move(e));
  }
  return out;
}

int CvResult::best_k(double gamma) const {
  int best = -1;
  double bestErr = std::numeric_limits<double>::infinity();
  for (const auto& s : summary)
    if (s.gamma == gamma && s.mean_test < bestErr) {
      bestErr = s.mean_test;
      best = s.k;
    }
  return best;
}

namespace {

// hold out whole rows or columns instead of entries
Holdout split_lines(const DataTable& t, double fraction, std::uint64_t seed, bool rows) {
  const int count = rows ? t.rows() : t.cols();
  long h = std::lround(fraction * count);
  if (h == 0 || h == count) throw std::invalid_argument("degenerate row/column split");
  std::vector<int> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  Holdout out{t, {}};
  for (long s = 0; s < h; ++s) {
    int line = idx[s];
    if (rows) {
      for (int j = 0; j < t.cols(); ++j)
        if (t.observed(line, j)) {
          out.heldout.emplace_back(line, j);
          out.train.clear(line, j);
        }
    } else {
      for (int i = 0; i < t.rows(); ++i)
        if (t.observed(i, line)) {
          out.heldout.emplace_back(i, line);
          out.train.clear(i, line);
        }
    }
  }
  std::sort(out.heldout.begin(), out.heldout.end());
  if (out.train.n_observed() == 0) throw std::invalid_argument("split removed every observation");
  return out;
}

}  // namespace

CvResult cross_validate(const GlrmProblem& tmpl, const std::vector<int>& ks,
                        const std::vector<double>& gammas, double fraction, int folds,
                        std::uint64_t seed, const FitConfig& cfg, const std::string& init_kind,
                        CvResample resample) {
  if (ks.empty() || gammas.empty()) throw std::invalid_argument("need at least one k and one gamma");
  if (folds < 1) throw std::invalid_argument("folds must be >= 1");
  CvResult out;
  std::map<std::pair<int, double>, std::pair<double, double>> acc;

  for (int fold = 0; fold < folds; ++fold) {
    std::uint64_t fold_seed = seed + static_cast<std::uint64_t>(fold);
    Holdout split = resample == CvResample::Entries
                        ? split_holdout(tmpl.table(), fraction, fold_seed)
                        : split_lines(tmpl.table(), fraction, fold_seed,
                                      resample == CvResample::Rows);
    auto train_table = std::make_shared<DataTable>(std::move(split.train));
    GlrmProblem base = tmpl.with_table(train_table);
    std::vector<std::pair<int, int>> train_omega = train_table->omega();

    for (int k : ks) {
      GlrmProblem at_k = base.with_rank(k);
      for (double gamma : gammas) {
        GlrmProblem prob = at_k.with_gamma(gamma);
        Factors start;
        if (init_kind == "random") {
          start = init_random(prob, seed + 17 * fold + 131 * k);
        } else {
          try {
            start = init_svd(prob);
          } catch (const std::exception& e) {
            warn(std::string("svd init failed (") + e.what() + "); falling back to random");
            start = init_random(prob, seed + 17 * fold + 131 * k);
          }
        }
        auto [factors, rep] = fit(prob, start, cfg);
        CvCell cell;
        cell.k = k;
        cell.gamma = gamma;
        cell.fold = fold;
        cell.train_error = normalized_error(prob, factors, *train_table, train_omega);
        cell.test_error = normalized_error(prob, factors, tmpl.table(), split.heldout);
        out.cells.push_back(cell);
        auto& a = acc[{k, gamma}];
        a.first += cell.train_error;
        a.second += cell.test_error;
      }
    }
  }
  for (const auto& [key, sums] : acc) {
    CvSummary s;
    s.k = key.first;
    s.gamma = key.second;
    s.mean_train = sums.first / folds;
    s.mean_test = sums.second / folds;
    out.summary.push_back(s);
  }
  return out;
}

void write_cv_tsv(const CvResult& cv, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "k\tgamma\tfold\ttrain_error\ttest_error\n";
  char buf[160];
  for (const auto& c : cv.cells) {
    std::snprintf(buf, sizeof(buf), "%d\t%.12g\t%d\t%.12g\t%.12g\n", c.k, c.gamma, c.fold,
                  c.train_error, c.test_error);
    out << buf;
  }
  out << "# summary: k\tgamma\tmean_train\tmean_test\n";
  for (const auto& s : cv.summary) {
    std::snprintf(buf, sizeof(buf), "summary\t%d\t%.12g\t%.12g\t%.12g\n", s.k, s.gamma,
                  s.mean_train, s.mean_test);
    out << buf;
  }
}

void write_path_tsv(const std::vector<PathEntry>& path, const std::string& pathname) {
  std::ofstream out(pathname);
  if (!out) throw std::runtime_error("cannot write " + pathname);
  out << "gamma\tobjective\tobjective_delta\tnoise_objective\ttrain_error\ttest_error\titerations\n";
  char buf[240];
  for (const auto& e : path) {
    std::snprintf(buf, sizeof(buf), "%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%d\n", e.gamma,
                  e.objective, e.objective_delta, e.noise_objective, e.train_error, e.test_error,
                  e.iterations);
    out << buf;
  }
}

}  // namespace glrm
