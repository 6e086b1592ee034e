#include "loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "util.hpp"

namespace glrm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMuMax = 1e3;     // box for unbounded column-stat minimizers
constexpr double kVarFloor = 1e-12;

double pos(double x) { return x > 0.0 ? x : 0.0; }

// log(1 + exp(x)) without overflow
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

[[noreturn]] void domain_fail(const LossSpec& spec, const std::string& what) {
  throw std::domain_error(spec.name() + " loss: " + what);
}

void require_positive_u(const LossSpec& spec, double u) {
  if (!(u > 0.0)) domain_fail(spec, "u must be positive");
}

int require_level(const LossSpec& spec, const FeatureValue& a) {
  if (a.tag != FeatureValue::Tag::Number) domain_fail(spec, "expected a level");
  double r = std::round(a.x);
  if (r != a.x || r < 1 || r > spec.levels) domain_fail(spec, "level outside 1..d");
  return static_cast<int>(r);
}

void require_perm(const LossSpec& spec, const FeatureValue& a) {
  if (a.tag != FeatureValue::Tag::Order) domain_fail(spec, "expected a permutation");
  if (static_cast<int>(a.order.size()) != spec.levels) domain_fail(spec, "permutation length != d");
  std::vector<char> seen(spec.levels, 0);
  for (int v : a.order) {
    if (v < 1 || v > spec.levels || seen[v - 1]) domain_fail(spec, "not a permutation of 1..d");
    seen[v - 1] = 1;
  }
}

}  // namespace

LossSpec LossSpec::quantile(double a) {
  if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("quantile alpha must be in (0,1)");
  LossSpec s{LossKind::Quantile};
  s.alpha = a;
  return s;
}

LossSpec LossSpec::beta_divergence(double b) {
  if (b == 0.0 || b == 1.0) throw std::invalid_argument("beta divergence undefined at beta in {0,1}");
  LossSpec s{LossKind::BetaDivergence};
  s.beta = b;
  return s;
}

namespace {
LossSpec with_levels(LossKind k, int d, int min_d = 2) {
  if (d < min_d) throw std::invalid_argument("loss needs at least " + std::to_string(min_d) + " levels");
  LossSpec s{k};
  s.levels = d;
  return s;
}
}  // namespace

LossSpec LossSpec::ordinal_hinge(int d) { return with_levels(LossKind::OrdinalHinge, d); }
LossSpec LossSpec::one_vs_all(int d) { return with_levels(LossKind::OneVsAll, d); }
LossSpec LossSpec::crammer_singer(int d) { return with_levels(LossKind::CrammerSinger, d); }
LossSpec LossSpec::multi_ordinal(int d) { return with_levels(LossKind::MultiOrdinal, d); }
LossSpec LossSpec::permutation(int d) { return with_levels(LossKind::Permutation, d); }
LossSpec LossSpec::ranking(int d) { return with_levels(LossKind::RankingFull, d); }
LossSpec LossSpec::ranking_pairs(int d) { return with_levels(LossKind::RankingPairwise, d); }

int LossSpec::embed_dim() const {
  switch (kind) {
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger:
    case LossKind::Permutation:
    case LossKind::RankingFull:
    case LossKind::RankingPairwise:
      return levels;
    case LossKind::MultiOrdinal:
      return levels - 1;
    default:
      return 1;
  }
}

bool LossSpec::convex_in_u() const {
  switch (kind) {
    case LossKind::Logarithmic:
    case LossKind::ItakuraSaito:
      return false;
    case LossKind::BetaDivergence:
      return beta >= 1.0 && beta <= 2.0;
    default:
      return true;
  }
}

bool LossSpec::accepts(const FeatureKind& k) const {
  switch (kind) {
    case LossKind::Quadratic:
    case LossKind::L1:
    case LossKind::Huber:
    case LossKind::Quantile:
      // any scalar-encoded kind
      return k.tag != FeatureKind::Tag::Interval;
    case LossKind::Fractional:
    case LossKind::Logarithmic:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
    case LossKind::PoissonExp:
      return k.tag == FeatureKind::Tag::Real || k.tag == FeatureKind::Tag::Ordinal;
    case LossKind::Hinge:
    case LossKind::Logistic:
      return k.tag == FeatureKind::Tag::Boolean;
    case LossKind::OrdinalHinge:
    case LossKind::MultiOrdinal:
      return k.tag == FeatureKind::Tag::Ordinal && k.levels == levels;
    case LossKind::Interval:
      return k.tag == FeatureKind::Tag::Interval;
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger:
      return k.tag == FeatureKind::Tag::Categorical && k.levels == levels;
    case LossKind::Permutation:
    case LossKind::RankingFull:
    case LossKind::RankingPairwise:
      return false;  // tables never hold permutations
  }
  return false;
}

std::string LossSpec::name() const {
  switch (kind) {
    case LossKind::Quadratic: return "quadratic";
    case LossKind::L1: return "l1";
    case LossKind::Huber: return "huber";
    case LossKind::Quantile: return "quantile:" + std::to_string(alpha);
    case LossKind::Fractional: return "fractional";
    case LossKind::Logarithmic: return "log";
    case LossKind::PoissonExp: return "poisson";
    case LossKind::KLDivergence: return "kl";
    case LossKind::ItakuraSaito: return "is";
    case LossKind::BetaDivergence: return "beta:" + std::to_string(beta);
    case LossKind::Hinge: return "hinge";
    case LossKind::Logistic: return "logistic";
    case LossKind::OrdinalHinge: return "ordinal_hinge:" + std::to_string(levels);
    case LossKind::Interval: return "interval";
    case LossKind::OneVsAll: return "onevsall:" + std::to_string(levels);
    case LossKind::CrammerSinger: return "crammer_singer:" + std::to_string(levels);
    case LossKind::MultiOrdinal: return "multi_ordinal:" + std::to_string(levels);
    case LossKind::Permutation: return "permutation:" + std::to_string(levels);
    case LossKind::RankingFull: return "ranking:" + std::to_string(levels);
    case LossKind::RankingPairwise: return "ranking_pairs:" + std::to_string(levels);
  }
  return "?";
}

LossSpec LossSpec::parse(const std::string& full, const FeatureKind* kind) {
  std::string base = full;
  std::string param;
  if (auto pos = full.find(':'); pos != std::string::npos) {
    base = full.substr(0, pos);
    param = full.substr(pos + 1);
  }
  auto num = [&](double dflt) { return param.empty() ? dflt : std::stod(param); };
  auto lev = [&]() -> int {
    if (!param.empty()) return std::stoi(param);
    if (kind && kind->levels >= 2) return kind->levels;
    throw std::invalid_argument("loss '" + base + "' needs a level count, e.g. " + base + ":4");
  };
  if (base == "quadratic") return quadratic();
  if (base == "l1") return l1();
  if (base == "huber") return huber();
  if (base == "quantile") return quantile(num(0.5));
  if (base == "fractional") return fractional();
  if (base == "log") return logarithmic();
  if (base == "poisson") return poisson();
  if (base == "kl") return kl();
  if (base == "is") return itakura_saito();
  if (base == "beta") return beta_divergence(num(1.5));
  if (base == "hinge") return hinge();
  if (base == "logistic") return logistic();
  if (base == "ordinal_hinge") return ordinal_hinge(lev());
  if (base == "interval") return interval();
  if (base == "onevsall") return one_vs_all(lev());
  if (base == "crammer_singer") return crammer_singer(lev());
  if (base == "multi_ordinal") return multi_ordinal(lev());
  if (base == "permutation") return permutation(lev());
  if (base == "ranking") return ranking(lev());
  if (base == "ranking_pairs") return ranking_pairs(lev());
  throw std::invalid_argument("unknown loss '" + full + "'");
}

void check_admissible(const LossSpec& spec, const FeatureValue& a) {
  switch (spec.kind) {
    case LossKind::Quadratic:
    case LossKind::L1:
    case LossKind::Huber:
    case LossKind::Quantile:
      if (a.tag != FeatureValue::Tag::Number || !std::isfinite(a.x))
        domain_fail(spec, "expected a finite number");
      break;
    case LossKind::Fractional:
    case LossKind::Logarithmic:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
      if (a.tag != FeatureValue::Tag::Number || !(a.x > 0.0))
        domain_fail(spec, "requires a > 0");
      break;
    case LossKind::PoissonExp:
      if (a.tag != FeatureValue::Tag::Number || a.x < 0.0 || std::round(a.x) != a.x)
        domain_fail(spec, "requires a nonnegative integer count");
      break;
    case LossKind::Hinge:
    case LossKind::Logistic:
      if (a.tag != FeatureValue::Tag::Number || (a.x != -1.0 && a.x != 1.0))
        domain_fail(spec, "requires a in {-1,+1}");
      break;
    case LossKind::OrdinalHinge:
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger:
    case LossKind::MultiOrdinal:
      (void)require_level(spec, a);
      break;
    case LossKind::Interval:
      if (a.tag != FeatureValue::Tag::Interval || !(a.x <= a.hi))
        domain_fail(spec, "expected an interval with lo <= hi");
      break;
    case LossKind::Permutation:
    case LossKind::RankingFull:
      require_perm(spec, a);
      break;
    case LossKind::RankingPairwise:
      if (a.tag != FeatureValue::Tag::Pairs) domain_fail(spec, "expected pairwise comparisons");
      for (auto [i, j] : a.pairs)
        if (i < 1 || i > spec.levels || j < 1 || j > spec.levels || i == j)
          domain_fail(spec, "comparison indices outside 1..d");
      break;
  }
}

namespace {
void require_dim(const LossSpec& spec, std::span<const double> u) {
  if (static_cast<int>(u.size()) != spec.embed_dim())
    throw std::invalid_argument(spec.name() + " loss: u has length " + std::to_string(u.size()) +
                                ", embedding dimension is " + std::to_string(spec.embed_dim()));
}
}  // namespace

double loss_value(const LossSpec& spec, std::span<const double> u, const FeatureValue& a) {
  require_dim(spec, u);
  check_admissible(spec, a);
  switch (spec.kind) {
    case LossKind::Quadratic: {
      double e = u[0] - a.x;
      return e * e;
    }
    case LossKind::L1:
      return std::abs(u[0] - a.x);
    case LossKind::Huber: {
      double x = std::abs(u[0] - a.x);
      return x <= 1.0 ? 0.5 * x * x : x - 0.5;
    }
    case LossKind::Quantile:
      return spec.alpha * pos(a.x - u[0]) + (1.0 - spec.alpha) * pos(u[0] - a.x);
    case LossKind::Fractional:
      require_positive_u(spec, u[0]);
      return std::max((a.x - u[0]) / u[0], (u[0] - a.x) / a.x);
    case LossKind::Logarithmic: {
      require_positive_u(spec, u[0]);
      double l = std::log(u[0] / a.x);
      return l * l;
    }
    case LossKind::PoissonExp: {
      double aloga = a.x > 0.0 ? a.x * std::log(a.x) : 0.0;
      return std::exp(u[0]) - a.x * u[0] + aloga - a.x;
    }
    case LossKind::KLDivergence:
      require_positive_u(spec, u[0]);
      return a.x * std::log(a.x / u[0]) - a.x + u[0];
    case LossKind::ItakuraSaito:
      // standard form log(u/a) + a/u - 1: nonnegative and the beta -> 0 limit
      require_positive_u(spec, u[0]);
      return std::log(u[0] / a.x) + a.x / u[0] - 1.0;
    case LossKind::BetaDivergence: {
      require_positive_u(spec, u[0]);
      double b = spec.beta;
      return std::pow(a.x, b) / (b * (b - 1.0)) + std::pow(u[0], b) / b -
             a.x * std::pow(u[0], b - 1.0) / (b - 1.0);
    }
    case LossKind::Hinge:
      return pos(1.0 - a.x * u[0]);
    case LossKind::Logistic:
      return softplus(-a.x * u[0]);
    case LossKind::OrdinalHinge: {
      int lvl = static_cast<int>(a.x);
      double s = 0.0;
      for (int ap = 1; ap < lvl; ++ap) s += pos(1.0 - u[0] + ap);
      for (int ap = lvl + 1; ap <= spec.levels; ++ap) s += pos(1.0 + u[0] - ap);
      return s;
    }
    case LossKind::Interval:
      return std::max(pos(a.x - u[0]), pos(u[0] - a.hi));
    case LossKind::OneVsAll: {
      int lvl = static_cast<int>(a.x);
      double s = pos(1.0 - u[lvl - 1]);
      for (int l = 1; l <= spec.levels; ++l)
        if (l != lvl) s += pos(1.0 + u[l - 1]);
      return s;
    }
    case LossKind::CrammerSinger: {
      int lvl = static_cast<int>(a.x);
      double mx = -kInf;
      for (int l = 1; l <= spec.levels; ++l)
        if (l != lvl) mx = std::max(mx, u[l - 1]);
      return pos(1.0 - u[lvl - 1] + mx);
    }
    case LossKind::MultiOrdinal: {
      int lvl = static_cast<int>(a.x);
      double s = 0.0;
      for (int ap = 1; ap <= spec.levels - 1; ++ap) {
        double t = lvl > ap ? 1.0 : -1.0;
        s += pos(1.0 - t * u[ap - 1]);
      }
      return s;
    }
    case LossKind::Permutation: {
      double s = 0.0;
      for (size_t i = 0; i + 1 < a.order.size(); ++i)
        s += pos(1.0 - u[a.order[i] - 1] + u[a.order[i + 1] - 1]);
      return s;
    }
    case LossKind::RankingFull: {
      double s = 0.0;
      for (size_t i = 0; i + 1 < a.order.size(); ++i)
        for (size_t j = i + 1; j < a.order.size(); ++j)
          s += pos(1.0 - u[a.order[i] - 1] + u[a.order[j] - 1]);
      return s;
    }
    case LossKind::RankingPairwise: {
      double s = 0.0;
      for (auto [i, j] : a.pairs) s += pos(1.0 - u[i - 1] + u[j - 1]);
      return s;
    }
  }
  return 0.0;
}

void loss_grad(const LossSpec& spec, std::span<const double> u, const FeatureValue& a,
               std::span<double> g) {
  require_dim(spec, u);
  if (g.size() != u.size()) throw std::invalid_argument("gradient buffer size mismatch");
  check_admissible(spec, a);
  std::fill(g.begin(), g.end(), 0.0);
  switch (spec.kind) {
    case LossKind::Quadratic:
      g[0] = 2.0 * (u[0] - a.x);
      break;
    case LossKind::L1:
      g[0] = u[0] > a.x ? 1.0 : (u[0] < a.x ? -1.0 : 0.0);
      break;
    case LossKind::Huber: {
      double x = u[0] - a.x;
      g[0] = std::abs(x) <= 1.0 ? x : (x > 0 ? 1.0 : -1.0);
      break;
    }
    case LossKind::Quantile:
      g[0] = u[0] < a.x ? -spec.alpha : (u[0] > a.x ? 1.0 - spec.alpha : 0.0);
      break;
    case LossKind::Fractional:
      require_positive_u(spec, u[0]);
      g[0] = u[0] <= a.x ? -a.x / (u[0] * u[0]) : 1.0 / a.x;
      break;
    case LossKind::Logarithmic:
      require_positive_u(spec, u[0]);
      g[0] = 2.0 * std::log(u[0] / a.x) / u[0];
      break;
    case LossKind::PoissonExp:
      g[0] = std::exp(u[0]) - a.x;
      break;
    case LossKind::KLDivergence:
      require_positive_u(spec, u[0]);
      g[0] = 1.0 - a.x / u[0];
      break;
    case LossKind::ItakuraSaito:
      require_positive_u(spec, u[0]);
      g[0] = 1.0 / u[0] - a.x / (u[0] * u[0]);
      break;
    case LossKind::BetaDivergence: {
      require_positive_u(spec, u[0]);
      double b = spec.beta;
      g[0] = std::pow(u[0], b - 1.0) - a.x * std::pow(u[0], b - 2.0);
      break;
    }
    case LossKind::Hinge:
      g[0] = a.x * u[0] < 1.0 ? -a.x : 0.0;
      break;
    case LossKind::Logistic:
      g[0] = -a.x / (1.0 + std::exp(a.x * u[0]));
      break;
    case LossKind::OrdinalHinge: {
      int lvl = static_cast<int>(a.x);
      double s = 0.0;
      for (int ap = 1; ap < lvl; ++ap)
        if (1.0 - u[0] + ap > 0.0) s -= 1.0;
      for (int ap = lvl + 1; ap <= spec.levels; ++ap)
        if (1.0 + u[0] - ap > 0.0) s += 1.0;
      g[0] = s;
      break;
    }
    case LossKind::Interval:
      g[0] = u[0] < a.x ? -1.0 : (u[0] > a.hi ? 1.0 : 0.0);
      break;
    case LossKind::OneVsAll: {
      int lvl = static_cast<int>(a.x);
      for (int l = 1; l <= spec.levels; ++l) {
        if (l == lvl) g[l - 1] = u[l - 1] < 1.0 ? -1.0 : 0.0;
        else g[l - 1] = u[l - 1] > -1.0 ? 1.0 : 0.0;
      }
      break;
    }
    case LossKind::CrammerSinger: {
      int lvl = static_cast<int>(a.x);
      int best = -1;
      double mx = -kInf;
      for (int l = 1; l <= spec.levels; ++l)
        if (l != lvl && u[l - 1] > mx) { mx = u[l - 1]; best = l; }
      if (1.0 - u[lvl - 1] + mx > 0.0) {
        g[lvl - 1] = -1.0;
        g[best - 1] = 1.0;
      }
      break;
    }
    case LossKind::MultiOrdinal: {
      int lvl = static_cast<int>(a.x);
      for (int ap = 1; ap <= spec.levels - 1; ++ap) {
        double t = lvl > ap ? 1.0 : -1.0;
        if (1.0 - t * u[ap - 1] > 0.0) g[ap - 1] = -t;
      }
      break;
    }
    case LossKind::Permutation:
      for (size_t i = 0; i + 1 < a.order.size(); ++i) {
        int hiIdx = a.order[i] - 1, loIdx = a.order[i + 1] - 1;
        if (1.0 - u[hiIdx] + u[loIdx] > 0.0) { g[hiIdx] -= 1.0; g[loIdx] += 1.0; }
      }
      break;
    case LossKind::RankingFull:
      for (size_t i = 0; i + 1 < a.order.size(); ++i)
        for (size_t j = i + 1; j < a.order.size(); ++j) {
          int hiIdx = a.order[i] - 1, loIdx = a.order[j] - 1;
          if (1.0 - u[hiIdx] + u[loIdx] > 0.0) { g[hiIdx] -= 1.0; g[loIdx] += 1.0; }
        }
      break;
    case LossKind::RankingPairwise:
      for (auto [i, j] : a.pairs)
        if (1.0 - u[i - 1] + u[j - 1] > 0.0) { g[i - 1] -= 1.0; g[j - 1] += 1.0; }
      break;
  }
}

namespace {

// pick the smallest level attaining the minimum loss
FeatureValue argmin_level(const LossSpec& spec, std::span<const double> u) {
  int best = 1;
  double bv = loss_value(spec, u, FeatureValue::number(1));
  for (int l = 2; l <= spec.levels; ++l) {
    double v = loss_value(spec, u, FeatureValue::number(l));
    if (v < bv) { bv = v; best = l; }
  }
  return FeatureValue::number(best);
}

std::vector<int> sort_desc(std::span<const double> u) {
  std::vector<int> idx(u.size());
  std::iota(idx.begin(), idx.end(), 1);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return u[a - 1] > u[b - 1]; });
  return idx;
}

}  // namespace

FeatureValue loss_impute(const LossSpec& spec, std::span<const double> u) {
  require_dim(spec, u);
  switch (spec.kind) {
    case LossKind::Quadratic:
    case LossKind::L1:
    case LossKind::Huber:
    case LossKind::Quantile:
      return FeatureValue::number(u[0]);
    case LossKind::Fractional:
    case LossKind::Logarithmic:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
      require_positive_u(spec, u[0]);
      return FeatureValue::number(u[0]);
    case LossKind::PoissonExp: {
      double star = std::exp(u[0]);
      double lo = std::max(0.0, std::floor(star));
      double hi = lo + 1.0;
      double vlo = loss_value(spec, u, FeatureValue::number(lo));
      double vhi = loss_value(spec, u, FeatureValue::number(hi));
      return FeatureValue::number(vhi < vlo ? hi : lo);
    }
    case LossKind::Hinge:
    case LossKind::Logistic:
      return FeatureValue::number(u[0] >= 0.0 ? 1.0 : -1.0);
    case LossKind::OneVsAll:
    case LossKind::CrammerSinger: {
      // the imputed label is the argmax coordinate, lowest index on ties
      int best = 0;
      for (int l = 1; l < spec.levels; ++l)
        if (u[l] > u[best]) best = l;
      return FeatureValue::number(best + 1);
    }
    case LossKind::OrdinalHinge:
    case LossKind::MultiOrdinal:
      return argmin_level(spec, u);
    case LossKind::Interval:
      return FeatureValue::interval(u[0], u[0]);
    case LossKind::Permutation:
    case LossKind::RankingFull:
    case LossKind::RankingPairwise:
      return FeatureValue::permutation(sort_desc(u));
  }
  return FeatureValue::number(u[0]);
}

FeatureValue loss_impute_kind(const LossSpec& spec, std::span<const double> u,
                              const FeatureKind& kind) {
  require_dim(spec, u);
  switch (kind.tag) {
    case FeatureKind::Tag::Real:
    case FeatureKind::Tag::Interval:
      return loss_impute(spec, u);
    case FeatureKind::Tag::Boolean: {
      double vm = loss_value(spec, u, FeatureValue::number(-1.0));
      double vp = loss_value(spec, u, FeatureValue::number(1.0));
      return FeatureValue::number(vm < vp ? -1.0 : 1.0);
    }
    case FeatureKind::Tag::Ordinal:
    case FeatureKind::Tag::Categorical: {
      if (spec.embed_dim() > 1) return loss_impute(spec, u);
      int best = 1;
      double bv = loss_value(spec, u, FeatureValue::number(1));
      for (int l = 2; l <= kind.levels; ++l) {
        double v = loss_value(spec, u, FeatureValue::number(l));
        if (v < bv) { bv = v; best = l; }
      }
      return FeatureValue::number(best);
    }
  }
  return loss_impute(spec, u);
}

ColumnStats column_stats(const LossSpec& spec, std::span<const FeatureValue> cells) {
  const long n = static_cast<long>(cells.size());
  if (n < 2) throw std::invalid_argument("column_stats needs at least 2 observed cells");
  for (const auto& a : cells) check_admissible(spec, a);

  const int dim = spec.embed_dim();
  std::vector<double> mu(dim, 0.0);

  bool positive_u = false;
  switch (spec.kind) {
    case LossKind::Fractional:
    case LossKind::Logarithmic:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
      positive_u = true;
      break;
    default:
      break;
  }

  auto total = [&](const std::vector<double>& m) {
    double s = 0.0;
    for (const auto& a : cells) s += loss_value(spec, m, a);
    return s;
  };

  if (positive_u) {
    // search in log space over (0, mu_max]
    auto f = [&](double t) {
      std::vector<double> m = mu;
      m[0] = std::exp(t);
      return total(m);
    };
    double t = golden_minimize(f, std::log(1e-9), std::log(kMuMax), 1e-13);
    mu[0] = std::exp(t);
    if (mu[0] > kMuMax * 0.999) warn(spec.name() + ": column minimizer clamped at " + std::to_string(kMuMax));
  } else {
    std::vector<double> cur = mu;
    double prev = total(cur);
    const int passes = dim == 1 ? 1 : 60;
    for (int pass = 0; pass < passes; ++pass) {
      for (int c = 0; c < dim; ++c) {
        auto f = [&](double v) {
          std::vector<double> m = cur;
          m[c] = v;
          return total(m);
        };
        cur[c] = golden_minimize(f, -kMuMax, kMuMax, 1e-12);
      }
      double now = total(cur);
      if (prev - now <= 1e-12 * (1.0 + std::abs(now))) { prev = now; break; }
      prev = now;
    }
    mu = cur;
    for (double v : mu)
      if (std::abs(v) > kMuMax * 0.999) {
        warn(spec.name() + ": column minimizer clamped at " + std::to_string(kMuMax));
        break;
      }
  }

  double sigma2 = total(mu) / static_cast<double>(n - 1);
  if (sigma2 < kVarFloor) sigma2 = kVarFloor;
  return {std::move(mu), sigma2};
}

double kink_distance(const LossSpec& spec, std::span<const double> u, const FeatureValue& a) {
  require_dim(spec, u);
  check_admissible(spec, a);
  switch (spec.kind) {
    case LossKind::Quadratic:
    case LossKind::Huber:
    case LossKind::Logistic:
    case LossKind::PoissonExp:
    case LossKind::KLDivergence:
    case LossKind::ItakuraSaito:
    case LossKind::BetaDivergence:
    case LossKind::Logarithmic:
      return kInf;
    case LossKind::L1:
    case LossKind::Quantile:
    case LossKind::Fractional:
      return std::abs(u[0] - a.x);
    case LossKind::Hinge:
      return std::abs(1.0 - a.x * u[0]);
    case LossKind::Interval:
      return std::min(std::abs(u[0] - a.x), std::abs(u[0] - a.hi));
    case LossKind::OrdinalHinge: {
      int lvl = static_cast<int>(a.x);
      double d = kInf;
      for (int ap = 1; ap < lvl; ++ap) d = std::min(d, std::abs(1.0 - u[0] + ap));
      for (int ap = lvl + 1; ap <= spec.levels; ++ap) d = std::min(d, std::abs(1.0 + u[0] - ap));
      return d;
    }
    case LossKind::OneVsAll: {
      int lvl = static_cast<int>(a.x);
      double d = std::abs(1.0 - u[lvl - 1]);
      for (int l = 1; l <= spec.levels; ++l)
        if (l != lvl) d = std::min(d, std::abs(1.0 + u[l - 1]));
      return d;
    }
    case LossKind::CrammerSinger: {
      int lvl = static_cast<int>(a.x);
      double mx = -kInf;
      for (int l = 1; l <= spec.levels; ++l)
        if (l != lvl) mx = std::max(mx, u[l - 1]);
      return std::abs(1.0 - u[lvl - 1] + mx);
    }
    case LossKind::MultiOrdinal: {
      int lvl = static_cast<int>(a.x);
      double d = kInf;
      for (int ap = 1; ap <= spec.levels - 1; ++ap) {
        double t = lvl > ap ? 1.0 : -1.0;
        d = std::min(d, std::abs(1.0 - t * u[ap - 1]));
      }
      return d;
    }
    case LossKind::Permutation: {
      double d = kInf;
      for (size_t i = 0; i + 1 < a.order.size(); ++i)
        d = std::min(d, std::abs(1.0 - u[a.order[i] - 1] + u[a.order[i + 1] - 1]));
      return d;
    }
    case LossKind::RankingFull: {
      double d = kInf;
      for (size_t i = 0; i + 1 < a.order.size(); ++i)
        for (size_t j = i + 1; j < a.order.size(); ++j)
          d = std::min(d, std::abs(1.0 - u[a.order[i] - 1] + u[a.order[j] - 1]));
      return d;
    }
    case LossKind::RankingPairwise: {
      double d = kInf;
      for (auto [i, j] : a.pairs) d = std::min(d, std::abs(1.0 - u[i - 1] + u[j - 1]));
      return d;
    }
  }
  return kInf;
}

}  // namespace glrm
