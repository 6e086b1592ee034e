#include "reg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace glrm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIndTol = 1e-12;
}  // namespace

RegSpec RegSpec::quadratic(double g) {
  if (g < 0) throw std::invalid_argument("quadreg needs gamma >= 0");
  RegSpec s{RegKind::QuadraticReg};
  s.gamma = g;
  return s;
}

RegSpec RegSpec::l1(double g) {
  if (g < 0) throw std::invalid_argument("l1reg needs gamma >= 0");
  RegSpec s{RegKind::L1Reg};
  s.gamma = g;
  return s;
}

RegSpec RegSpec::box(double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("box needs lo <= hi");
  RegSpec s{RegKind::BoxInd};
  s.lo = lo;
  s.hi = hi;
  return s;
}

RegSpec RegSpec::block_sparse(std::vector<int> partition) {
  if (partition.empty()) throw std::invalid_argument("blocksparse needs a partition");
  for (int b : partition)
    if (b < 1) throw std::invalid_argument("blocksparse partition sizes must be positive");
  RegSpec s{RegKind::BlockSparseInd};
  s.blocks = std::move(partition);
  return s;
}

RegSpec RegSpec::max_norm(double mu) {
  if (!(mu > 0)) throw std::invalid_argument("maxnorm needs mu > 0");
  RegSpec s{RegKind::MaxNormInd};
  s.mu = mu;
  return s;
}

RegSpec RegSpec::l2_unsquared(double g) {
  if (g < 0) throw std::invalid_argument("l2 needs gamma >= 0");
  RegSpec s{RegKind::L2Unsquared};
  s.gamma = g;
  return s;
}

RegSpec RegSpec::l1_nonneg(double g) {
  if (g < 0) throw std::invalid_argument("l1_nonneg needs gamma >= 0");
  RegSpec s{RegKind::L1PlusNonneg};
  s.gamma = g;
  return s;
}

RegSpec RegSpec::fixed_entry(RegSpec in, double value, int index) {
  RegSpec s{RegKind::FixedEntry};
  s.inner = std::make_shared<RegSpec>(std::move(in));
  s.fixed_value = value;
  s.fixed_index = index;
  return s;
}

bool RegSpec::is_indicator() const {
  switch (kind) {
    case RegKind::NonnegInd:
    case RegKind::BoxInd:
    case RegKind::OneSparseInd:
    case RegKind::UnitOneSparseInd:
    case RegKind::SimplexInd:
    case RegKind::BlockSparseInd:
    case RegKind::MaxNormInd:
    case RegKind::OneSparseNonnegInd:
      return true;
    case RegKind::FixedEntry:
      return inner->is_indicator();
    default:
      return false;
  }
}

bool RegSpec::convex() const {
  switch (kind) {
    case RegKind::OneSparseInd:
    case RegKind::UnitOneSparseInd:
    case RegKind::BlockSparseInd:
    case RegKind::OneSparseNonnegInd:
      return false;
    case RegKind::FixedEntry:
      return inner->convex();
    default:
      return true;
  }
}

bool RegSpec::orthogonally_invariant() const {
  switch (kind) {
    case RegKind::Zero:
    case RegKind::QuadraticReg:
    case RegKind::MaxNormInd:
    case RegKind::L2Unsquared:
      return true;
    default:
      return false;
  }
}

std::string RegSpec::name() const {
  switch (kind) {
    case RegKind::Zero: return "zero";
    case RegKind::QuadraticReg: return "quadreg";
    case RegKind::L1Reg: return "l1reg";
    case RegKind::NonnegInd: return "nonneg";
    case RegKind::BoxInd: return "box:" + std::to_string(lo) + ":" + std::to_string(hi);
    case RegKind::OneSparseInd: return "onesparse";
    case RegKind::UnitOneSparseInd: return "unitonesparse";
    case RegKind::SimplexInd: return "simplex";
    case RegKind::BlockSparseInd: {
      std::string s = "blocksparse";
      char sep = ':';
      for (int b : blocks) { s += sep; s += std::to_string(b); sep = ','; }
      return s;
    }
    case RegKind::MaxNormInd: return "maxnorm:" + std::to_string(mu);
    case RegKind::L2Unsquared: return "l2";
    case RegKind::OneSparseNonnegInd: return "onesparse_nonneg";
    case RegKind::L1PlusNonneg: return "l1_nonneg";
    case RegKind::FixedEntry: return "fixed_first:" + inner->name();
  }
  return "?";
}

RegSpec RegSpec::parse(const std::string& full, double gamma) {
  std::string base = full;
  std::vector<std::string> params;
  size_t pos = full.find(':');
  if (pos != std::string::npos) {
    base = full.substr(0, pos);
    std::string rest = full.substr(pos + 1);
    size_t p = 0;
    while (p <= rest.size()) {
      size_t q = rest.find_first_of(":,", p);
      params.push_back(rest.substr(p, q == std::string::npos ? q : q - p));
      if (q == std::string::npos) break;
      p = q + 1;
    }
  }
  if (base == "zero") return zero();
  if (base == "quadreg") return quadratic(gamma);
  if (base == "l1reg") return l1(gamma);
  if (base == "nonneg") return nonneg();
  if (base == "box") {
    double lo = params.size() > 0 ? std::stod(params[0]) : 0.0;
    double hi = params.size() > 1 ? std::stod(params[1]) : 1.0;
    return box(lo, hi);
  }
  if (base == "onesparse") return one_sparse();
  if (base == "unitonesparse") return unit_one_sparse();
  if (base == "simplex") return simplex();
  if (base == "blocksparse") {
    std::vector<int> part;
    for (const auto& p : params) part.push_back(std::stoi(p));
    return block_sparse(part);
  }
  if (base == "maxnorm") return max_norm(params.empty() ? 1.0 : std::stod(params[0]));
  if (base == "l2") return l2_unsquared(gamma);
  if (base == "onesparse_nonneg") return one_sparse_nonneg();
  if (base == "l1_nonneg") return l1_nonneg(gamma);
  if (base == "fixed_first") {
    // fixed_first[:INNER], pinning coordinate 0 to 1
    std::string inner = pos == std::string::npos ? "zero" : full.substr(pos + 1);
    return fixed_entry(parse(inner, gamma), 1.0, 0);
  }
  throw std::invalid_argument("unknown regularizer '" + full + "'");
}

void reg_set_gamma(RegSpec& spec, double gamma) {
  switch (spec.kind) {
    case RegKind::QuadraticReg:
    case RegKind::L1Reg:
    case RegKind::L2Unsquared:
    case RegKind::L1PlusNonneg:
      if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
      spec.gamma = gamma;
      return;
    case RegKind::FixedEntry: {
      auto in = std::make_shared<RegSpec>(*spec.inner);
      reg_set_gamma(*in, gamma);
      spec.inner = std::move(in);
      return;
    }
    default:
      throw std::invalid_argument(spec.name() + " has no strength parameter to rescale");
  }
}

double reg_value(const RegSpec& spec, std::span<const double> v) {
  switch (spec.kind) {
    case RegKind::Zero:
      return 0.0;
    case RegKind::QuadraticReg: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return spec.gamma * s;
    }
    case RegKind::L1Reg: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return spec.gamma * s;
    }
    case RegKind::NonnegInd:
      for (double x : v)
        if (x < -kIndTol) return kInf;
      return 0.0;
    case RegKind::BoxInd:
      for (double x : v)
        if (x < spec.lo - kIndTol || x > spec.hi + kIndTol) return kInf;
      return 0.0;
    case RegKind::OneSparseInd: {
      int nz = 0;
      for (double x : v) nz += x != 0.0;
      return nz <= 1 ? 0.0 : kInf;
    }
    case RegKind::UnitOneSparseInd: {
      int ones = 0;
      for (double x : v) {
        if (std::abs(x - 1.0) <= kIndTol) ++ones;
        else if (std::abs(x) > kIndTol) return kInf;
      }
      return ones == 1 ? 0.0 : kInf;
    }
    case RegKind::SimplexInd: {
      double s = 0.0;
      for (double x : v) {
        if (x < -kIndTol) return kInf;
        s += x;
      }
      return std::abs(s - 1.0) <= kIndTol * std::max<double>(1, v.size()) ? 0.0 : kInf;
    }
    case RegKind::BlockSparseInd: {
      size_t off = 0;
      int live = 0;
      for (int b : spec.blocks) {
        if (off + b > v.size()) throw std::invalid_argument("blocksparse partition longer than vector");
        bool nz = false;
        for (int t = 0; t < b; ++t) nz = nz || v[off + t] != 0.0;
        live += nz;
        off += b;
      }
      if (off != v.size()) throw std::invalid_argument("blocksparse partition does not cover vector");
      return live <= 1 ? 0.0 : kInf;
    }
    case RegKind::MaxNormInd: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return s <= spec.mu + kIndTol ? 0.0 : kInf;
    }
    case RegKind::L2Unsquared: {
      double s = 0.0;
      for (double x : v) s += x * x;
      return spec.gamma * std::sqrt(s);
    }
    case RegKind::OneSparseNonnegInd: {
      int nz = 0;
      for (double x : v) {
        if (x < -kIndTol) return kInf;
        nz += x != 0.0;
      }
      return nz <= 1 ? 0.0 : kInf;
    }
    case RegKind::L1PlusNonneg: {
      double s = 0.0;
      for (double x : v) {
        if (x < -kIndTol) return kInf;
        s += std::abs(x);
      }
      return spec.gamma * s;
    }
    case RegKind::FixedEntry: {
      int idx = spec.fixed_index;
      if (idx >= static_cast<int>(v.size())) throw std::invalid_argument("fixed entry index out of range");
      if (std::abs(v[idx] - spec.fixed_value) > kIndTol) return kInf;
      std::vector<double> rest;
      rest.reserve(v.size() - 1);
      for (size_t t = 0; t < v.size(); ++t)
        if (static_cast<int>(t) != idx) rest.push_back(v[t]);
      return reg_value(*spec.inner, rest);
    }
  }
  return 0.0;
}

namespace {

void project_simplex(std::span<const double> v, std::span<double> out) {
  // sort-based Euclidean projection onto { x >= 0, sum x = 1 }
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end(), std::greater<>());
  double acc = 0.0, theta = 0.0;
  int support = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    acc += s[i];
    double t = (acc - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) {
      theta = t;
      support = static_cast<int>(i + 1);
    }
  }
  (void)support;
  for (size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
}

}  // namespace

void reg_prox(const RegSpec& spec, std::span<const double> v, double alpha, std::span<double> out) {
  if (!(alpha > 0)) throw std::invalid_argument("prox needs alpha > 0");
  if (out.size() != v.size()) throw std::invalid_argument("prox buffer size mismatch");
  const size_t k = v.size();
  switch (spec.kind) {
    case RegKind::Zero:
      std::copy(v.begin(), v.end(), out.begin());
      return;
    case RegKind::QuadraticReg: {
      double c = 1.0 / (1.0 + 2.0 * alpha * spec.gamma);
      for (size_t i = 0; i < k; ++i) out[i] = c * v[i];
      return;
    }
    case RegKind::L1Reg: {
      double t = alpha * spec.gamma;
      for (size_t i = 0; i < k; ++i)
        out[i] = v[i] > t ? v[i] - t : (v[i] < -t ? v[i] + t : 0.0);
      return;
    }
    case RegKind::NonnegInd:
      for (size_t i = 0; i < k; ++i) out[i] = std::max(v[i], 0.0);
      return;
    case RegKind::BoxInd:
      for (size_t i = 0; i < k; ++i) out[i] = std::clamp(v[i], spec.lo, spec.hi);
      return;
    case RegKind::OneSparseInd: {
      size_t best = 0;
      for (size_t i = 1; i < k; ++i)
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
      std::fill(out.begin(), out.end(), 0.0);
      out[best] = v[best];
      return;
    }
    case RegKind::UnitOneSparseInd: {
      size_t best = 0;
      for (size_t i = 1; i < k; ++i)
        if (v[i] > v[best]) best = i;
      std::fill(out.begin(), out.end(), 0.0);
      out[best] = 1.0;
      return;
    }
    case RegKind::SimplexInd:
      project_simplex(v, out);
      return;
    case RegKind::BlockSparseInd: {
      size_t off = 0, bestOff = 0;
      int bestLen = spec.blocks.empty() ? 0 : spec.blocks[0];
      double bestNorm = -1.0;
      for (int b : spec.blocks) {
        double s = 0.0;
        for (int t = 0; t < b; ++t) s += v[off + t] * v[off + t];
        if (s > bestNorm) { bestNorm = s; bestOff = off; bestLen = b; }
        off += b;
      }
      if (off != k) throw std::invalid_argument("blocksparse partition does not cover vector");
      std::fill(out.begin(), out.end(), 0.0);
      for (int t = 0; t < bestLen; ++t) out[bestOff + t] = v[bestOff + t];
      return;
    }
    case RegKind::MaxNormInd: {
      double s = 0.0;
      for (size_t i = 0; i < k; ++i) s += v[i] * v[i];
      double c = s > spec.mu ? std::sqrt(spec.mu / s) : 1.0;
      for (size_t i = 0; i < k; ++i) out[i] = c * v[i];
      return;
    }
    case RegKind::L2Unsquared: {
      double s = 0.0;
      for (size_t i = 0; i < k; ++i) s += v[i] * v[i];
      double nrm = std::sqrt(s);
      double c = nrm > 0.0 ? std::max(1.0 - alpha * spec.gamma / nrm, 0.0) : 0.0;
      for (size_t i = 0; i < k; ++i) out[i] = c * v[i];
      return;
    }
    case RegKind::OneSparseNonnegInd: {
      size_t best = 0;
      for (size_t i = 1; i < k; ++i)
        if (v[i] > v[best]) best = i;
      std::fill(out.begin(), out.end(), 0.0);
      if (v[best] > 0.0) out[best] = v[best];
      return;
    }
    case RegKind::L1PlusNonneg: {
      double t = alpha * spec.gamma;
      for (size_t i = 0; i < k; ++i) out[i] = std::max(v[i] - t, 0.0);
      return;
    }
    case RegKind::FixedEntry: {
      int idx = spec.fixed_index;
      if (idx >= static_cast<int>(k)) throw std::invalid_argument("fixed entry index out of range");
      std::vector<double> rest, rout(k - 1);
      rest.reserve(k - 1);
      for (size_t t = 0; t < k; ++t)
        if (static_cast<int>(t) != idx) rest.push_back(v[t]);
      reg_prox(*spec.inner, rest, alpha, rout);
      size_t r = 0;
      for (size_t t = 0; t < k; ++t)
        out[t] = static_cast<int>(t) == idx ? spec.fixed_value : rout[r++];
      return;
    }
  }
}

}  // namespace glrm
