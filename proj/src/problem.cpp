#include "problem.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "util.hpp"

namespace glrm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

GlrmProblem::GlrmProblem(std::shared_ptr<const DataTable> table, std::vector<LossSpec> losses,
                         RegSpec row_reg, std::vector<RegSpec> col_regs, int k,
                         bool with_offset, bool with_scaling)
    : table_(std::move(table)),
      losses_(std::move(losses)),
      col_regs_(std::move(col_regs)),
      k_(k),
      with_offset_(with_offset),
      with_scaling_(with_scaling) {
  if (!table_) throw std::invalid_argument("problem needs a table");
  const int m = table_->rows(), n = table_->cols();
  if (k_ < 1) throw std::invalid_argument("rank k must be >= 1");
  if (static_cast<int>(losses_.size()) != n) throw std::invalid_argument("need one loss per column");
  if (static_cast<int>(col_regs_.size()) != n) throw std::invalid_argument("need one column regularizer per column");
  for (int j = 0; j < n; ++j)
    if (!losses_[j].accepts(table_->kind(j)))
      throw std::invalid_argument("loss " + losses_[j].name() + " does not accept column " +
                                  std::to_string(j + 1) + " of kind " + table_->kind(j).name());

  d_j_.resize(n);
  col_off_.resize(n);
  for (int j = 0; j < n; ++j) {
    col_off_[j] = d_total_;
    d_j_[j] = losses_[j].embed_dim();
    d_total_ += d_j_[j];
  }

  rows_obs_.resize(m);
  cols_obs_.resize(n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (table_->observed(i, j)) {
        rows_obs_[i].push_back(j);
        cols_obs_[j].push_back(i);
        ++n_obs_;
      }

  sigma2_ = Eigen::VectorXd::Ones(n);
  if (with_scaling_) {
    for (int j = 0; j < n; ++j) {
      if (cols_obs_[j].size() < 2)
        throw std::invalid_argument("column " + std::to_string(j + 1) + " has " +
                                    std::to_string(cols_obs_[j].size()) +
                                    " observed entries; loss scaling needs at least 2 "
                                    "(disable scaling for this table)");
      std::vector<FeatureValue> cells;
      cells.reserve(cols_obs_[j].size());
      for (int i : cols_obs_[j]) cells.push_back(table_->value(i, j));
      sigma2_[j] = column_stats(losses_[j], cells).sigma2;
    }
  }

  row_regs_.assign(m, row_reg);
  if (with_offset_) {
    RegSpec wrapped = RegSpec::fixed_entry(row_reg, 1.0, k_);
    eff_row_regs_.assign(m, wrapped);
  } else {
    eff_row_regs_ = row_regs_;
  }
}

Factors GlrmProblem::zero_factors() const {
  Factors f;
  f.X = RowMajorMatrix::Zero(m(), k_eff());
  f.Y = Eigen::MatrixXd::Zero(k_eff(), d());
  if (with_offset_) f.X.col(k_).setOnes();
  f.sigma2 = sigma2_;
  return f;
}

GlrmProblem GlrmProblem::with_rank(int k) const {
  return GlrmProblem(table_, losses_, row_regs_[0], col_regs_, k, with_offset_, with_scaling_);
}

GlrmProblem GlrmProblem::with_gamma(double gamma) const {
  RegSpec rr = row_regs_[0];
  reg_set_gamma(rr, gamma);
  std::vector<RegSpec> cr = col_regs_;
  for (auto& r : cr) reg_set_gamma(r, gamma);
  return GlrmProblem(table_, losses_, rr, cr, k_, with_offset_, with_scaling_);
}

GlrmProblem GlrmProblem::with_table(std::shared_ptr<const DataTable> t) const {
  return GlrmProblem(std::move(t), losses_, row_regs_[0], col_regs_, k_, with_offset_, with_scaling_);
}

namespace {

// Column regularizer applied to the free (non-offset) rows of a Y block;
// the offset row is never penalized.
double col_reg_value(const GlrmProblem& p, int j, const Eigen::MatrixXd& yj) {
  const int kf = p.k();
  std::vector<double> flat;
  flat.reserve(kf * yj.cols());
  for (int c = 0; c < yj.cols(); ++c)
    for (int r = 0; r < kf; ++r) flat.push_back(yj(r, c));
  return reg_value(p.col_reg(j), flat);
}

}  // namespace

double row_objective(const GlrmProblem& p, const Factors& f, int i, const Eigen::RowVectorXd& xi) {
  double s = 0.0;
  for (int j : p.row_obs(i)) {
    const int dj = p.embed_dim(j), off = p.embed_offset(j);
    Eigen::RowVectorXd u = xi * f.Y.middleCols(off, dj);
    s += p.loss_weight(j) *
         loss_value(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j));
  }
  std::span<const double> xs(xi.data(), xi.size());
  s += reg_value(p.effective_row_reg(i), xs);
  return s;
}

double col_objective(const GlrmProblem& p, const Factors& f, int j, const Eigen::MatrixXd& yj) {
  double s = 0.0;
  const int dj = p.embed_dim(j);
  const double w = p.loss_weight(j);
  for (int i : p.col_obs(j)) {
    Eigen::RowVectorXd u = f.X.row(i) * yj;
    s += w * loss_value(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j));
  }
  s += col_reg_value(p, j, yj);
  return s;
}

double objective(const GlrmProblem& p, const Factors& f) {
  if (f.X.rows() != p.m() || f.X.cols() != p.k_eff() || f.Y.rows() != p.k_eff() ||
      f.Y.cols() != p.d())
    throw std::invalid_argument("factor shapes do not match problem");
  double s = 0.0;
  for (int i = 0; i < p.m(); ++i) {
    Eigen::RowVectorXd xi = f.X.row(i);
    for (int j : p.row_obs(i)) {
      const int dj = p.embed_dim(j), off = p.embed_offset(j);
      Eigen::RowVectorXd u = xi * f.Y.middleCols(off, dj);
      s += p.loss_weight(j) *
           loss_value(p.loss(j), std::span<const double>(u.data(), dj), p.table().value(i, j));
    }
    std::span<const double> xs(xi.data(), xi.size());
    double r = reg_value(p.effective_row_reg(i), xs);
    if (r == kInf) return kInf;
    s += r;
  }
  for (int j = 0; j < p.n(); ++j) {
    double r = col_reg_value(p, j, f.Y.middleCols(p.embed_offset(j), p.embed_dim(j)));
    if (r == kInf) return kInf;
    s += r;
  }
  return s;
}

DataTable impute_table(const GlrmProblem& p, const Factors& f) {
  std::vector<std::string> names;
  for (int j = 0; j < p.n(); ++j) names.push_back(p.table().name(j));
  DataTable out(p.m(), p.table().kinds(), names);
  for (int i = 0; i < p.m(); ++i) {
    Eigen::RowVectorXd xi = f.X.row(i);
    for (int j = 0; j < p.n(); ++j) {
      const int dj = p.embed_dim(j), off = p.embed_offset(j);
      Eigen::RowVectorXd u = xi * f.Y.middleCols(off, dj);
      out.set(i, j, loss_impute_kind(p.loss(j), std::span<const double>(u.data(), dj), p.table().kind(j)));
    }
  }
  return out;
}

void project_feasible(const GlrmProblem& p, Factors& f) {
  Eigen::RowVectorXd buf(p.k_eff());
  for (int i = 0; i < p.m(); ++i) {
    Eigen::RowVectorXd xi = f.X.row(i);
    reg_prox(p.effective_row_reg(i), std::span<const double>(xi.data(), xi.size()), 1.0,
             std::span<double>(buf.data(), buf.size()));
    f.X.row(i) = buf;
  }
  for (int j = 0; j < p.n(); ++j) {
    const int dj = p.embed_dim(j), off = p.embed_offset(j);
    std::vector<double> flat, proxed(static_cast<size_t>(p.k()) * dj);
    for (int c = 0; c < dj; ++c)
      for (int r = 0; r < p.k(); ++r) flat.push_back(f.Y(r, off + c));
    reg_prox(p.col_reg(j), flat, 1.0, proxed);
    size_t t = 0;
    for (int c = 0; c < dj; ++c)
      for (int r = 0; r < p.k(); ++r) f.Y(r, off + c) = proxed[t++];
  }
}

int degrees_of_freedom(const GlrmProblem& p, const Factors& f) {
  long nnz = 0;
  for (int i = 0; i < f.X.rows(); ++i)
    for (int c = 0; c < f.X.cols(); ++c) nnz += f.X(i, c) != 0.0;
  for (int r = 0; r < f.Y.rows(); ++r)
    for (int c = 0; c < f.Y.cols(); ++c) nnz += f.Y(r, c) != 0.0;
  bool invariant = p.row_reg(0).orthogonally_invariant();
  for (int j = 0; j < p.n(); ++j) invariant = invariant && p.col_reg(j).orthogonally_invariant();
  long dof = invariant ? nnz - static_cast<long>(p.k()) * p.k() : nnz;
  return static_cast<int>(std::max(dof, 0L));
}

// ---------------------------------------------------------------------------
// model files (.glrm text schema v1)

ModelMeta make_meta(const GlrmProblem& p, double row_gamma, double col_gamma) {
  ModelMeta m;
  m.m = p.m();
  m.n = p.n();
  m.k = p.k();
  m.with_offset = p.with_offset();
  m.with_scaling = p.with_scaling();
  for (int j = 0; j < p.n(); ++j) {
    m.loss_names.push_back(p.loss(j).name());
    m.col_reg_names.push_back(p.col_reg(j).name());
    m.col_gammas.push_back(col_gamma);
    m.kinds.push_back(p.table().kind(j));
  }
  m.row_reg_name = p.row_reg(0).name();
  m.row_gamma = row_gamma;
  return m;
}

namespace {

std::string kind_string(const FeatureKind& k) {
  switch (k.tag) {
    case FeatureKind::Tag::Real: return "real";
    case FeatureKind::Tag::Boolean: return "boolean";
    case FeatureKind::Tag::Ordinal: return "ordinal:" + std::to_string(k.levels);
    case FeatureKind::Tag::Categorical: return "categorical:" + std::to_string(k.levels);
    case FeatureKind::Tag::Interval: return "interval";
  }
  return "real";
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "real") return FeatureKind::real();
  if (s == "boolean") return FeatureKind::boolean();
  if (s == "interval") return FeatureKind::interval();
  auto pos = s.find(':');
  if (pos != std::string::npos) {
    int d = std::stoi(s.substr(pos + 1));
    std::string base = s.substr(0, pos);
    if (base == "ordinal") return FeatureKind::ordinal(d);
    if (base == "categorical") return FeatureKind::categorical(d);
  }
  throw std::runtime_error("bad kind string '" + s + "'");
}

void expect(std::istream& in, const std::string& tag) {
  std::string got;
  if (!(in >> got) || got != tag)
    throw std::runtime_error("model file: expected '" + tag + "', got '" + got + "'");
}

}  // namespace

void save_model(const Factors& f, const ModelMeta& meta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int keff = meta.with_offset ? meta.k + 1 : meta.k;
  if (f.X.cols() != keff || f.Y.rows() != keff || f.X.rows() != meta.m)
    throw std::invalid_argument("factor shapes do not match metadata");
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "GLRM 1\n";
  out << "dims " << meta.m << " " << meta.n << " " << meta.k << " " << keff << " " << f.Y.cols() << "\n";
  out << "flags " << (meta.with_offset ? 1 : 0) << " " << (meta.with_scaling ? 1 : 0) << "\n";
  for (int j = 0; j < meta.n; ++j)
    out << "col " << j + 1 << " " << kind_string(meta.kinds[j]) << " " << meta.loss_names[j] << " "
        << meta.col_reg_names[j] << " " << fmt(meta.col_gammas[j]) << "\n";
  out << "rowreg " << meta.row_reg_name << " " << fmt(meta.row_gamma) << "\n";
  out << "sigma2";
  for (int j = 0; j < meta.n; ++j) out << " " << fmt(f.sigma2[j]);
  out << "\n";
  out << "X\n";
  for (int i = 0; i < f.X.rows(); ++i) {
    for (int c = 0; c < f.X.cols(); ++c) out << (c ? " " : "") << fmt(f.X(i, c));
    out << "\n";
  }
  out << "Y\n";
  for (int r = 0; r < f.Y.rows(); ++r) {
    for (int c = 0; c < f.Y.cols(); ++c) out << (c ? " " : "") << fmt(f.Y(r, c));
    out << "\n";
  }
  out << "END\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "GLRM")
    throw std::runtime_error(path + ": not a .glrm model file");
  if (version != 1) throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));

  Model model;
  ModelMeta& meta = model.meta;
  int keff = 0, d = 0;
  expect(in, "dims");
  if (!(in >> meta.m >> meta.n >> meta.k >> keff >> d)) throw std::runtime_error(path + ": bad dims");
  if (meta.m < 1 || meta.n < 1 || meta.k < 1 || keff < meta.k || d < meta.n)
    throw std::runtime_error(path + ": inconsistent dims");
  expect(in, "flags");
  int off = 0, sc = 0;
  if (!(in >> off >> sc)) throw std::runtime_error(path + ": bad flags");
  meta.with_offset = off != 0;
  meta.with_scaling = sc != 0;
  if (keff != (meta.with_offset ? meta.k + 1 : meta.k))
    throw std::runtime_error(path + ": k_eff does not match offset flag");

  meta.kinds.resize(meta.n);
  meta.loss_names.resize(meta.n);
  meta.col_reg_names.resize(meta.n);
  meta.col_gammas.resize(meta.n);
  for (int j = 0; j < meta.n; ++j) {
    expect(in, "col");
    int idx;
    std::string kind;
    if (!(in >> idx >> kind >> meta.loss_names[j] >> meta.col_reg_names[j] >> meta.col_gammas[j]) ||
        idx != j + 1)
      throw std::runtime_error(path + ": bad column record");
    meta.kinds[j] = parse_kind(kind);
  }
  expect(in, "rowreg");
  if (!(in >> meta.row_reg_name >> meta.row_gamma)) throw std::runtime_error(path + ": bad rowreg");

  expect(in, "sigma2");
  model.factors.sigma2.resize(meta.n);
  for (int j = 0; j < meta.n; ++j)
    if (!(in >> model.factors.sigma2[j])) throw std::runtime_error(path + ": truncated sigma2");

  expect(in, "X");
  model.factors.X.resize(meta.m, keff);
  for (int i = 0; i < meta.m; ++i)
    for (int c = 0; c < keff; ++c)
      if (!(in >> model.factors.X(i, c))) throw std::runtime_error(path + ": truncated X");
  expect(in, "Y");
  model.factors.Y.resize(keff, d);
  for (int r = 0; r < keff; ++r)
    for (int c = 0; c < d; ++c)
      if (!(in >> model.factors.Y(r, c))) throw std::runtime_error(path + ": truncated Y");
  expect(in, "END");

  // cross-check the embedding dimension implied by the losses
  int dsum = 0;
  for (int j = 0; j < meta.n; ++j)
    dsum += LossSpec::parse(meta.loss_names[j], &meta.kinds[j]).embed_dim();
  if (dsum != d) throw std::runtime_error(path + ": embedding width does not match losses");
  return model;
}

GlrmProblem problem_from_meta(const ModelMeta& meta, std::shared_ptr<const DataTable> table) {
  if (table->rows() != meta.m || table->cols() != meta.n)
    throw std::invalid_argument("table shape does not match model metadata");
  std::vector<LossSpec> losses;
  std::vector<RegSpec> col_regs;
  for (int j = 0; j < meta.n; ++j) {
    losses.push_back(LossSpec::parse(meta.loss_names[j], &meta.kinds[j]));
    col_regs.push_back(RegSpec::parse(meta.col_reg_names[j], meta.col_gammas[j]));
  }
  RegSpec row_reg = RegSpec::parse(meta.row_reg_name, meta.row_gamma);
  return GlrmProblem(std::move(table), std::move(losses), row_reg, std::move(col_regs), meta.k,
                     meta.with_offset, meta.with_scaling);
}

}  // namespace glrm
