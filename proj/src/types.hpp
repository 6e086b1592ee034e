// Core value types shared by every module: feature kinds, abstract feature
// values, and the heterogeneous data table.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace glrm {

struct FeatureKind {
  enum class Tag { Real, Boolean, Ordinal, Categorical, Interval };
  Tag tag = Tag::Real;
  int levels = 0;  // d for Ordinal/Categorical, >= 2

  static FeatureKind real() { return {Tag::Real, 0}; }
  static FeatureKind boolean() { return {Tag::Boolean, 0}; }
  static FeatureKind ordinal(int d) {
    if (d < 2) throw std::invalid_argument("ordinal kind needs at least 2 levels");
    return {Tag::Ordinal, d};
  }
  static FeatureKind categorical(int d) {
    if (d < 2) throw std::invalid_argument("categorical kind needs at least 2 levels");
    return {Tag::Categorical, d};
  }
  static FeatureKind interval() { return {Tag::Interval, 0}; }

  bool operator==(const FeatureKind& o) const { return tag == o.tag && levels == o.levels; }
  std::string name() const;
};

// An abstract feature value. Scalar cells (reals, Booleans stored as -1/+1,
// ordinal/categorical levels 1..d) live in `x`; intervals use (x, hi);
// permutations and pairwise comparison sets carry their own payload and only
// appear through the loss catalog, never in tables.
struct FeatureValue {
  enum class Tag { Number, Interval, Order, Pairs };
  Tag tag = Tag::Number;
  double x = 0.0;
  double hi = 0.0;
  std::vector<int> order;                    // permutation of 1..d, best first
  std::vector<std::pair<int, int>> pairs;    // (i,j): item i ranked above item j

  static FeatureValue number(double v) {
    FeatureValue a; a.x = v; return a;
  }
  static FeatureValue interval(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("interval value needs lo <= hi");
    FeatureValue a; a.tag = Tag::Interval; a.x = lo; a.hi = hi; return a;
  }
  static FeatureValue permutation(std::vector<int> p) {
    FeatureValue a; a.tag = Tag::Order; a.order = std::move(p); return a;
  }
  static FeatureValue comparisons(std::vector<std::pair<int, int>> p) {
    FeatureValue a; a.tag = Tag::Pairs; a.pairs = std::move(p); return a;
  }
  bool operator==(const FeatureValue& o) const {
    return tag == o.tag && x == o.x && hi == o.hi && order == o.order && pairs == o.pairs;
  }
};

// Heterogeneous m x n table with an observation mask. Cells are validated
// against their column kind on insertion; instances are immutable once built
// (fitting code only ever reads them), so sharing across threads is safe.
class DataTable {
 public:
  DataTable(int m, const std::vector<FeatureKind>& kinds, std::vector<std::string> names = {});

  int rows() const { return m_; }
  int cols() const { return static_cast<int>(kinds_.size()); }
  const FeatureKind& kind(int j) const { return kinds_.at(j); }
  const std::vector<FeatureKind>& kinds() const { return kinds_; }
  const std::string& name(int j) const { return names_.at(j); }

  bool observed(int i, int j) const { return cols_[j].present[i] != 0; }
  FeatureValue value(int i, int j) const;
  void set(int i, int j, const FeatureValue& v);
  void clear(int i, int j);

  long n_observed() const;
  std::vector<std::pair<int, int>> omega() const;

 private:
  struct Column {
    std::vector<std::uint8_t> present;
    std::vector<double> a;   // value / lo / level / +-1
    std::vector<double> b;   // interval hi
  };
  void check_cell(int i, int j, const FeatureValue& v) const;

  int m_;
  std::vector<FeatureKind> kinds_;
  std::vector<std::string> names_;
  std::vector<Column> cols_;
};

// Column metadata recorded while reading a CSV: the kind that was inferred
// (or hinted) and, for token-coded Boolean/Categorical columns, the mapping
// from the original tokens to stored values.
struct ColumnInfo {
  std::string name;
  FeatureKind kind;
  bool inferred = true;
  std::vector<std::pair<std::string, double>> token_map;  // token -> stored value
};

struct ReadResult {
  DataTable table;
  std::vector<ColumnInfo> info;
};

ReadResult read_csv(const std::string& path, const std::string& na_token = "NA",
                    const std::vector<std::optional<FeatureKind>>& kind_hints = {});
void write_csv(const DataTable& table, const std::string& path,
               const std::vector<ColumnInfo>& info = {}, const std::string& na_token = "NA");

struct Holdout {
  DataTable train;
  std::vector<std::pair<int, int>> heldout;
};

Holdout split_holdout(const DataTable& table, double fraction, std::uint64_t seed);

}  // namespace glrm
