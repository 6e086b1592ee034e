#include "types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "util.hpp"

namespace glrm {

std::string FeatureKind::name() const {
  switch (tag) {
    case Tag::Real: return "real";
    case Tag::Boolean: return "boolean";
    case Tag::Ordinal: return "ordinal(" + std::to_string(levels) + ")";
    case Tag::Categorical: return "categorical(" + std::to_string(levels) + ")";
    case Tag::Interval: return "interval";
  }
  return "?";
}

DataTable::DataTable(int m, const std::vector<FeatureKind>& kinds, std::vector<std::string> names)
    : m_(m), kinds_(kinds), names_(std::move(names)) {
  if (m < 1 || kinds.empty()) throw std::invalid_argument("table needs m >= 1 and n >= 1");
  if (names_.empty()) {
    for (size_t j = 0; j < kinds_.size(); ++j) names_.push_back("c" + std::to_string(j + 1));
  }
  if (names_.size() != kinds_.size()) throw std::invalid_argument("column name count mismatch");
  cols_.resize(kinds_.size());
  for (auto& c : cols_) {
    c.present.assign(m_, 0);
    c.a.assign(m_, 0.0);
    c.b.assign(m_, 0.0);
  }
}

void DataTable::check_cell(int i, int j, const FeatureValue& v) const {
  if (i < 0 || i >= m_ || j < 0 || j >= cols()) throw std::out_of_range("cell index out of range");
  const FeatureKind& k = kinds_[j];
  auto fail = [&](const char* what) {
    throw std::invalid_argument("cell (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                "): " + what + " for kind " + k.name());
  };
  switch (k.tag) {
    case FeatureKind::Tag::Real:
      if (v.tag != FeatureValue::Tag::Number || !std::isfinite(v.x)) fail("not a finite number");
      break;
    case FeatureKind::Tag::Boolean:
      if (v.tag != FeatureValue::Tag::Number || (v.x != -1.0 && v.x != 1.0)) fail("not in {-1,+1}");
      break;
    case FeatureKind::Tag::Ordinal:
    case FeatureKind::Tag::Categorical: {
      if (v.tag != FeatureValue::Tag::Number) fail("not a level");
      double r = std::round(v.x);
      if (r != v.x || r < 1 || r > k.levels) fail("level outside 1..d");
      break;
    }
    case FeatureKind::Tag::Interval:
      if (v.tag != FeatureValue::Tag::Interval || !(v.x <= v.hi)) fail("not an interval with lo <= hi");
      break;
  }
}

void DataTable::set(int i, int j, const FeatureValue& v) {
  check_cell(i, j, v);
  Column& c = cols_[j];
  c.present[i] = 1;
  c.a[i] = v.x;
  c.b[i] = v.hi;
}

void DataTable::clear(int i, int j) {
  if (i < 0 || i >= m_ || j < 0 || j >= cols()) throw std::out_of_range("cell index out of range");
  cols_[j].present[i] = 0;
}

FeatureValue DataTable::value(int i, int j) const {
  if (!observed(i, j)) throw std::invalid_argument("cell not observed");
  const Column& c = cols_[j];
  if (kinds_[j].tag == FeatureKind::Tag::Interval) return FeatureValue::interval(c.a[i], c.b[i]);
  return FeatureValue::number(c.a[i]);
}

long DataTable::n_observed() const {
  long t = 0;
  for (const auto& c : cols_) t += std::count(c.present.begin(), c.present.end(), std::uint8_t{1});
  return t;
}

std::vector<std::pair<int, int>> DataTable::omega() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(n_observed());
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < cols(); ++j)
      if (observed(i, j)) out.emplace_back(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// RFC-4180-ish field splitting: quoted fields may contain commas, doubled
// quotes and newlines are not supported inside fields.
std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t p = 0; p < line.size(); ++p) {
    char ch = line[p];
    if (quoted) {
      if (ch == '"') {
        if (p + 1 < line.size() && line[p + 1] == '"') { cur += '"'; ++p; }
        else quoted = false;
      } else cur += ch;
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc{} && r.ptr == e && std::isfinite(out);
}

bool is_integral(double v) { return std::round(v) == v && std::abs(v) < 1e15; }

std::string cell_ref(int row, int col) {
  return "row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1);
}

// Lexicographically later token maps to +1.
void boolean_token_map(const std::set<std::string>& toks, ColumnInfo& info) {
  auto it = toks.begin();
  info.token_map.emplace_back(*it, toks.size() == 1 ? 1.0 : -1.0);
  if (toks.size() == 2) info.token_map.emplace_back(*std::next(it), 1.0);
}

}  // namespace

ReadResult read_csv(const std::string& path, const std::string& na_token,
                    const std::vector<std::optional<FeatureKind>>& kind_hints) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
  std::vector<std::string> names = split_row(line);
  const int n = static_cast<int>(names.size());
  for (auto& nm : names) nm = trim(nm);

  std::vector<std::vector<std::optional<std::string>>> raw(n);
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields = split_row(line);
    if (static_cast<int>(fields.size()) != n)
      throw std::runtime_error(path + ": ragged row " + std::to_string(row + 2) + " has " +
                               std::to_string(fields.size()) + " fields, expected " + std::to_string(n));
    for (int j = 0; j < n; ++j) {
      std::string t = trim(fields[j]);
      if (t == na_token) raw[j].emplace_back(std::nullopt);
      else raw[j].emplace_back(std::move(t));
    }
    ++row;
  }
  const int m = row;
  if (m < 1) throw std::runtime_error(path + ": no data rows");
  if (!kind_hints.empty() && static_cast<int>(kind_hints.size()) != n)
    throw std::invalid_argument("kind hint count does not match column count");

  std::vector<ColumnInfo> info(n);
  std::vector<FeatureKind> kinds(n);

  for (int j = 0; j < n; ++j) {
    info[j].name = names[j];
    std::set<std::string> toks;
    for (const auto& c : raw[j])
      if (c) toks.insert(*c);
    if (toks.empty())
      throw std::runtime_error(path + ": column " + std::to_string(j + 1) + " has no observed cells");

    if (!kind_hints.empty() && kind_hints[j]) {
      kinds[j] = *kind_hints[j];
      info[j].inferred = false;
      if (kinds[j].tag == FeatureKind::Tag::Boolean) {
        bool numeric_pm1 = true;
        for (const auto& t : toks) {
          double v;
          if (!parse_double(t, v) || (v != 1.0 && v != -1.0)) { numeric_pm1 = false; break; }
        }
        if (!numeric_pm1) {
          if (toks.size() > 2)
            throw std::runtime_error(path + ": boolean column " + std::to_string(j + 1) +
                                     " has more than two distinct tokens");
          boolean_token_map(toks, info[j]);
        }
      } else if (kinds[j].tag == FeatureKind::Tag::Categorical) {
        bool numeric_levels = true;
        for (const auto& t : toks) {
          double v;
          if (!parse_double(t, v) || !is_integral(v) || v < 1 || v > kinds[j].levels) {
            numeric_levels = false;
            break;
          }
        }
        if (!numeric_levels) {
          if (static_cast<int>(toks.size()) > kinds[j].levels)
            throw std::runtime_error(path + ": categorical column " + std::to_string(j + 1) +
                                     " has more distinct tokens than levels");
          int level = 1;
          for (const auto& t : toks) info[j].token_map.emplace_back(t, level++);
        }
      }
      continue;
    }

    // Inference cascade: numeric-with-fraction -> Real; {-1,+1} or two
    // distinct tokens -> Boolean; integers in 1..d with d <= 20 -> Ordinal;
    // otherwise <= 50 distinct tokens -> Categorical.
    bool all_numeric = true, any_fraction = false, pm1 = true;
    double lo = 1e300, hi = -1e300;
    bool all_int = true;
    for (const auto& t : toks) {
      double v;
      if (!parse_double(t, v)) { all_numeric = false; break; }
      if (!is_integral(v)) { any_fraction = true; all_int = false; }
      if (v != -1.0 && v != 1.0) pm1 = false;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (all_numeric && any_fraction) {
      kinds[j] = FeatureKind::real();
    } else if ((all_numeric && pm1) || toks.size() <= 2) {
      kinds[j] = FeatureKind::boolean();
      if (!(all_numeric && pm1)) boolean_token_map(toks, info[j]);
    } else if (all_numeric && all_int && lo >= 1 && hi <= 20) {
      kinds[j] = FeatureKind::ordinal(static_cast<int>(hi));
    } else if (toks.size() <= 50) {
      kinds[j] = FeatureKind::categorical(static_cast<int>(toks.size()));
      int level = 1;
      for (const auto& t : toks) info[j].token_map.emplace_back(t, level++);
    } else if (all_numeric) {
      kinds[j] = FeatureKind::real();
    } else {
      throw std::runtime_error(path + ": column " + std::to_string(j + 1) +
                               " has too many distinct tokens to infer a kind");
    }
    info[j].kind = kinds[j];
  }
  for (int j = 0; j < n; ++j) info[j].kind = kinds[j];

  DataTable table(m, kinds, names);
  for (int j = 0; j < n; ++j) {
    std::map<std::string, double> dict(info[j].token_map.begin(), info[j].token_map.end());
    for (int i = 0; i < m; ++i) {
      if (!raw[j][i]) continue;
      const std::string& t = *raw[j][i];
      FeatureValue v;
      try {
        if (kinds[j].tag == FeatureKind::Tag::Interval) {
          auto pos = t.find(':');
          if (pos == std::string::npos) throw std::invalid_argument("expected lo:hi");
          double a, b;
          if (!parse_double(trim(t.substr(0, pos)), a) || !parse_double(trim(t.substr(pos + 1)), b))
            throw std::invalid_argument("bad interval endpoints");
          v = FeatureValue::interval(a, b);
        } else if (!dict.empty()) {
          auto it = dict.find(t);
          if (it == dict.end()) throw std::invalid_argument("token not in dictionary");
          v = FeatureValue::number(it->second);
        } else {
          double x;
          if (!parse_double(t, x)) throw std::invalid_argument("not numeric");
          v = FeatureValue::number(x);
        }
        table.set(i, j, v);
      } catch (const std::exception& e) {
        throw std::runtime_error(path + ": unparseable cell at " + cell_ref(i, j) + " ('" + t +
                                 "'): " + e.what());
      }
    }
  }
  return {std::move(table), std::move(info)};
}

void write_csv(const DataTable& table, const std::string& path,
               const std::vector<ColumnInfo>& info, const std::string& na_token) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int m = table.rows(), n = table.cols();

  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += "\"\"";
      else q += ch;
    }
    return q + "\"";
  };

  for (int j = 0; j < n; ++j) out << (j ? "," : "") << quote(table.name(j));
  out << "\n";

  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out << ",";
      if (!table.observed(i, j)) { out << na_token; continue; }
      FeatureValue v = table.value(i, j);
      if (table.kind(j).tag == FeatureKind::Tag::Interval) {
        out << fmt(v.x) << ":" << fmt(v.hi);
        continue;
      }
      const std::vector<std::pair<std::string, double>>* dict = nullptr;
      if (j < static_cast<int>(info.size()) && !info[j].token_map.empty()) dict = &info[j].token_map;
      if (dict) {
        bool done = false;
        for (const auto& [tok, val] : *dict)
          if (val == v.x) { out << quote(tok); done = true; break; }
        if (!done) out << fmt(v.x);
      } else {
        out << fmt(v.x);
      }
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

Holdout split_holdout(const DataTable& table, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("holdout fraction must be in (0,1)");
  auto omega = table.omega();
  const long total = static_cast<long>(omega.size());
  if (total < 2) throw std::invalid_argument("need at least 2 observed entries to split");
  long h = std::lround(fraction * static_cast<double>(total));
  if (h == 0 || h == total)
    throw std::invalid_argument("degenerate split: holdout of " + std::to_string(h) + " of " +
                                std::to_string(total) + " entries");
  Rng rng = make_rng(seed);
  std::shuffle(omega.begin(), omega.end(), rng);
  Holdout out{table, {}};
  out.heldout.assign(omega.begin(), omega.begin() + h);
  std::sort(out.heldout.begin(), out.heldout.end());
  for (const auto& [i, j] : out.heldout) out.train.clear(i, j);
  return out;
}

}  // namespace glrm
