// Copyright 2026 The ShareBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tabular (x, s, y) datasets: continuous features X, a categorical
// sensitive attribute S and a categorical label Y.

#ifndef SHAREBENCH_DATA_HPP_
#define SHAREBENCH_DATA_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sharebench/error.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

struct Schema {
  int feature_count = 1;
  std::vector<std::string> sensitive_domain;
  std::vector<std::string> label_domain;

  int sensitive_count() const {
    return static_cast<int>(sensitive_domain.size());
  }
  int label_count() const { return static_cast<int>(label_domain.size()); }

  std::optional<int> SensitiveIndex(std::string_view name) const {
    return IndexOf(sensitive_domain, name);
  }
  std::optional<int> LabelIndex(std::string_view name) const {
    return IndexOf(label_domain, name);
  }

  void Validate() const {
    if (feature_count < 1) throw ConfigError("schema: feature_count must be >= 1");
    if (sensitive_domain.size() < 2) {
      throw ConfigError("schema: sensitive domain needs at least 2 categories");
    }
    if (label_domain.size() < 2) {
      throw ConfigError("schema: label domain needs at least 2 categories");
    }
    CheckUnique(sensitive_domain, "sensitive");
    CheckUnique(label_domain, "label");
  }

  bool operator==(const Schema&) const = default;

 private:
  static std::optional<int> IndexOf(const std::vector<std::string>& domain,
                                    std::string_view name) {
    for (std::size_t i = 0; i < domain.size(); ++i) {
      if (domain[i] == name) return static_cast<int>(i);
    }
    return std::nullopt;
  }
  static void CheckUnique(const std::vector<std::string>& domain,
                          const char* what) {
    std::set<std::string> seen(domain.begin(), domain.end());
    if (seen.size() != domain.size()) {
      throw ConfigError(std::string("schema: duplicate ") + what + " category");
    }
  }
};

struct Record {
  std::vector<double> x;
  int s = 0;
  int y = 0;

  bool operator==(const Record&) const = default;
};

enum class Provenance { kOriginal, kPoisoned, kSynthetic, kTest };

inline const char* ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kOriginal: return "original";
    case Provenance::kPoisoned: return "poisoned";
    case Provenance::kSynthetic: return "synthetic";
    case Provenance::kTest: return "test";
  }
  return "unknown";
}

// An index-addressable, schema-checked collection of records. Record order is
// part of the value: seeded operations address records by position.
class TabularDataset {
 public:
  TabularDataset() = default;
  explicit TabularDataset(Schema schema,
                          Provenance provenance = Provenance::kOriginal)
      : schema_(std::move(schema)), provenance_(provenance) {
    schema_.Validate();
  }
  TabularDataset(Schema schema, std::vector<Record> records,
                 Provenance provenance = Provenance::kOriginal)
      : TabularDataset(std::move(schema), provenance) {
    for (std::size_t i = 0; i < records.size(); ++i) Check(records[i], i + 1);
    records_ = std::move(records);
  }

  const Schema& schema() const { return schema_; }
  Provenance provenance() const { return provenance_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }

  void Add(Record r) {
    Check(r, records_.size() + 1);
    records_.push_back(std::move(r));
  }
  void Reserve(std::size_t n) { records_.reserve(n); }

  // New dataset holding the records at `indices`, in that order.
  TabularDataset Select(const std::vector<std::size_t>& indices,
                        Provenance provenance) const {
    TabularDataset out(schema_, provenance);
    out.records_.reserve(indices.size());
    for (std::size_t i : indices) out.records_.push_back(records_.at(i));
    return out;
  }

  TabularDataset WithProvenance(Provenance provenance) const {
    TabularDataset out = *this;
    out.provenance_ = provenance;
    return out;
  }

  // Feature matrix, one row per record.
  Eigen::MatrixXd FeatureMatrix() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(records_.size()),
                      schema_.feature_count);
    for (std::size_t i = 0; i < records_.size(); ++i) {
      for (int j = 0; j < schema_.feature_count; ++j) {
        m(static_cast<Eigen::Index>(i), j) = records_[i].x[j];
      }
    }
    return m;
  }
  std::vector<int> SensitiveColumn() const {
    std::vector<int> out(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].s;
    return out;
  }
  std::vector<int> LabelColumn() const {
    std::vector<int> out(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].y;
    return out;
  }

  bool operator==(const TabularDataset& o) const {
    return schema_ == o.schema_ && records_ == o.records_;
  }

 private:
  void Check(const Record& r, std::size_t row) const {
    if (static_cast<int>(r.x.size()) != schema_.feature_count) {
      throw ShapeError("record " + std::to_string(row) + ": expected " +
                       std::to_string(schema_.feature_count) + " features, got " +
                       std::to_string(r.x.size()));
    }
    if (r.s < 0 || r.s >= schema_.sensitive_count()) {
      throw DomainError(row, "sensitive index out of range");
    }
    if (r.y < 0 || r.y >= schema_.label_count()) {
      throw DomainError(row, "label index out of range");
    }
  }

  Schema schema_;
  Provenance provenance_ = Provenance::kOriginal;
  std::vector<Record> records_;
};

// Count table over S x Y.
struct EmpiricalJoint {
  int sensitive_count = 0;
  int label_count = 0;
  std::vector<std::int64_t> counts;  // row-major [s][y]
  std::int64_t total = 0;

  EmpiricalJoint() = default;
  EmpiricalJoint(int s_count, int y_count)
      : sensitive_count(s_count),
        label_count(y_count),
        counts(static_cast<std::size_t>(s_count) * y_count, 0) {}

  std::int64_t count(int s, int y) const {
    return counts[static_cast<std::size_t>(s) * label_count + y];
  }
  std::int64_t& count(int s, int y) {
    return counts[static_cast<std::size_t>(s) * label_count + y];
  }
  double frequency(int s, int y) const {
    return total == 0 ? 0.0 : static_cast<double>(count(s, y)) / total;
  }
  std::int64_t label_total(int y) const {
    std::int64_t n = 0;
    for (int s = 0; s < sensitive_count; ++s) n += count(s, y);
    return n;
  }
  std::int64_t sensitive_total(int s) const {
    std::int64_t n = 0;
    for (int y = 0; y < label_count; ++y) n += count(s, y);
    return n;
  }

  bool operator==(const EmpiricalJoint&) const = default;
};

inline EmpiricalJoint ComputeEmpiricalJoint(const TabularDataset& d) {
  EmpiricalJoint joint(d.schema().sensitive_count(), d.schema().label_count());
  for (const Record& r : d.records()) ++joint.count(r.s, r.y);
  joint.total = static_cast<std::int64_t>(d.size());
  return joint;
}

// Fraction of records carrying sensitive value `s`, optionally restricted to
// records with label `y`.
inline double PropertyProportion(const TabularDataset& d, int s,
                                 std::optional<int> y = std::nullopt) {
  std::size_t hits = 0;
  std::size_t n = 0;
  for (const Record& r : d.records()) {
    if (y && r.y != *y) continue;
    ++n;
    if (r.s == s) ++hits;
  }
  if (n == 0) {
    throw UndefinedProportionError(
        y ? "no records with label index " + std::to_string(*y)
          : std::string("empty dataset"));
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

inline std::string CellName(int s, int y) {
  return "(" + std::to_string(s) + "," + std::to_string(y) + ")";
}

// Downsamples every (s, y) cell to the smallest cell count. Surviving records
// keep their original relative order.
inline TabularDataset FilterBalanced(const TabularDataset& d,
                                     std::uint64_t seed) {
  const Schema& schema = d.schema();
  const int ns = schema.sensitive_count();
  const int ny = schema.label_count();
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(ns * ny));
  for (std::size_t i = 0; i < d.size(); ++i) {
    cells[static_cast<std::size_t>(d[i].s * ny + d[i].y)].push_back(i);
  }
  std::size_t smallest = d.size();
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      const auto& cell = cells[static_cast<std::size_t>(s * ny + y)];
      if (cell.empty()) throw BalanceError("empty cell " + CellName(s, y));
      smallest = std::min(smallest, cell.size());
    }
  }
  std::vector<std::size_t> keep;
  keep.reserve(smallest * cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Rng rng(DeriveSeed(seed, c));
    for (std::size_t pos :
         SampleWithoutReplacement(cells[c].size(), smallest, rng)) {
      keep.push_back(cells[c][pos]);
    }
  }
  std::sort(keep.begin(), keep.end());
  return d.Select(keep, d.provenance());
}

// Seeded disjoint partition with |train| = round(train_fraction * |d|).
inline std::pair<TabularDataset, TabularDataset> SplitTrainTest(
    const TabularDataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(d.size())));
  Rng rng(seed);
  std::vector<std::size_t> order = SampleWithoutReplacement(d.size(), d.size(), rng);
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {d.Select(train, d.provenance()), d.Select(test, Provenance::kTest)};
}

// Ground-truth generator: (s, y) from a categorical table, x from the
// cell's Gaussian.
struct SyntheticSpec {
  Schema schema;
  std::vector<std::vector<double>> cell_weights;            // [s][y]
  std::vector<std::vector<std::vector<double>>> cell_means;  // [s][y][d]
  std::vector<std::vector<Eigen::MatrixXd>> cell_covariances;  // [s][y]
  std::size_t size = 0;
  std::uint64_t seed = 0;

  void Validate() const {
    schema.Validate();
    const auto ns = static_cast<std::size_t>(schema.sensitive_count());
    const auto ny = static_cast<std::size_t>(schema.label_count());
    const int d = schema.feature_count;
    if (cell_weights.size() != ns || cell_means.size() != ns ||
        cell_covariances.size() != ns) {
      throw SpecError("cell tables must have one row per sensitive category");
    }
    double sum = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      if (cell_weights[s].size() != ny || cell_means[s].size() != ny ||
          cell_covariances[s].size() != ny) {
        throw SpecError("cell tables must have one column per label");
      }
      for (std::size_t y = 0; y < ny; ++y) {
        const double w = cell_weights[s][y];
        if (!(w >= 0.0) || !std::isfinite(w)) {
          throw SpecError("cell weight " + CellName(int(s), int(y)) +
                          " must be a finite non-negative number");
        }
        sum += w;
        if (static_cast<int>(cell_means[s][y].size()) != d) {
          throw SpecError("cell mean " + CellName(int(s), int(y)) +
                          " has wrong dimension");
        }
        const Eigen::MatrixXd& cov = cell_covariances[s][y];
        if (cov.rows() != d || cov.cols() != d) {
          throw SpecError("cell covariance " + CellName(int(s), int(y)) +
                          " has wrong shape");
        }
        if (!cov.isApprox(cov.transpose(), 1e-12)) {
          throw SpecError("cell covariance " + CellName(int(s), int(y)) +
                          " is not symmetric");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
          throw SpecError("cell covariance " + CellName(int(s), int(y)) +
                          " is not positive-definite");
        }
      }
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw SpecError("cell weights must sum to 1");
    }
  }
};

inline TabularDataset SynthesizeDataset(const SyntheticSpec& spec) {
  spec.Validate();
  const int ns = spec.schema.sensitive_count();
  const int ny = spec.schema.label_count();
  const int d = spec.schema.feature_count;

  std::vector<double> weights;
  std::vector<Eigen::MatrixXd> factors;
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      weights.push_back(spec.cell_weights[s][y]);
      factors.push_back(Eigen::LLT<Eigen::MatrixXd>(spec.cell_covariances[s][y])
                            .matrixL()
                            .toDenseMatrix());
    }
  }
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  Rng rng(spec.seed);
  TabularDataset out(spec.schema, Provenance::kOriginal);
  out.Reserve(spec.size);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const int cell = pick(rng);
    const int s = cell / ny;
    const int y = cell % ny;
    for (int j = 0; j < d; ++j) z(j) = StandardNormal(rng);
    const Eigen::VectorXd x = factors[static_cast<std::size_t>(cell)] * z;
    Record r;
    r.x.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) r.x[j] = spec.cell_means[s][y][j] + x(j);
    r.s = s;
    r.y = y;
    out.Add(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV: header `x0,...,x{d-1},s,y`, one record per line.

namespace detail {

inline std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string ExpectedHeader(int feature_count) {
  std::string h;
  for (int j = 0; j < feature_count; ++j) h += "x" + std::to_string(j) + ",";
  return h + "s,y";
}

inline std::string FormatReal(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace detail

inline TabularDataset ReadCsv(std::istream& in, const Schema& schema) {
  schema.Validate();
  TabularDataset out(schema, Provenance::kOriginal);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != detail::ExpectedHeader(schema.feature_count)) {
    throw ParseError(0, "header '" + line + "' does not match schema (expected '" +
                            detail::ExpectedHeader(schema.feature_count) + "')");
  }
  const std::size_t expected_fields =
      static_cast<std::size_t>(schema.feature_count) + 2;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto fields = detail::SplitCommas(line);
    if (fields.size() != expected_fields) {
      throw ParseError(row, "expected " + std::to_string(expected_fields) +
                                " fields, got " + std::to_string(fields.size()));
    }
    Record r;
    r.x.resize(static_cast<std::size_t>(schema.feature_count));
    for (int j = 0; j < schema.feature_count; ++j) {
      const std::string_view f = fields[static_cast<std::size_t>(j)];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw ParseError(row, "column x" + std::to_string(j) + ": '" +
                                  std::string(f) + "' is not a real number");
      }
      r.x[static_cast<std::size_t>(j)] = v;
    }
    const std::string_view s_name = fields[expected_fields - 2];
    const std::string_view y_name = fields[expected_fields - 1];
    const auto s = schema.SensitiveIndex(s_name);
    if (!s) throw DomainError(row, "sensitive value '" + std::string(s_name) + "' not in schema");
    const auto y = schema.LabelIndex(y_name);
    if (!y) throw DomainError(row, "label '" + std::string(y_name) + "' not in schema");
    r.s = *s;
    r.y = *y;
    out.Add(std::move(r));
  }
  return out;
}

inline TabularDataset LoadCsv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return ReadCsv(in, schema);
}

// Reals are written in shortest round-trip form, so LoadCsv(SaveCsv(d)) == d.
inline void WriteCsv(std::ostream& out, const TabularDataset& d) {
  const Schema& schema = d.schema();
  out << detail::ExpectedHeader(schema.feature_count) << '\n';
  for (const Record& r : d.records()) {
    for (double v : r.x) out << detail::FormatReal(v) << ',';
    out << schema.sensitive_domain[static_cast<std::size_t>(r.s)] << ','
        << schema.label_domain[static_cast<std::size_t>(r.y)] << '\n';
  }
}

inline void SaveCsv(const std::string& path, const TabularDataset& d) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  WriteCsv(out, d);
}

}  // namespace sharebench

#endif  // SHAREBENCH_DATA_HPP_
