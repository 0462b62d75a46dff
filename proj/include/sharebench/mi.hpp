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

// Mutual-information estimators, all in nats:
//   * plug-in MI of two categorical sequences,
//   * equal-frequency binned MI for continuous features (optionally joined
//     with a categorical column),
//   * the Kraskov-Stoegbauer-Grassberger kNN estimator (algorithm 1).

#ifndef SHAREBENCH_MI_HPP_
#define SHAREBENCH_MI_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include "sharebench/data.hpp"
#include "sharebench/error.hpp"

namespace sharebench {

enum class MIMethod { kPluginDiscrete, kBinned, kKsg };

inline const char* MIMethodName(MIMethod m) {
  switch (m) {
    case MIMethod::kPluginDiscrete: return "plugin_discrete";
    case MIMethod::kBinned: return "binned";
    case MIMethod::kKsg: return "ksg";
  }
  return "unknown";
}

struct MIEstimate {
  double value = 0.0;
  MIMethod method = MIMethod::kPluginDiscrete;
  std::size_t sample_count = 0;
};

struct BinningSpec {
  int bins_per_feature = 8;  // equal-frequency is the only strategy
};

// Largest joint table the binned estimator will materialize.
inline constexpr double kMaxBinnedCells = 1e7;

namespace detail {

inline double XLogX(std::int64_t n) {
  return n > 1 ? static_cast<double>(n) * std::log(static_cast<double>(n)) : 0.0;
}

}  // namespace detail

// Dense two-way count table with a plug-in MI readout.
class ContingencyTable {
 public:
  ContingencyTable() = default;
  ContingencyTable(std::int64_t rows, std::int64_t cols)
      : rows_(rows),
        cols_(cols),
        counts_(static_cast<std::size_t>(rows * cols), 0),
        row_totals_(static_cast<std::size_t>(rows), 0),
        col_totals_(static_cast<std::size_t>(cols), 0) {}

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::int64_t total() const { return total_; }
  std::int64_t count(std::int64_t r, std::int64_t c) const {
    return counts_[static_cast<std::size_t>(r * cols_ + c)];
  }
  std::int64_t row_total(std::int64_t r) const {
    return row_totals_[static_cast<std::size_t>(r)];
  }
  std::int64_t col_total(std::int64_t c) const {
    return col_totals_[static_cast<std::size_t>(c)];
  }

  void Add(std::int64_t r, std::int64_t c, std::int64_t delta = 1) {
    counts_[static_cast<std::size_t>(r * cols_ + c)] += delta;
    row_totals_[static_cast<std::size_t>(r)] += delta;
    col_totals_[static_cast<std::size_t>(c)] += delta;
    total_ += delta;
  }

  // Plug-in MI of the empirical joint. Zero cells contribute nothing; a
  // table with fewer than two observations has MI 0.
  double MutualInformation() const {
    if (total_ < 2) return 0.0;
    const double n = static_cast<double>(total_);
    double mi = 0.0;
    for (std::int64_t r = 0; r < rows_; ++r) {
      const std::int64_t nr = row_totals_[static_cast<std::size_t>(r)];
      if (nr == 0) continue;
      for (std::int64_t c = 0; c < cols_; ++c) {
        const std::int64_t nrc = counts_[static_cast<std::size_t>(r * cols_ + c)];
        if (nrc == 0) continue;
        const double p = static_cast<double>(nrc) / n;
        mi += p * std::log(static_cast<double>(nrc) * n /
                           (static_cast<double>(nr) *
                            static_cast<double>(col_totals_[static_cast<std::size_t>(c)])));
      }
    }
    return std::max(0.0, mi);
  }

  bool operator==(const ContingencyTable&) const = default;

 private:
  std::int64_t rows_ = 0;
  std::int64_t cols_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> row_totals_;
  std::vector<std::int64_t> col_totals_;
  std::int64_t total_ = 0;
};

// Plug-in MI maintained under single-observation updates in O(1), via
//   N * I = sum f(n_rc) - sum f(n_r) - sum f(n_c) + f(N),  f(n) = n ln n.
// Agrees with ContingencyTable::MutualInformation to rounding (~1e-13).
class IncrementalPluginMI {
 public:
  IncrementalPluginMI() = default;
  IncrementalPluginMI(std::int64_t rows, std::int64_t cols) : table_(rows, cols) {}

  const ContingencyTable& table() const { return table_; }

  void Add(std::int64_t r, std::int64_t c) { Update(r, c, +1); }
  void Remove(std::int64_t r, std::int64_t c) { Update(r, c, -1); }

  double Value() const { return Evaluate(joint_, row_, col_, table_.total()); }

  double ValueIfAdded(std::int64_t r, std::int64_t c) const {
    const std::int64_t nrc = table_.count(r, c);
    const std::int64_t nr = table_.row_total(r);
    const std::int64_t nc = table_.col_total(c);
    return Evaluate(joint_ - detail::XLogX(nrc) + detail::XLogX(nrc + 1),
                    row_ - detail::XLogX(nr) + detail::XLogX(nr + 1),
                    col_ - detail::XLogX(nc) + detail::XLogX(nc + 1),
                    table_.total() + 1);
  }

  // Value after relabelling one observation from column `from` to `to`
  // within row `r`.
  double ValueIfMoved(std::int64_t r, std::int64_t from, std::int64_t to) const {
    if (from == to) return Value();
    const std::int64_t a = table_.count(r, from);
    const std::int64_t b = table_.count(r, to);
    const std::int64_t ca = table_.col_total(from);
    const std::int64_t cb = table_.col_total(to);
    const double joint = joint_ - detail::XLogX(a) + detail::XLogX(a - 1) -
                         detail::XLogX(b) + detail::XLogX(b + 1);
    const double col = col_ - detail::XLogX(ca) + detail::XLogX(ca - 1) -
                       detail::XLogX(cb) + detail::XLogX(cb + 1);
    return Evaluate(joint, row_, col, table_.total());
  }

 private:
  void Update(std::int64_t r, std::int64_t c, std::int64_t delta) {
    const std::int64_t nrc = table_.count(r, c);
    const std::int64_t nr = table_.row_total(r);
    const std::int64_t nc = table_.col_total(c);
    joint_ += detail::XLogX(nrc + delta) - detail::XLogX(nrc);
    row_ += detail::XLogX(nr + delta) - detail::XLogX(nr);
    col_ += detail::XLogX(nc + delta) - detail::XLogX(nc);
    table_.Add(r, c, delta);
  }

  static double Evaluate(double joint, double row, double col, std::int64_t n) {
    if (n < 2) return 0.0;
    const double v = (joint - row - col + detail::XLogX(n)) / static_cast<double>(n);
    return std::max(0.0, v);
  }

  ContingencyTable table_;
  double joint_ = 0.0;
  double row_ = 0.0;
  double col_ = 0.0;
};

// Plug-in MI of two categorical sequences. Domain sizes default to
// max(index) + 1.
inline MIEstimate MiDiscretePlugin(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw ShapeError("mi_discrete_plugin: sequences have lengths " +
                     std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  if (a.empty()) throw ShapeError("mi_discrete_plugin: empty sequences");
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  if (*std::min_element(a.begin(), a.end()) < 0 ||
      *std::min_element(b.begin(), b.end()) < 0) {
    throw ShapeError("mi_discrete_plugin: negative category index");
  }
  ContingencyTable table(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i) table.Add(a[i], b[i]);
  return {table.MutualInformation(), MIMethod::kPluginDiscrete, a.size()};
}

// Per-feature equal-frequency discretizer. Cut points are snapped to gaps
// between distinct values, so tied values never straddle a bin boundary.
class EqualFrequencyBinner {
 public:
  EqualFrequencyBinner() = default;

  static EqualFrequencyBinner Fit(const Eigen::MatrixXd& x, int bins_per_feature) {
    if (bins_per_feature < 2) throw ConfigError("bins_per_feature must be >= 2");
    if (x.rows() < bins_per_feature) {
      throw ConfigError("binning needs at least bins_per_feature samples (" +
                        std::to_string(bins_per_feature) + "), got " +
                        std::to_string(x.rows()));
    }
    EqualFrequencyBinner b;
    b.bins_ = bins_per_feature;
    b.thresholds_.resize(static_cast<std::size_t>(x.cols()));
    std::vector<double> col(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, j);
      b.thresholds_[static_cast<std::size_t>(j)] = CutPoints(col, bins_per_feature);
    }
    return b;
  }

  int bins_per_feature() const { return bins_; }
  int feature_count() const { return static_cast<int>(thresholds_.size()); }
  const std::vector<double>& thresholds(int feature) const {
    return thresholds_[static_cast<std::size_t>(feature)];
  }

  // Values <= the first threshold land in bin 0.
  int Bin(int feature, double v) const {
    const auto& t = thresholds_[static_cast<std::size_t>(feature)];
    return static_cast<int>(std::lower_bound(t.begin(), t.end(), v) - t.begin());
  }

  // Mixed-radix code of a feature row, in [0, bins^d).
  template <typename Row>
  std::int64_t Encode(const Row& row) const {
    std::int64_t code = 0;
    for (int j = 0; j < feature_count(); ++j) code = code * bins_ + Bin(j, row[j]);
    return code;
  }

  double CellCount() const { return std::pow(double(bins_), feature_count()); }

 private:
  static std::vector<double> CutPoints(std::vector<double> values, int bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> distinct;
    std::vector<std::size_t> cum;  // #values <= distinct[i]
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i + 1 == values.size() || values[i + 1] != values[i]) {
        distinct.push_back(values[i]);
        cum.push_back(i + 1);
      }
    }
    std::vector<double> cuts;
    if (distinct.size() < 2) return cuts;
    const double n = static_cast<double>(values.size());
    // Candidate edges: after distinct[0..m-2] (the last edge is the top).
    const std::size_t m = distinct.size() - 1;
    for (int i = 1; i < bins; ++i) {
      const double target = n * i / bins;
      auto it = std::lower_bound(cum.begin(), cum.begin() + static_cast<std::ptrdiff_t>(m),
                                 static_cast<std::size_t>(std::ceil(target)));
      std::size_t best = static_cast<std::size_t>(it - cum.begin());
      if (best >= m) best = m - 1;
      if (best > 0 && std::abs(double(cum[best - 1]) - target) <=
                          std::abs(double(cum[best]) - target)) {
        --best;
      }
      cuts.push_back(distinct[best]);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
  }

  int bins_ = 2;
  std::vector<std::vector<double>> thresholds_;
};

inline void CheckBinnedCapacity(const EqualFrequencyBinner& binner, int extra_factor) {
  if (binner.CellCount() * extra_factor > kMaxBinnedCells) {
    throw CapacityError("binned MI table would need " +
                        std::to_string(binner.CellCount() * extra_factor) +
                        " cells (limit 1e7); reduce features or bins");
  }
}

// I(X, S; Y): each feature is discretized into equal-frequency bins, the bin
// tuple is joined with S, and the plug-in estimator is applied.
inline MIEstimate MiBinned(const Eigen::MatrixXd& x, std::span<const int> s,
                           std::span<const int> y, const BinningSpec& spec,
                           int sensitive_count = 0, int label_count = 0) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (s.size() != n || y.size() != n) {
    throw ShapeError("mi_binned: x, s and y must have the same length");
  }
  if (n == 0) throw ShapeError("mi_binned: empty input");
  if (sensitive_count <= 0) sensitive_count = *std::max_element(s.begin(), s.end()) + 1;
  if (label_count <= 0) label_count = *std::max_element(y.begin(), y.end()) + 1;
  if (spec.bins_per_feature < 2) throw ConfigError("bins_per_feature must be >= 2");
  if (std::pow(double(spec.bins_per_feature), double(x.cols())) * sensitive_count >
      kMaxBinnedCells) {
    throw CapacityError("binned MI table exceeds 1e7 cells");
  }
  const auto binner = EqualFrequencyBinner::Fit(x, spec.bins_per_feature);
  const auto rows = static_cast<std::int64_t>(binner.CellCount()) * sensitive_count;
  ContingencyTable table(rows, label_count);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t z =
        binner.Encode(x.row(static_cast<Eigen::Index>(i))) * sensitive_count + s[i];
    table.Add(z, y[i]);
  }
  return {table.MutualInformation(), MIMethod::kBinned, n};
}

// I(X, S; Y) of a dataset.
inline MIEstimate MiBinned(const TabularDataset& d, const BinningSpec& spec) {
  const auto s = d.SensitiveColumn();
  const auto y = d.LabelColumn();
  return MiBinned(d.FeatureMatrix(), s, y, spec, d.schema().sensitive_count(),
                  d.schema().label_count());
}

// I(X; Z) for two continuous blocks, both sides discretized.
inline MIEstimate MiBinnedContinuous(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                                     const BinningSpec& spec) {
  if (x.rows() != z.rows()) throw ShapeError("mi_binned: x and z lengths differ");
  const auto bx = EqualFrequencyBinner::Fit(x, spec.bins_per_feature);
  const auto bz = EqualFrequencyBinner::Fit(z, spec.bins_per_feature);
  if (bx.CellCount() * bz.CellCount() > kMaxBinnedCells) {
    throw CapacityError("binned MI table exceeds 1e7 cells");
  }
  ContingencyTable table(static_cast<std::int64_t>(bx.CellCount()),
                         static_cast<std::int64_t>(bz.CellCount()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    table.Add(bx.Encode(x.row(i)), bz.Encode(z.row(i)));
  }
  return {table.MutualInformation(), MIMethod::kBinned,
          static_cast<std::size_t>(x.rows())};
}

// KSG estimator (algorithm 1, max-norm):
//   I = psi(k) + psi(N) - < psi(n_x + 1) + psi(n_z + 1) >
// Brute-force O(N^2) neighbour search with a fixed summation order.
inline MIEstimate MiKsg(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, int k) {
  const Eigen::Index n = x.rows();
  if (z.rows() != n) throw ShapeError("mi_ksg: x and z lengths differ");
  if (k < 1 || k >= n) {
    throw ConfigError("mi_ksg: k must satisfy 1 <= k < n (k=" + std::to_string(k) +
                      ", n=" + std::to_string(n) + ")");
  }
  std::vector<double> dx(static_cast<std::size_t>(n));
  std::vector<double> dz(static_cast<std::size_t>(n));
  std::vector<double> joint(static_cast<std::size_t>(n - 1));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = (x.row(i) - x.row(j)).cwiseAbs().maxCoeff();
      const double b = (z.row(i) - z.row(j)).cwiseAbs().maxCoeff();
      dx[static_cast<std::size_t>(j)] = a;
      dz[static_cast<std::size_t>(j)] = b;
      if (j != i) joint[m++] = std::max(a, b);
    }
    std::nth_element(joint.begin(), joint.begin() + (k - 1), joint.end());
    const double eps = joint[static_cast<std::size_t>(k - 1)];
    std::int64_t nx = 0;
    std::int64_t nz = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (dx[static_cast<std::size_t>(j)] < eps) ++nx;
      if (dz[static_cast<std::size_t>(j)] < eps) ++nz;
    }
    acc += boost::math::digamma(static_cast<double>(nx + 1)) +
           boost::math::digamma(static_cast<double>(nz + 1));
  }
  const double value = boost::math::digamma(static_cast<double>(k)) +
                       boost::math::digamma(static_cast<double>(n)) -
                       acc / static_cast<double>(n);
  return {value, MIMethod::kKsg, static_cast<std::size_t>(n)};
}

}  // namespace sharebench

#endif  // SHAREBENCH_MI_HPP_
