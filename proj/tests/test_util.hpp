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

// Fixtures shared by the unit tests, plus reference implementations that
// deliberately avoid the library code they check.

#ifndef SHAREBENCH_TESTS_TEST_UTIL_HPP_
#define SHAREBENCH_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "sharebench/sharebench.hpp"

namespace sharebench::testing {

inline Schema BinarySchema(int features = 1) {
  Schema s;
  s.feature_count = features;
  s.sensitive_domain = {"a", "b"};
  s.label_domain = {"neg", "pos"};
  return s;
}

// 2x2 cells with the given weights; x0 ~ N(+-mu, 1) by label, other
// features N(0, 1).
inline SyntheticSpec TwoByTwoSpec(int features, std::size_t size, std::uint64_t seed,
                                  double mu = 1.0,
                                  std::vector<std::vector<double>> weights = {{0.25, 0.25},
                                                                              {0.25, 0.25}}) {
  SyntheticSpec spec;
  spec.schema = BinarySchema(features);
  spec.cell_weights = std::move(weights);
  for (int s = 0; s < 2; ++s) {
    spec.cell_means.emplace_back();
    spec.cell_covariances.emplace_back();
    for (int y = 0; y < 2; ++y) {
      std::vector<double> m(static_cast<std::size_t>(features), 0.0);
      m[0] = y == 1 ? mu : -mu;
      spec.cell_means[static_cast<std::size_t>(s)].push_back(m);
      spec.cell_covariances[static_cast<std::size_t>(s)].push_back(
          Eigen::MatrixXd::Identity(features, features));
    }
  }
  spec.size = size;
  spec.seed = seed;
  return spec;
}

inline TabularDataset TwoByTwo(int features, std::size_t size, std::uint64_t seed,
                               double mu = 1.0) {
  return SynthesizeDataset(TwoByTwoSpec(features, size, seed, mu));
}

// Dataset from (x0, s, y) triples under BinarySchema(1).
inline TabularDataset FromTriples(const std::vector<std::tuple<double, int, int>>& rows) {
  std::vector<Record> records;
  for (const auto& [x, s, y] : rows) records.push_back({{x}, s, y});
  return TabularDataset(BinarySchema(1), std::move(records));
}

// Plug-in MI straight from the definition sum p(a,b) ln(p(a,b) / p(a)p(b)).
inline double ReferenceMi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() < 2) return 0.0;
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0 / n;
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : joint) mi += p * std::log(p / (pa[key.first] * pb[key.second]));
  return mi;
}

inline double ReferenceSyMi(const TabularDataset& d) {
  return ReferenceMi(d.SensitiveColumn(), d.LabelColumn());
}

inline double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One-sample Kolmogorov-Smirnov statistic against N(0, 1).
inline double KsAgainstStandardNormal(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = NormalCdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Correlated standard normal pairs.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> GaussianPairs(std::size_t n, double rho,
                                                                 std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1), z(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double a = StandardNormal(rng);
    const double b = StandardNormal(rng);
    x(i, 0) = a;
    z(i, 0) = rho * a + std::sqrt(1.0 - rho * rho) * b;
  }
  return {x, z};
}

}  // namespace sharebench::testing

#endif  // SHAREBENCH_TESTS_TEST_UTIL_HPP_
