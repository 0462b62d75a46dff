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

#include <algorithm>
#include <cmath>

#include "gtest/gtest.h"
#include "sharebench/gmm.hpp"
#include "sharebench/random.hpp"

namespace sharebench {
namespace {

Eigen::MatrixXd NormalCloud(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = StandardNormal(rng);
  }
  return x;
}

TEST(FitGmmTest, ConstantCloudSitsOnTheFloor) {
  Eigen::MatrixXd x(50, 2);
  x.col(0).setConstant(3.0);
  x.col(1).setConstant(-1.5);
  const GaussianMixture g = FitGmm(x, 1, 0);
  ASSERT_EQ(g.component_count(), 1);
  EXPECT_DOUBLE_EQ(g.means[0](0), 3.0);
  EXPECT_DOUBLE_EQ(g.means[0](1), -1.5);
  EXPECT_DOUBLE_EQ(g.variances[0](0), kVarianceFloor);
  EXPECT_DOUBLE_EQ(g.variances[0](1), kVarianceFloor);
}

TEST(FitGmmTest, RecoversSeparatedClusters) {
  Eigen::MatrixXd x = NormalCloud(2000, 1, 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) += i % 2 == 0 ? -5.0 : 5.0;
  const GaussianMixture g = FitGmm(x, 2, 1);
  ASSERT_EQ(g.component_count(), 2);
  const int lo = g.means[0](0) < g.means[1](0) ? 0 : 1;
  EXPECT_NEAR(g.means[static_cast<std::size_t>(lo)](0), -5.0, 0.2);
  EXPECT_NEAR(g.means[static_cast<std::size_t>(1 - lo)](0), 5.0, 0.2);
  EXPECT_NEAR(g.weights[0], 0.5, 0.05);
  EXPECT_NEAR(g.weights[1], 0.5, 0.05);
}

TEST(FitGmmTest, SingleComponentOnStandardNormal) {
  const GaussianMixture g = FitGmm(NormalCloud(5000, 1, 9), 1, 2);
  EXPECT_NEAR(g.means[0](0), 0.0, 0.05);
  EXPECT_NEAR(g.variances[0](0), 1.0, 0.1);
}

TEST(FitGmmTest, DeterministicForSeed) {
  const Eigen::MatrixXd x = NormalCloud(400, 2, 3);
  EXPECT_EQ(FitGmm(x, 3, 7), FitGmm(x, 3, 7));
}

TEST(FitGmmTest, LogLikelihoodNeverDecreases) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Eigen::MatrixXd x = NormalCloud(600, 2, seed);
    for (Eigen::Index i = 0; i < x.rows(); i += 3) x(i, 0) += 4.0;
    const GmmFitResult r = FitGmmDetailed(x, {3, seed, 200, 1e-9});
    for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i) {
      EXPECT_GE(r.log_likelihood_trace[i], r.log_likelihood_trace[i - 1] - 1e-9);
    }
  }
}

TEST(FitGmmTest, WeightsSumToOneAndDensityIsNormalized) {
  const GaussianMixture g = FitGmm(NormalCloud(500, 1, 4), 2, 4);
  double total = 0.0;
  for (double w : g.weights) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Trapezoid over a wide grid.
  double integral = 0.0;
  const double h = 0.001;
  for (double v = -12.0; v < 12.0; v += h) {
    Eigen::VectorXd p(1);
    p(0) = v;
    integral += std::exp(g.LogDensity(p)) * h;
  }
  EXPECT_NEAR(integral, 1.0, 1e-6);
}

TEST(FitGmmTest, DegenerateComponentsAreDropped) {
  // Two distinct values only: a third component has nothing to explain.
  Eigen::MatrixXd x(40, 1);
  for (Eigen::Index i = 0; i < 40; ++i) x(i, 0) = i % 2 == 0 ? 0.0 : 1.0;
  // tol 0 keeps EM running long enough for the floor streak to trigger.
  const GmmFitResult r = FitGmmDetailed(x, {3, 0, 200, 0.0});
  EXPECT_GE(r.components_dropped, 1);
  r.model.Validate();
}

TEST(FitGmmTest, RejectsBadArguments) {
  const Eigen::MatrixXd x = NormalCloud(10, 2, 1);
  EXPECT_THROW(FitGmm(x, 0, 0), ConfigError);
  EXPECT_THROW(FitGmm(x, 4, 0), ConfigError);  // needs 12 points
  EXPECT_THROW(FitGmm(x, 1, 0, 0), ConfigError);
}

}  // namespace
}  // namespace sharebench
