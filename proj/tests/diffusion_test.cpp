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

#include <cmath>
#include <numbers>
#include <vector>

#include "gtest/gtest.h"
#include "sharebench/diffusion.hpp"
#include "test_util.hpp"

namespace sharebench {
namespace {

using testing::KsAgainstStandardNormal;

GaussianMixture Single(std::vector<double> mean) {
  GaussianMixture g;
  g.weights = {1.0};
  g.means = {Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()))};
  g.variances = {Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mean.size()))};
  return g;
}

GaussianMixture TwoModes(double w0, double m0, double v0, double m1, double v1) {
  GaussianMixture g;
  g.weights = {w0, 1.0 - w0};
  g.means = {Eigen::VectorXd::Constant(1, m0), Eigen::VectorXd::Constant(1, m1)};
  g.variances = {Eigen::VectorXd::Constant(1, v0), Eigen::VectorXd::Constant(1, v1)};
  return g;
}

// Noised 1-D two-component log density written out by hand.
double NoisedLogDensity(double x, double w0, double m0, double v0, double m1, double v1,
                        const NoiseSchedule& sched, int t) {
  double scale = 1.0, add = 0.0;
  if (sched.kind == ScheduleKind::kVpDdpm) {
    scale = std::sqrt(sched.alpha_bar(t));
    add = 1.0 - sched.alpha_bar(t);
  } else {
    add = sched.sigma(t) * sched.sigma(t);
  }
  auto pdf = [&](double m, double v) {
    const double var = v * scale * scale + add;
    const double d = x - m * scale;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
  };
  return std::log(w0 * pdf(m0, v0) + (1.0 - w0) * pdf(m1, v1));
}

TEST(ScoreTest, StandardNormalClosedForms) {
  const GaussianMixture g = Single({0.0, 0.0});
  const auto ve = NoiseSchedule::GeometricVe();
  const auto vp = NoiseSchedule::LinearVp();
  Eigen::VectorXd x(2);
  x << 0.7, -2.3;
  for (int t : {1, 10, 50, 100}) {
    const double s2 = ve.sigma(t) * ve.sigma(t);
    EXPECT_TRUE(Score(g, x, ve, t).isApprox(-x / (1.0 + s2), 1e-14));
  }
  // The vp process keeps N(0, I) fixed.
  for (int t : {1, 500, 1000}) EXPECT_TRUE(Score(g, x, vp, t).isApprox(-x, 1e-12));
}

TEST(ScoreTest, VanishesAtTheNoisedMean) {
  const GaussianMixture g = Single({1.5, -0.5});
  const auto vp = NoiseSchedule::LinearVp();
  const auto ve = NoiseSchedule::GeometricVe();
  for (int t : {1, 300, 1000}) {
    const Eigen::VectorXd at = std::sqrt(vp.alpha_bar(t)) * g.means[0];
    EXPECT_LT(Score(g, at, vp, t).norm(), 1e-14);
  }
  for (int t : {1, 60}) EXPECT_LT(Score(g, g.means[0], ve, t).norm(), 1e-14);
}

TEST(ScoreTest, MatchesFiniteDifferences) {
  const double w0 = 0.3, m0 = -2.0, v0 = 0.5, m1 = 3.0, v1 = 1.5;
  const GaussianMixture g = TwoModes(w0, m0, v0, m1, v1);
  Rng rng(12);
  for (const auto& sched : {NoiseSchedule::LinearVp(), NoiseSchedule::GeometricVe()}) {
    for (int probe = 0; probe < 100; ++probe) {
      const int t = 1 + static_cast<int>(UniformIndex(rng, static_cast<std::size_t>(sched.T)));
      const double x = -6.0 + 12.0 * Uniform01(rng);
      const double h = 1e-5;
      const double fd = (NoisedLogDensity(x + h, w0, m0, v0, m1, v1, sched, t) -
                         NoisedLogDensity(x - h, w0, m0, v0, m1, v1, sched, t)) /
                        (2 * h);
      const double got = Score(g, Eigen::VectorXd::Constant(1, x), sched, t)(0);
      EXPECT_LE(std::abs(got - fd), 1e-5 * std::max(std::abs(fd), 1e-3))
          << "t=" << t << " x=" << x;
    }
  }
}

TEST(ScheduleTest, DefaultLadders) {
  const auto ve = NoiseSchedule::GeometricVe();
  EXPECT_EQ(ve.T, 100);
  EXPECT_DOUBLE_EQ(ve.sigma_max(), 10.0);
  EXPECT_DOUBLE_EQ(ve.sigma_min(), 0.01);
  const auto vp = NoiseSchedule::LinearVp();
  EXPECT_EQ(vp.T, 1000);
  EXPECT_DOUBLE_EQ(vp.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(vp.beta(1000), 0.02);
  EXPECT_THROW(vp.CheckTime(0), ConfigError);
  EXPECT_THROW(vp.CheckTime(1001), ConfigError);
}

// x_T drawn analytically from the forward process is indistinguishable
// from the N(0, 1) prior.
TEST(ScheduleTest, VpMarginalMatchesPrior) {
  const auto vp = NoiseSchedule::LinearVp();
  const double ab = vp.alpha_bar(vp.T);
  Rng rng(4);
  std::vector<double> xs(20000);
  for (auto& v : xs) {
    const double x0 = Uniform01(rng) < 0.3 ? -2.0 + StandardNormal(rng) : 3.0 + StandardNormal(rng);
    v = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * StandardNormal(rng);
  }
  EXPECT_LE(KsAgainstStandardNormal(xs), 0.02);
}

void ExpectMoments(const Eigen::MatrixXd& x, const std::vector<double>& mean) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double m = x.col(j).mean();
    const double var = (x.col(j).array() - m).square().mean();
    EXPECT_NEAR(m, mean[static_cast<std::size_t>(j)], 0.1);
    EXPECT_NEAR(var, 1.0, 0.15);
  }
}

TEST(NcsnTest, MomentsOfSingleGaussian) {
  const std::vector<double> mu = {1.0, -2.0};
  ExpectMoments(SampleNcsnLangevin(Single(mu), NoiseSchedule::GeometricVe(), 5000, 3), mu);
}

TEST(NcsnTest, ZeroStepsReturnsPriorDraws) {
  const auto sched = NoiseSchedule::GeometricVe(100, 10.0, 0.01, 0);
  const Eigen::MatrixXd x = SampleNcsnLangevin(Single({0.0}), sched, 5000, 8);
  const double m = x.col(0).mean();
  EXPECT_NEAR((x.col(0).array() - m).square().mean(), 100.0, 10.0);
}

TEST(NcsnTest, ModeFractions) {
  const Eigen::MatrixXd x = SampleNcsnLangevin(TwoModes(0.3, -4.0, 1.0, 4.0, 1.0),
                                               NoiseSchedule::GeometricVe(), 10000, 5);
  const double left = (x.col(0).array() < 0.0).cast<double>().mean();
  EXPECT_NEAR(left, 0.3, 0.04);
  EXPECT_NEAR(1.0 - left, 0.7, 0.04);
}

TEST(DdpmTest, MomentsAndKs) {
  const Eigen::MatrixXd x =
      SampleDdpmAncestral(Single({0.0, 0.0}), NoiseSchedule::LinearVp(), 5000, 2);
  ExpectMoments(x, {0.0, 0.0});
  for (Eigen::Index j = 0; j < 2; ++j) {
    std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
    EXPECT_LE(KsAgainstStandardNormal(col), 0.03);
  }
}

TEST(DdpmTest, ZeroSamples) {
  const Eigen::MatrixXd x = SampleDdpmAncestral(Single({0.0}), NoiseSchedule::LinearVp(), 0, 2);
  EXPECT_EQ(x.rows(), 0);
}

TEST(SamplerTest, RowsDependOnlyOnTheirOwnStream) {
  const auto g = Single({0.5});
  const auto sched = NoiseSchedule::GeometricVe();
  const Eigen::MatrixXd a = SampleNcsnLangevin(g, sched, 10, 99);
  const Eigen::MatrixXd b = SampleNcsnLangevin(g, sched, 4, 99);
  EXPECT_EQ(a.topRows(4), b);
}

TEST(SamplerTest, KindMismatchIsRejected) {
  EXPECT_THROW(SampleNcsnLangevin(Single({0.0}), NoiseSchedule::LinearVp(), 1, 0), SamplingError);
  EXPECT_THROW(SampleDdpmAncestral(Single({0.0}), NoiseSchedule::GeometricVe(), 1, 0),
               SamplingError);
}

}  // namespace
}  // namespace sharebench
