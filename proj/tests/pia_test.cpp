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
#include <map>
#include <vector>

#include "gtest/gtest.h"
#include "sharebench/pia.hpp"
#include "test_util.hpp"

namespace sharebench {
namespace {

using testing::BinarySchema;
using testing::TwoByTwoSpec;

// A dataset whose class-0 proportion of s = 1 is exactly p (n records).
TabularDataset WithProportion(double p, std::size_t n) {
  std::vector<Record> rs;
  const auto hits = static_cast<std::size_t>(std::llround(p * n));
  for (std::size_t i = 0; i < n; ++i) rs.push_back({{0.0}, i < hits ? 1 : 0, 0});
  return TabularDataset(BinarySchema(), rs);
}

// Always returns the same records, ignoring n and seed.
SamplingFn Fixed(TabularDataset d) {
  return [d](std::size_t, std::uint64_t, std::optional<int>) { return d; };
}

TEST(InferProportionTest, PerfectDiscriminatorCounts) {
  const ExactFeatureDiscriminator g(1);
  EXPECT_DOUBLE_EQ(InferProportion(Fixed(WithProportion(0.5, 100)), g, 100, 0, 1).r_hat, 0.5);
}

TEST(InferProportionTest, DiffusionOracleWithinPointOne) {
  int close = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = FilterBalanced(SynthesizeDataset(TwoByTwoSpec(2, 2000, seed)), seed);
    const CellOracle o = FitOracle(d, 2, NoiseSchedule::GeometricVe(), seed);
    const auto est = InferProportion(MakeOracleSampler(o, Sampler::kNcsnLangevin),
                                     ExactFeatureDiscriminator(1), 200, 0, seed);
    close += std::abs(est.r_hat - 0.5) <= 0.1;
  }
  EXPECT_GE(close, 9);
}

TEST(InferProportionTest, BiasedDiscriminatorArithmetic) {
  const NoisyDiscriminator g(1, ConfusionSpec{0.8, 0.1, 7});
  EXPECT_FALSE(g.spec().IsSymmetric());
  for (const auto& [p, expect] : {std::pair{0.1, 0.17}, std::pair{0.9, 0.73}}) {
    const auto boot = MakeEmpiricalSampler(WithProportion(p, 1000));
    EXPECT_NEAR(InferProportion(boot, g, 10000, 0, 3).r_hat, expect, 0.02);
  }
}

TEST(InferProportionTest, NoisyLimitProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const double tpr = 0.5 + 0.5 * Uniform01(rng);
    const double fpr = 0.5 * Uniform01(rng);
    const double p = Uniform01(rng);
    const NoisyDiscriminator g(1, ConfusionSpec{tpr, fpr, static_cast<std::uint64_t>(trial)});
    const auto boot = MakeEmpiricalSampler(WithProportion(p, 1000));
    const double truth = std::llround(p * 1000) / 1000.0;
    EXPECT_NEAR(InferProportion(boot, g, 10000, 0, trial).r_hat,
                truth * tpr + (1 - truth) * fpr, 0.02);
  }
}

TEST(InferProportionTest, DeterministicAndOnTheGrid) {
  const auto boot = MakeEmpiricalSampler(WithProportion(0.37, 500));
  const NoisyDiscriminator g(1, ConfusionSpec{0.9, 0.2, 1});
  for (std::size_t m : {1u, 7u, 100u, 333u}) {
    const auto a = InferProportion(boot, g, m, 0, 42);
    const auto b = InferProportion(boot, g, m, 0, 42);
    EXPECT_EQ(a.r_hat, b.r_hat);
    EXPECT_EQ(a.r_hat * static_cast<double>(m), static_cast<double>(a.positives));
    EXPECT_EQ(a.positives, b.positives);
  }
  EXPECT_THROW(InferProportion(boot, g, 0, 0, 1), ConfigError);
}

TEST(HoeffdingTest, TabulatedFailureProbabilities) {
  EXPECT_NEAR(HoeffdingFailureProb(150, 0.1), 2.0 * std::exp(-3.0), 1e-15);
  EXPECT_NEAR(HoeffdingFailureProb(150, 0.1), 0.0996, 5e-5);
  EXPECT_EQ(HoeffdingFailureProb(10, 0.0), 1.0);
  const std::map<std::size_t, double> table = {
      {30, 1.0}, {50, 0.736}, {100, 0.271}, {200, 0.037}, {300, 0.005}};
  for (const auto& [m, p] : table) EXPECT_NEAR(HoeffdingFailureProb(m, 0.1), p, 5e-4) << m;
}

TEST(HoeffdingTest, RequiredSampleSize) {
  EXPECT_EQ(RequiredSampleSize(0.1, 0.1), 150u);
  EXPECT_EQ(RequiredSampleSize(2.0 * std::exp(-2.0), 0.1), 100u);
  EXPECT_THROW(RequiredSampleSize(0.1, 0.0), ConfigError);
  EXPECT_THROW(RequiredSampleSize(1.5, 0.1), ConfigError);
}

TEST(HoeffdingTest, EpsilonInvertsFailureProb) {
  for (std::size_t m : {30u, 100u, 1000u}) {
    EXPECT_NEAR(HoeffdingFailureProb(m, EpsilonForFailureProb(m, 0.05)), 0.05, 1e-12);
  }
}

Schema ThreeWay() {
  Schema s = BinarySchema();
  s.sensitive_domain = {"a", "b", "c"};
  return s;
}

TEST(OneVsAllTest, ExactEstimatesPartitionUnity) {
  std::vector<Record> rs;
  for (int i = 0; i < 90; ++i) rs.push_back({{0.0}, i % 3 == 0 ? 0 : (i % 5 == 0 ? 1 : 2), 0});
  const auto boot = MakeEmpiricalSampler(TabularDataset(ThreeWay(), rs));
  const ExactFeatureDiscriminator g0(0), g1(1), g2(2);
  const auto est = OneVsAllInfer(boot, {{0, &g0}, {1, &g1}, {2, &g2}}, 3, 250, 0, 4);
  double sum = 0.0;
  for (const auto& [s, e] : est) sum += e.r_hat;
  EXPECT_DOUBLE_EQ(sum, 1.0);
}

TEST(OneVsAllTest, TenWayPropertyWithinPointOne) {
  Schema s = BinarySchema();
  s.sensitive_domain.clear();
  for (int i = 0; i < 10; ++i) s.sensitive_domain.push_back("d" + std::to_string(i));
  std::vector<Record> rs;
  for (int i = 0; i < 1000; ++i) rs.push_back({{0.0}, i % 10, 0});
  const auto boot = MakeEmpiricalSampler(TabularDataset(s, rs));
  std::vector<ExactFeatureDiscriminator> gs;
  for (int i = 0; i < 10; ++i) gs.emplace_back(i);
  std::map<int, const Discriminator*> map;
  for (int i = 0; i < 10; ++i) map[i] = &gs[static_cast<std::size_t>(i)];
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    bool all = true;
    for (const auto& [c, e] : OneVsAllInfer(boot, map, 10, 300, 0, seed)) {
      all = all && std::abs(e.r_hat - 0.1) <= 0.1;
    }
    good += all;
  }
  EXPECT_GE(good, 9);
}

TEST(OneVsAllTest, NoisyEstimatesAreNotRenormalized) {
  std::vector<Record> rs;
  for (int i = 0; i < 90; ++i) rs.push_back({{0.0}, i % 3, 0});
  const auto boot = MakeEmpiricalSampler(TabularDataset(ThreeWay(), rs));
  const NoisyDiscriminator g0(0, {0.9, 0.3, 1}), g1(1, {0.9, 0.3, 2}), g2(2, {0.9, 0.3, 3});
  const auto est = OneVsAllInfer(boot, {{0, &g0}, {1, &g1}, {2, &g2}}, 3, 3000, 0, 4);
  double sum = 0.0;
  for (const auto& [s, e] : est) sum += e.r_hat;
  EXPECT_NEAR(sum, 3 * (0.9 / 3 + 0.3 * 2 / 3), 0.05);
  EXPECT_THROW(OneVsAllInfer(boot, {{0, &g0}}, 3, 10, 0, 1), ConfigError);
}

TEST(OverallProportionTest, WeightedMean) {
  auto est = [](double r) {
    PropertyEstimate e;
    e.r_hat = r;
    return e;
  };
  EXPECT_DOUBLE_EQ(OverallProportion({{0, est(0.2)}, {1, est(0.6)}}, {{0, 100}, {1, 300}}), 0.5);
  EXPECT_DOUBLE_EQ(OverallProportion({{1, est(0.3)}}, {{1, 7}}), 0.3);
  EXPECT_DOUBLE_EQ(OverallProportion({{0, est(0.1)}, {1, est(0.9)}}, {{0, 5}, {1, 5}}), 0.5);
  EXPECT_THROW(OverallProportion({{0, est(0.1)}}, {{1, 5}}), ConfigError);
}

TEST(LearnedDiscriminatorTest, PicksUpAFeatureCarryingS) {
  SyntheticSpec spec = TwoByTwoSpec(2, 2000, 3);
  for (int y = 0; y < 2; ++y) spec.cell_means[1][static_cast<std::size_t>(y)][1] = 3.0;
  const auto d = SynthesizeDataset(spec);
  TrainConfig cfg;
  const LearnedDiscriminator g = TrainLearnedDiscriminator(d, 1, cfg);
  const auto est = InferProportion(MakeEmpiricalSampler(d), g, 2000, std::nullopt, 1);
  EXPECT_NEAR(est.r_hat, PropertyProportion(d, 1), 0.08);
}

}  // namespace
}  // namespace sharebench
