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
#include <limits>
#include <map>
#include <vector>

#include "gtest/gtest.h"
#include "sharebench/fpa.hpp"
#include "test_util.hpp"

namespace sharebench {
namespace {

using testing::FromTriples;
using testing::ReferenceMi;
using testing::ReferenceSyMi;
using testing::TwoByTwo;

TabularDataset Balanced(std::size_t n, std::uint64_t seed) {
  return FilterBalanced(TwoByTwo(1, n, seed, 1.25), seed);
}

// phi of the records at `idx`, recomputed from bin codes with the reference
// plug-in formula.
double ReferenceUtility(const TabularDataset& d, const BinnedUtility& u,
                        const std::vector<std::size_t>& idx) {
  std::vector<int> codes, ys;
  for (std::size_t i : idx) {
    codes.push_back(static_cast<int>(u.Code(d[i])));
    ys.push_back(d[i].y);
  }
  return ReferenceMi(codes, ys);
}

TEST(PoisonConfigTest, BaseSizeUsesStableCeiling) {
  const auto d = Balanced(400, 1);
  PoisonConfig cfg;
  cfg.m_p = 10;
  cfg.alpha = 0.7;
  EXPECT_EQ(ResolvePoisonConfig(d, cfg).base_size, 3u);
  cfg.alpha = 0.25;
  EXPECT_EQ(ResolvePoisonConfig(d, cfg).base_size, 8u);
  cfg.m_p = d.size() + 1;
  EXPECT_THROW(ResolvePoisonConfig(d, cfg), ConfigError);
  cfg.m_p = 0;
  cfg.alpha = 1.5;
  EXPECT_THROW(ResolvePoisonConfig(d, cfg), ConfigError);
}

TEST(CleanBaseTest, AlphaZeroFullDrawIsDItself) {
  const auto d = Balanced(400, 2);
  PoisonConfig cfg;
  cfg.alpha = 0.0;
  const PoisonResult r = GreedySample(d, cfg);
  EXPECT_EQ(r.status, PoisonStatus::kOk);
  EXPECT_EQ(r.utility_distance, 0.0);
  std::vector<std::size_t> idx = r.source_indices;
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(idx[i], i);
  EXPECT_NEAR(r.achieved_sy_mi, ReferenceSyMi(d), 1e-12);
}

TEST(CleanBaseTest, AlphaOneHasEmptyBase) {
  const auto d = Balanced(400, 3);
  const BinnedUtility u(d, BinningSpec{});
  const CleanBase b = SampleCleanBase(d, u, 0, 10, u.Evaluate(d), 0.01, 1);
  ASSERT_TRUE(b.indices.has_value());
  EXPECT_TRUE(b.indices->empty());
  EXPECT_EQ(b.attempts, 0u);
}

TEST(CleanBaseTest, LargeBalancedSetSucceedsQuickly) {
  int quick = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = Balanced(4400, seed);
    const BinnedUtility u(d, BinningSpec{});
    const double c = u.Evaluate(d);
    const CleanBase b =
        SampleCleanBase(d, u, StableCeil(0.5 * d.size()), d.size(), c, 0.1 * c, seed);
    quick += b.indices.has_value() && b.attempts <= 3;
  }
  EXPECT_GE(quick, 9);
}

TEST(RankSyTest, EmptyHistoryIsLexicographic) {
  const auto r = RankSyCombinations({}, {}, 2, 2);
  ASSERT_EQ(r.size(), 4u);
  const int order[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(r[i].s, order[i][0]);
    EXPECT_EQ(r[i].y, order[i][1]);
    EXPECT_EQ(r[i].info, 0.0);
  }
}

TEST(RankSyTest, PairedHistoryPrefersTheDiagonal) {
  const std::vector<int> sp = {0, 0, 1, 1};
  const auto r = RankSyCombinations(sp, sp, 2, 2);
  EXPECT_EQ(r[0].s, 0);
  EXPECT_EQ(r[0].y, 0);
  EXPECT_EQ(r[1].s, 1);
  EXPECT_EQ(r[1].y, 1);
  for (const auto& e : r) {
    auto s2 = sp, y2 = sp;
    s2.push_back(e.s);
    y2.push_back(e.y);
    EXPECT_NEAR(e.info, ReferenceMi(s2, y2), 1e-12);
  }
}

TEST(RankSyTest, RareCellCompletesTheCorrelation) {
  std::vector<int> sp(10, 0), yp(10, 0);
  sp[9] = yp[9] = 1;
  const auto r = RankSyCombinations(sp, yp, 2, 2);
  auto pos = [&](int s, int y) {
    return std::find_if(r.begin(), r.end(), [&](auto& e) { return e.s == s && e.y == y; }) -
           r.begin();
  };
  EXPECT_LT(pos(1, 1), pos(0, 1));
}

TEST(CandidateSearchTest, SingleFeasibleRecord) {
  const auto d = Balanced(200, 4);
  const BinnedUtility u(d, BinningSpec{});
  const double c = u.Evaluate(d);
  IncrementalPluginMI cur = u.NewAccumulator();
  for (std::size_t i = 0; i < 100; ++i) cur.Add(u.Code(d[i]), d[i].y);
  const auto got = ConstrainedCandidateSearch(d, {150}, cur, u, c, 10.0, 100, 1);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(*got, 150u);
}

TEST(CandidateSearchTest, AllCandidatesViolate) {
  const auto d = Balanced(200, 4);
  const BinnedUtility u(d, BinningSpec{});
  IncrementalPluginMI cur = u.NewAccumulator();
  for (std::size_t i = 0; i < 100; ++i) cur.Add(u.Code(d[i]), d[i].y);
  const double far = cur.Value() + 5.0;
  EXPECT_FALSE(ConstrainedCandidateSearch(d, {150, 151, 152}, cur, u, far, 0.1, 100, 1));
}

TEST(CandidateSearchTest, MatchesExhaustiveArgmin) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = TwoByTwo(1, 40, 300 + trial, 1.0);
    const BinnedUtility u(d, BinningSpec{4});
    const double c = u.Evaluate(d);
    auto order = SampleWithoutReplacement(d.size(), 11, rng);
    std::vector<std::size_t> dp(order.begin(), order.begin() + 6);
    std::vector<std::size_t> pool(order.begin() + 6, order.end());
    std::sort(pool.begin(), pool.end());
    IncrementalPluginMI cur = u.NewAccumulator();
    for (std::size_t i : dp) cur.Add(u.Code(d[i]), d[i].y);
    std::size_t best = pool[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i : pool) {
      auto with = dp;
      with.push_back(i);
      const double dist = std::abs(ReferenceUtility(d, u, with) - c);
      if (dist < best_dist - 1e-12) {
        best = i;
        best_dist = dist;
      }
    }
    const auto got = ConstrainedCandidateSearch(d, pool, cur, u, c, 10.0, 100, trial);
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(*got, best);
  }
}

// Greedy on a 16-record instance with a generous xi equals the best
// completion of its own clean base.
TEST(GreedySampleTest, TinyInstanceMatchesExhaustiveCompletion) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<std::tuple<double, int, int>> rows;
    for (int i = 0; i < 16; ++i) rows.emplace_back(StandardNormal(rng), i % 2, (i / 2) % 2);
    const auto d = FromTriples(rows);
    PoisonConfig cfg;
    cfg.alpha = 0.5;
    cfg.m_p = 8;
    cfg.xi = 100.0;
    cfg.seed = seed;
    cfg.binning.bins_per_feature = 2;
    const PoisonResult r = GreedySample(d, cfg);
    ASSERT_EQ(r.status, PoisonStatus::kOk);
    const std::vector<std::size_t> base(r.source_indices.begin(), r.source_indices.begin() + 4);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < 16; ++i) {
      if (std::find(base.begin(), base.end(), i) == base.end()) rest.push_back(i);
    }
    double best = 0.0;
    for (std::size_t a = 0; a < rest.size(); ++a)
      for (std::size_t b = a + 1; b < rest.size(); ++b)
        for (std::size_t c = b + 1; c < rest.size(); ++c)
          for (std::size_t e = c + 1; e < rest.size(); ++e) {
            std::vector<int> s, y;
            for (std::size_t i : base) s.push_back(d[i].s), y.push_back(d[i].y);
            for (std::size_t i : {rest[a], rest[b], rest[c], rest[e]}) {
              s.push_back(d[i].s);
              y.push_back(d[i].y);
            }
            best = std::max(best, ReferenceMi(s, y));
          }
    EXPECT_NEAR(r.achieved_sy_mi, best, 1e-9) << "seed " << seed;
  }
}

TEST(GreedySampleTest, InjectsBiasWithinTheUtilityBudget) {
  const auto d = Balanced(4400, 7);
  PoisonConfig cfg;
  cfg.alpha = 0.5;
  cfg.seed = 3;
  const PoisonResult r = GreedySample(d, cfg);
  ASSERT_EQ(r.status, PoisonStatus::kOk);
  EXPECT_GT(r.achieved_sy_mi, ReferenceSyMi(d));
  EXPECT_LE(r.utility_distance, r.xi);
  EXPECT_NEAR(r.xi, 0.1 * r.c, 1e-15);
}

TEST(GreedySampleTest, ResultsAreSubsetsAndRecheckable) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = TwoByTwo(2, 600, seed, 1.0);
    PoisonConfig cfg;
    cfg.alpha = 0.1 * static_cast<double>(seed % 6);
    cfg.m_p = 300;
    cfg.seed = seed;
    cfg.binning.bins_per_feature = 4;
    const PoisonResult r = GreedySample(d, cfg);
    if (r.status != PoisonStatus::kOk) continue;
    EXPECT_LE(std::abs(UtilityMI(d, r.dataset, cfg.binning) - r.c), r.xi);
    EXPECT_EQ(r.dataset.size(), 300u);
    // Multiset inclusion: distinct source indices, records copied verbatim.
    auto idx = r.source_indices;
    std::sort(idx.begin(), idx.end());
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    for (std::size_t k = 0; k < r.source_indices.size(); ++k) {
      EXPECT_EQ(r.dataset[k], d[r.source_indices[k]]);
    }
    EXPECT_NEAR(r.achieved_sy_mi, ReferenceSyMi(r.dataset), 1e-12);
  }
}

TEST(GreedySampleTest, Deterministic) {
  const auto d = Balanced(800, 5);
  PoisonConfig cfg;
  cfg.seed = 17;
  const PoisonResult a = GreedySample(d, cfg);
  const PoisonResult b = GreedySample(d, cfg);
  EXPECT_EQ(a.dataset, b.dataset);
  EXPECT_EQ(a.source_indices, b.source_indices);
  EXPECT_EQ(a.achieved_sy_mi, b.achieved_sy_mi);
  EXPECT_EQ(a.fallback_count, b.fallback_count);
}

TEST(GreedySampleTest, BiasGrowsWithAlpha) {
  std::vector<double> mean(5, 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = Balanced(2000, 40 + seed);
    for (int a = 0; a < 5; ++a) {
      PoisonConfig cfg;
      cfg.alpha = 0.1 * (a + 1);
      cfg.m_p = d.size() / 2;
      cfg.seed = seed;
      mean[static_cast<std::size_t>(a)] += GreedySample(d, cfg).achieved_sy_mi / 10.0;
    }
  }
  for (std::size_t a = 1; a < mean.size(); ++a) EXPECT_GE(mean[a], mean[a - 1]);
}

TEST(LabelFlipTest, AlphaZeroAndOne) {
  const auto d = TwoByTwo(1, 50, 1);
  EXPECT_EQ(LabelFlipBaseline(d, 0.0, BinningSpec{4}).records(), d.records());
  const auto all = LabelFlipBaseline(d, 1.0, BinningSpec{4});
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(all[i].y, 1 - d[i].y);
}

TEST(LabelFlipTest, PairMatchesBruteForceAndBeatsRandom) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = TwoByTwo(1, 10, 500 + seed, 1.0);
    const BinningSpec spec{2};
    const BinnedUtility u(d, spec);
    std::vector<int> codes, ys;
    for (const auto& r : d.records()) {
      codes.push_back(static_cast<int>(u.Code(r)));
      ys.push_back(r.y);
    }
    const double before = ReferenceMi(codes, ys);
    auto flipped_mi = [&](std::vector<std::size_t> idx) {
      auto y2 = ys;
      for (std::size_t i : idx) y2[i] = 1 - y2[i];
      return ReferenceMi(codes, y2);
    };
    std::vector<double> gain(10);
    for (std::size_t i = 0; i < 10; ++i) gain[i] = flipped_mi({i}) - before;
    const auto chosen = LabelFlipSelection(d, 0.2, spec);
    ASSERT_EQ(chosen.size(), 2u);
    double best = -1e9;
    for (std::size_t a = 0; a < 10; ++a)
      for (std::size_t b = a + 1; b < 10; ++b) best = std::max(best, gain[a] + gain[b]);
    EXPECT_NEAR(gain[chosen[0]] + gain[chosen[1]], best, 1e-9);
    Rng rng(seed);
    const auto random_pair = SampleWithoutReplacement(10, 2, rng);
    wins += flipped_mi(chosen) >= flipped_mi(random_pair) - 1e-12;
  }
  EXPECT_GE(wins, 95);
}

TEST(LabelFlipTest, SensitiveObjectiveCorrelatesSWithY) {
  // Unbalanced draw: on an exactly balanced table every flip ties.
  const auto d = TwoByTwo(1, 1000, 3, 1.25);
  const auto flipped = LabelFlipBaseline(d, 0.2, BinningSpec{}, FlipObjective::kSensitive);
  EXPECT_GT(ReferenceSyMi(flipped), ReferenceSyMi(d) + 0.01);
}

TEST(LabelFlipTest, NeedsBinaryLabels) {
  Schema s = testing::BinarySchema();
  s.label_domain.push_back("third");
  const TabularDataset d(s, {{{0.0}, 0, 2}, {{1.0}, 1, 0}});
  EXPECT_THROW(LabelFlipSelection(d, 0.5, BinningSpec{2}), UnsupportedError);
}

TEST(DefenseTest, MovesProportionAwayFromTruth) {
  const auto d = Balanced(4400, 11);
  PoisonConfig cfg;
  cfg.alpha = 0.5;
  cfg.m_p = d.size() / 2;
  cfg.seed = 2;
  const PoisonResult r = ResampleDefense(d, 1, cfg);
  ASSERT_EQ(r.status, PoisonStatus::kOk);
  EXPECT_GE(std::abs(PropertyProportion(r.dataset, 1, 0) - 0.5), 0.2);
}

TEST(DefenseTest, AlphaZeroKeepsProportion) {
  const auto d = Balanced(4400, 12);
  PoisonConfig cfg;
  cfg.alpha = 0.0;
  cfg.m_p = d.size() / 2;
  const PoisonResult r = ResampleDefense(d, 1, cfg);
  EXPECT_NEAR(PropertyProportion(r.dataset, 1), PropertyProportion(d, 1), 0.05);
}

TEST(DefenseTest, DepletedTargetFallsBack) {
  std::vector<std::tuple<double, int, int>> rows;
  Rng rng(1);
  for (int i = 0; i < 40; ++i) rows.emplace_back(StandardNormal(rng), i < 3 ? 1 : 0, i % 2);
  const auto d = FromTriples(rows);
  PoisonConfig cfg;
  cfg.alpha = 0.5;
  cfg.xi = 100.0;
  cfg.seed = 4;
  cfg.binning.bins_per_feature = 2;
  const PoisonResult r = ResampleDefense(d, 1, cfg);
  EXPECT_GT(r.fallback_count, 0u);
  EXPECT_EQ(r.dataset.size(), 40u);
}

}  // namespace
}  // namespace sharebench
