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

// Sharer-side fairness poisoning: greedy re-sampling of D into D_p that
// maximizes I(S_p; Y_p) while keeping I(X_p, S_p; Y_p) within xi of
// c = I(X, S; Y). Also the label-flipping baseline and the re-sampling
// defense that pushes the sensitive proportion away from the truth.
//
// The utility term is the binned plug-in MI with equal-frequency edges
// fitted once on D; every subset of D is binned with those same edges.

#ifndef SHAREBENCH_FPA_HPP_
#define SHAREBENCH_FPA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "sharebench/data.hpp"
#include "sharebench/error.hpp"
#include "sharebench/mi.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

// Values closer than this compare equal when ranking, so that ties fall
// through to the index rule instead of to rounding noise.
inline constexpr double kTieResolution = 1e-12;

inline std::int64_t TieKey(double v) { return std::llround(v / kTieResolution); }

// phi(X, S; Y) for subsets of a reference dataset.
class BinnedUtility {
 public:
  BinnedUtility(const TabularDataset& reference, const BinningSpec& spec)
      : sensitive_count_(reference.schema().sensitive_count()),
        label_count_(reference.schema().label_count()) {
    if (reference.empty()) throw ConfigError("utility binning needs a non-empty dataset");
    if (spec.bins_per_feature >= 2 &&
        std::pow(double(spec.bins_per_feature), reference.schema().feature_count) *
                sensitive_count_ >
            kMaxBinnedCells) {
      throw CapacityError("binned MI table exceeds 1e7 cells");
    }
    binner_ = EqualFrequencyBinner::Fit(reference.FeatureMatrix(), spec.bins_per_feature);
    rows_ = static_cast<std::int64_t>(binner_.CellCount()) * sensitive_count_;
  }

  std::int64_t rows() const { return rows_; }
  int cols() const { return label_count_; }
  const EqualFrequencyBinner& binner() const { return binner_; }

  std::int64_t Code(const Record& r) const {
    return binner_.Encode(r.x) * sensitive_count_ + r.s;
  }

  IncrementalPluginMI NewAccumulator() const { return IncrementalPluginMI(rows_, label_count_); }

  // From-scratch value; depends only on the multiset of records.
  double Evaluate(const TabularDataset& d, const std::vector<std::size_t>& indices) const {
    ContingencyTable table(rows_, label_count_);
    for (std::size_t i : indices) table.Add(Code(d[i]), d[i].y);
    return table.MutualInformation();
  }

  double Evaluate(const TabularDataset& d) const {
    ContingencyTable table(rows_, label_count_);
    for (const Record& r : d.records()) table.Add(Code(r), r.y);
    return table.MutualInformation();
  }

 private:
  int sensitive_count_;
  int label_count_;
  EqualFrequencyBinner binner_;
  std::int64_t rows_ = 0;
};

// phi(X_p, S_p; Y_p) of `poisoned` under the bin edges of `reference`.
inline double UtilityMI(const TabularDataset& reference, const TabularDataset& poisoned,
                        const BinningSpec& spec) {
  return BinnedUtility(reference, spec).Evaluate(poisoned);
}

struct PoisonConfig {
  double alpha = 0.5;
  std::optional<double> xi;  // default 0.1 * c
  std::size_t m_p = 0;       // 0 means |D|
  std::size_t candidate_pool = 100;
  std::size_t base_retry_limit = 0;  // 0 means |D|
  std::uint64_t seed = 0;
  BinningSpec binning;
};

enum class PoisonStatus { kOk, kBottom };

inline const char* PoisonStatusName(PoisonStatus s) {
  return s == PoisonStatus::kOk ? "ok" : "bottom";
}

struct PoisonResult {
  TabularDataset dataset;  // D_p; empty when the clean base could not be drawn
  PoisonStatus status = PoisonStatus::kBottom;
  double c = 0.0;
  double xi = 0.0;
  double achieved_sy_mi = 0.0;
  double utility_mi = 0.0;
  double utility_distance = 0.0;
  std::size_t fallback_count = 0;
  std::size_t base_attempts = 0;
  std::vector<std::size_t> source_indices;  // positions in D, insertion order
};

struct ResolvedPoisonConfig {
  std::size_t m_p = 0;
  std::size_t base_size = 0;
  std::size_t slots = 0;
  std::size_t retry_limit = 0;
};

inline ResolvedPoisonConfig ResolvePoisonConfig(const TabularDataset& d, const PoisonConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (cfg.xi && !(*cfg.xi > 0.0)) throw ConfigError("xi must be > 0");
  if (cfg.candidate_pool < 1) throw ConfigError("candidate_pool must be >= 1");
  if (d.empty()) throw ConfigError("cannot poison an empty dataset");
  ResolvedPoisonConfig r;
  r.m_p = cfg.m_p == 0 ? d.size() : cfg.m_p;
  if (r.m_p > d.size()) {
    throw ConfigError("m_p (" + std::to_string(r.m_p) + ") exceeds |D| (" +
                      std::to_string(d.size()) + ")");
  }
  r.base_size = std::min(r.m_p, StableCeil(static_cast<double>(r.m_p) * (1.0 - cfg.alpha)));
  r.slots = r.m_p - r.base_size;
  r.retry_limit = cfg.base_retry_limit == 0 ? d.size() : cfg.base_retry_limit;
  return r;
}

struct CleanBase {
  std::optional<std::vector<std::size_t>> indices;  // nullopt: bottom
  std::size_t attempts = 0;
};

// Up to `retry_limit` uniform draws of `base_size` records; the first whose
// utility lies strictly within xi of c is kept. An empty base is accepted
// without a check.
inline CleanBase SampleCleanBase(const TabularDataset& d, const BinnedUtility& utility,
                                 std::size_t base_size, std::size_t retry_limit, double c,
                                 double xi, std::uint64_t seed) {
  CleanBase out;
  if (base_size == 0) {
    out.indices.emplace();
    return out;
  }
  for (std::size_t attempt = 0; attempt < retry_limit; ++attempt) {
    Rng rng(DeriveSeed(seed, 0, attempt));
    std::vector<std::size_t> idx = SampleWithoutReplacement(d.size(), base_size, rng);
    out.attempts = attempt + 1;
    if (std::abs(utility.Evaluate(d, idx) - c) < xi) {
      out.indices = std::move(idx);
      return out;
    }
  }
  return out;
}

struct SyRanking {
  int s = 0;
  int y = 0;
  double info = 0.0;
};

// Every (j, k) with info = I(S_p + j; Y_p + k), descending, ties broken
// lexicographically on (j, k).
inline std::vector<SyRanking> RankSyCombinations(const ContingencyTable& sy) {
  std::vector<SyRanking> out;
  for (int j = 0; j < sy.rows(); ++j) {
    for (int k = 0; k < sy.cols(); ++k) {
      ContingencyTable next = sy;
      next.Add(j, k);
      out.push_back({j, k, next.MutualInformation()});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SyRanking& a, const SyRanking& b) {
    return TieKey(a.info) > TieKey(b.info);
  });
  return out;
}

inline std::vector<SyRanking> RankSyCombinations(const std::vector<int>& s_p,
                                                 const std::vector<int>& y_p, int sensitive_count,
                                                 int label_count) {
  if (s_p.size() != y_p.size()) throw ShapeError("S_p and Y_p lengths differ");
  ContingencyTable sy(sensitive_count, label_count);
  for (std::size_t i = 0; i < s_p.size(); ++i) sy.Add(s_p[i], y_p[i]);
  return RankSyCombinations(sy);
}

// Among at most `candidate_pool` uniformly drawn members of `pool` (indices
// into d), the record minimizing |phi(D_p + record) - c|. Returns it only if
// that distance is below xi. Ties go to the lowest index into d.
inline std::optional<std::size_t> ConstrainedCandidateSearch(
    const TabularDataset& d, const std::vector<std::size_t>& pool,
    const IncrementalPluginMI& current, const BinnedUtility& utility, double c, double xi,
    std::size_t candidate_pool, std::uint64_t seed) {
  if (pool.empty()) return std::nullopt;
  std::vector<std::size_t> picks;
  if (pool.size() <= candidate_pool) {
    picks = pool;
  } else {
    Rng rng(seed);
    for (std::size_t pos : SampleWithoutReplacement(pool.size(), candidate_pool, rng)) {
      picks.push_back(pool[pos]);
    }
  }
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  std::int64_t best_key = 0;
  for (std::size_t i : picks) {
    const double dist = std::abs(current.ValueIfAdded(utility.Code(d[i]), d[i].y) - c);
    const std::int64_t key = TieKey(dist);
    if (!best || key < best_key || (key == best_key && i < *best)) {
      best = i;
      best_dist = dist;
      best_key = key;
    }
  }
  if (best && best_dist < xi) return best;
  return std::nullopt;
}

namespace detail {

inline void EraseValue(std::vector<std::size_t>& v, std::size_t value) {
  v.erase(std::lower_bound(v.begin(), v.end(), value));
}

// Shared skeleton: clean base, then per slot walk the cells in the order
// produced by `rank_cells` and insert the first feasible candidate, else a
// uniformly random record of D-bar.
template <typename RankCells>
PoisonResult RunPoisoning(const TabularDataset& d, const PoisonConfig& cfg, RankCells rank_cells) {
  const ResolvedPoisonConfig rc = ResolvePoisonConfig(d, cfg);
  const BinnedUtility utility(d, cfg.binning);
  const int ns = d.schema().sensitive_count();
  const int ny = d.schema().label_count();

  PoisonResult result;
  result.dataset = TabularDataset(d.schema(), Provenance::kPoisoned);
  result.c = utility.Evaluate(d);
  result.xi = cfg.xi.value_or(0.1 * result.c);

  const CleanBase base =
      SampleCleanBase(d, utility, rc.base_size, rc.retry_limit, result.c, result.xi, cfg.seed);
  result.base_attempts = base.attempts;
  if (!base.indices) {
    result.status = PoisonStatus::kBottom;
    return result;
  }

  std::vector<std::size_t> chosen = *base.indices;
  std::vector<bool> in_base(d.size(), false);
  for (std::size_t i : chosen) in_base[i] = true;
  std::vector<std::size_t> dbar;
  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(ns * ny));
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (in_base[i]) continue;
    dbar.push_back(i);
    pools[static_cast<std::size_t>(d[i].s * ny + d[i].y)].push_back(i);
  }

  IncrementalPluginMI phi = utility.NewAccumulator();
  ContingencyTable sy(ns, ny);
  for (std::size_t i : chosen) {
    phi.Add(utility.Code(d[i]), d[i].y);
    sy.Add(d[i].s, d[i].y);
  }

  for (std::size_t slot = 0; slot < rc.slots; ++slot) {
    std::optional<std::size_t> pick;
    for (const auto& [j, k] : rank_cells(sy)) {
      const auto cell = static_cast<std::size_t>(j * ny + k);
      pick = ConstrainedCandidateSearch(d, pools[cell], phi, utility, result.c, result.xi,
                                        cfg.candidate_pool, DeriveSeed(cfg.seed, 1, slot, cell));
      if (pick) break;
    }
    if (!pick) {
      Rng rng(DeriveSeed(cfg.seed, 2, slot));
      pick = dbar[UniformIndex(rng, dbar.size())];
      ++result.fallback_count;
    }
    const std::size_t i = *pick;
    EraseValue(dbar, i);
    EraseValue(pools[static_cast<std::size_t>(d[i].s * ny + d[i].y)], i);
    phi.Add(utility.Code(d[i]), d[i].y);
    sy.Add(d[i].s, d[i].y);
    chosen.push_back(i);
  }

  result.dataset = d.Select(chosen, Provenance::kPoisoned);
  result.source_indices = std::move(chosen);
  result.achieved_sy_mi = sy.MutualInformation();
  result.utility_mi = utility.Evaluate(result.dataset);
  result.utility_distance = std::abs(result.utility_mi - result.c);
  result.status = result.utility_distance <= result.xi ? PoisonStatus::kOk : PoisonStatus::kBottom;
  return result;
}

}  // namespace detail

// The greedy MI-constrained poisoning sampler.
inline PoisonResult GreedySample(const TabularDataset& d, const PoisonConfig& cfg) {
  return detail::RunPoisoning(d, cfg, [](const ContingencyTable& sy) {
    std::vector<std::pair<int, int>> cells;
    for (const SyRanking& r : RankSyCombinations(sy)) cells.emplace_back(r.s, r.y);
    return cells;
  });
}

// Re-sampling defense: each slot prefers the cell that moves D_p's
// class-conditional proportions of `target_s` furthest from those of D,
// measured as sum_y |r_{s|y}(D_p) - r_{s|y}(D)| (only class `target_y` when
// given). Cells that would shrink that deviation are never preferred; if no
// remaining cell qualifies the slot falls back to a random record.
inline PoisonResult ResampleDefense(const TabularDataset& d, int target_s, const PoisonConfig& cfg,
                                    std::optional<int> target_y = std::nullopt) {
  const int ns = d.schema().sensitive_count();
  const int ny = d.schema().label_count();
  if (target_s < 0 || target_s >= ns) throw ConfigError("target_s outside the sensitive domain");
  if (target_y && (*target_y < 0 || *target_y >= ny)) {
    throw ConfigError("target_y outside the label domain");
  }
  const EmpiricalJoint joint = ComputeEmpiricalJoint(d);
  auto deviation = [&](const ContingencyTable& t) {
    double total = 0.0;
    for (int y = 0; y < ny; ++y) {
      if (target_y && y != *target_y) continue;
      const auto ref_n = joint.label_total(y);
      if (ref_n == 0 || t.col_total(y) == 0) continue;
      const double ref = static_cast<double>(joint.count(target_s, y)) / static_cast<double>(ref_n);
      total += std::abs(static_cast<double>(t.count(target_s, y)) /
                            static_cast<double>(t.col_total(y)) -
                        ref);
    }
    return total;
  };
  return detail::RunPoisoning(d, cfg, [&](const ContingencyTable& sy) {
    const std::int64_t now = TieKey(deviation(sy));
    std::vector<std::tuple<std::int64_t, int, int>> ranked;
    for (int j = 0; j < ns; ++j) {
      for (int k = 0; k < ny; ++k) {
        ContingencyTable next = sy;
        next.Add(j, k);
        const std::int64_t key = TieKey(deviation(next));
        if (key >= now) ranked.emplace_back(key, j, k);
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<std::pair<int, int>> cells;
    for (const auto& [key, j, k] : ranked) cells.emplace_back(j, k);
    return cells;
  });
}

// What a label flip is scored against.
enum class FlipObjective {
  kUtility,    // phi(X, S; Y), binned
  kSensitive,  // I(S; Y), plug-in
};

inline const char* FlipObjectiveName(FlipObjective o) {
  return o == FlipObjective::kUtility ? "utility" : "sensitive";
}

inline FlipObjective FlipObjectiveFromName(const std::string& name) {
  if (name == "utility") return FlipObjective::kUtility;
  if (name == "sensitive") return FlipObjective::kSensitive;
  throw ConfigError("unknown flip objective '" + name + "' (expected utility or sensitive)");
}

// Indices of the ceil(alpha * |d|) records whose individual label flip
// raises the objective the most. Gains are measured once on the unflipped
// data; descending, ties to the lower index. Binary labels only.
inline std::vector<std::size_t> LabelFlipSelection(
    const TabularDataset& d, double alpha, const BinningSpec& spec,
    FlipObjective objective = FlipObjective::kUtility) {
  if (d.schema().label_count() != 2) {
    throw UnsupportedError("label flipping needs a binary label domain");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  const std::size_t flips =
      std::min(d.size(), StableCeil(alpha * static_cast<double>(d.size())));
  if (flips == 0) return {};
  std::vector<std::int64_t> codes(d.size());
  IncrementalPluginMI phi;
  if (objective == FlipObjective::kUtility) {
    const BinnedUtility utility(d, spec);
    phi = utility.NewAccumulator();
    for (std::size_t i = 0; i < d.size(); ++i) codes[i] = utility.Code(d[i]);
  } else {
    phi = IncrementalPluginMI(d.schema().sensitive_count(), 2);
    for (std::size_t i = 0; i < d.size(); ++i) codes[i] = d[i].s;
  }
  for (std::size_t i = 0; i < d.size(); ++i) phi.Add(codes[i], d[i].y);
  std::vector<std::pair<std::int64_t, std::size_t>> gains(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    gains[i] = {TieKey(phi.ValueIfMoved(codes[i], d[i].y, 1 - d[i].y)), i};
  }
  std::stable_sort(gains.begin(), gains.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < flips; ++r) out.push_back(gains[r].second);
  std::sort(out.begin(), out.end());
  return out;
}

inline TabularDataset LabelFlipBaseline(const TabularDataset& d, double alpha,
                                        const BinningSpec& spec,
                                        FlipObjective objective = FlipObjective::kUtility) {
  std::vector<Record> records = d.records();
  for (std::size_t i : LabelFlipSelection(d, alpha, spec, objective)) {
    records[i].y = 1 - records[i].y;
  }
  return TabularDataset(d.schema(), std::move(records), Provenance::kPoisoned);
}

}  // namespace sharebench

#endif  // SHAREBENCH_FPA_HPP_
