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

// Config-driven experiment harness. One row per (sweep point, repetition);
// each row's randomness comes from DeriveSeed(master_seed, point, rep),
// except the dataset (and the clean reference built on it), which depends
// on (master_seed, rep) only so that every point of a repetition sees the
// same D.

#ifndef SHAREBENCH_EXPERIMENT_HPP_
#define SHAREBENCH_EXPERIMENT_HPP_

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sharebench/data.hpp"
#include "sharebench/downstream.hpp"
#include "sharebench/error.hpp"
#include "sharebench/fpa.hpp"
#include "sharebench/json_io.hpp"
#include "sharebench/oracle.hpp"
#include "sharebench/pia.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

enum class Pipeline { kFpaSweep, kPiaSweep, kBoundCheck, kDefenseEval, kCoverageAudit };

inline const char* PipelineName(Pipeline p) {
  switch (p) {
    case Pipeline::kFpaSweep: return "fpa_sweep";
    case Pipeline::kPiaSweep: return "pia_sweep";
    case Pipeline::kBoundCheck: return "bound_check";
    case Pipeline::kDefenseEval: return "defense_eval";
    case Pipeline::kCoverageAudit: return "coverage_audit";
  }
  return "unknown";
}

inline Pipeline PipelineFromName(const std::string& name) {
  for (Pipeline p : {Pipeline::kFpaSweep, Pipeline::kPiaSweep, Pipeline::kBoundCheck,
                     Pipeline::kDefenseEval, Pipeline::kCoverageAudit}) {
    if (name == PipelineName(p)) return p;
  }
  throw ConfigError("unknown pipeline '" + name + "'");
}

struct DatasetSource {
  std::optional<SyntheticSpec> synthetic;
  std::string csv_path;
  Schema schema;  // csv only

  const Schema& GetSchema() const { return synthetic ? synthetic->schema : schema; }
};

struct OracleSettings {
  int components = 3;
  std::string sampler = "ncsn";  // ncsn | ddpm | empirical
  std::optional<NoiseSchedule> schedule;
  std::size_t synthetic_size = 4000;  // records sampled to train f_c
  double real_fraction = 0.0;         // few-shot mixing: share of real records
};

struct DiscriminatorSettings {
  std::string kind = "exact";  // exact | noisy | learned
  ConfusionSpec confusion;
};

struct FpaSettings {
  std::vector<double> alphas = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::optional<std::size_t> m_p;
  double m_p_fraction = 0.5;
  double xi_fraction = 0.1;
  std::size_t candidate_pool = 100;
  int bins = 8;
  bool label_flip = true;
  FlipObjective flip_objective = FlipObjective::kSensitive;
};

struct PiaSettings {
  std::vector<double> proportions = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::size_t m_hat = 200;
  int y_filter = 0;
  int target_s = 1;
  DiscriminatorSettings discriminator;
};

struct BoundSettings {
  std::size_t m_hat = 100;
  double epsilon = 0.15;
};

struct CoverageSettings {
  std::size_t samples = 1000;  // per class
  double margin = 0.05;
};

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::kFpaSweep;
  std::uint64_t master_seed = 0;
  std::size_t repetitions = 1;
  DatasetSource dataset;
  bool balance = true;
  double train_fraction = 0.8;
  OracleSettings oracle;
  TrainConfig classifier;
  FpaSettings fpa;
  PiaSettings pia;
  BoundSettings bound;
  CoverageSettings coverage;
  std::string output;  // directory; empty means no files
  Json source;         // the document as given, echoed into the report

  void Validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw ConfigError("train_fraction must lie in (0, 1)");
    }
    if (!(oracle.real_fraction >= 0.0 && oracle.real_fraction <= 1.0)) {
      throw ConfigError("oracle.real_fraction must lie in [0, 1]");
    }
    if (oracle.sampler != "ncsn" && oracle.sampler != "ddpm" && oracle.sampler != "empirical") {
      throw ConfigError("oracle.sampler must be ncsn, ddpm or empirical");
    }
    classifier.Validate();
    const Schema& schema = dataset.GetSchema();
    if (pia.target_s < 0 || pia.target_s >= schema.sensitive_count()) {
      throw ConfigError("pia.target_s outside the sensitive domain");
    }
    if (pia.y_filter < 0 || pia.y_filter >= schema.label_count()) {
      throw ConfigError("pia.y_filter outside the label domain");
    }
    for (double a : fpa.alphas) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("fpa.alphas must lie in [0, 1]");
    }
    for (double r : pia.proportions) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("pia.proportions must lie in [0, 1]");
    }
    if (pipeline == Pipeline::kPiaSweep || pipeline == Pipeline::kCoverageAudit) {
      if (!dataset.synthetic) throw ConfigError("proportion sweeps need a synthetic dataset");
    }
  }
};

namespace detail {

template <typename T>
void ReadIf(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig ExperimentConfigFromJson(const Json& j) {
  try {
    ExperimentConfig cfg;
    cfg.source = j;
    cfg.pipeline = PipelineFromName(j.at("pipeline").get<std::string>());
    detail::ReadIf(j, "master_seed", cfg.master_seed);
    detail::ReadIf(j, "repetitions", cfg.repetitions);
    detail::ReadIf(j, "balance", cfg.balance);
    detail::ReadIf(j, "train_fraction", cfg.train_fraction);
    detail::ReadIf(j, "output", cfg.output);

    const Json& ds = j.at("dataset");
    if (ds.contains("synthetic")) {
      cfg.dataset.synthetic = SyntheticSpecFromJson(ds.at("synthetic"));
    } else if (ds.contains("csv")) {
      cfg.dataset.csv_path = ds.at("csv").get<std::string>();
      cfg.dataset.schema = SchemaFromJson(ds.at("schema"));
    } else {
      throw ConfigError("dataset needs either 'synthetic' or 'csv' + 'schema'");
    }

    if (j.contains("oracle")) {
      const Json& o = j.at("oracle");
      detail::ReadIf(o, "components", cfg.oracle.components);
      detail::ReadIf(o, "sampler", cfg.oracle.sampler);
      detail::ReadIf(o, "synthetic_size", cfg.oracle.synthetic_size);
      detail::ReadIf(o, "real_fraction", cfg.oracle.real_fraction);
      if (o.contains("schedule")) cfg.oracle.schedule = ScheduleFromJson(o.at("schedule"));
    }
    if (j.contains("classifier")) {
      const Json& c = j.at("classifier");
      if (c.contains("kind"))
        cfg.classifier.kind = ClassifierKindFromName(c.at("kind").get<std::string>());
      detail::ReadIf(c, "learning_rate", cfg.classifier.learning_rate);
      detail::ReadIf(c, "iterations", cfg.classifier.iterations);
      detail::ReadIf(c, "hidden_units", cfg.classifier.hidden_units);
      detail::ReadIf(c, "l2", cfg.classifier.l2);
    }
    if (j.contains("fpa")) {
      const Json& f = j.at("fpa");
      detail::ReadIf(f, "alphas", cfg.fpa.alphas);
      if (f.contains("m_p")) cfg.fpa.m_p = f.at("m_p").get<std::size_t>();
      detail::ReadIf(f, "m_p_fraction", cfg.fpa.m_p_fraction);
      detail::ReadIf(f, "xi_fraction", cfg.fpa.xi_fraction);
      detail::ReadIf(f, "candidate_pool", cfg.fpa.candidate_pool);
      detail::ReadIf(f, "bins", cfg.fpa.bins);
      detail::ReadIf(f, "label_flip", cfg.fpa.label_flip);
      if (f.contains("flip_objective")) {
        cfg.fpa.flip_objective = FlipObjectiveFromName(f.at("flip_objective").get<std::string>());
      }
    }
    if (j.contains("pia")) {
      const Json& p = j.at("pia");
      detail::ReadIf(p, "proportions", cfg.pia.proportions);
      detail::ReadIf(p, "m_hat", cfg.pia.m_hat);
      detail::ReadIf(p, "y_filter", cfg.pia.y_filter);
      detail::ReadIf(p, "target_s", cfg.pia.target_s);
      if (p.contains("discriminator")) {
        const Json& d = p.at("discriminator");
        detail::ReadIf(d, "kind", cfg.pia.discriminator.kind);
        detail::ReadIf(d, "tpr", cfg.pia.discriminator.confusion.tpr);
        detail::ReadIf(d, "fpr", cfg.pia.discriminator.confusion.fpr);
        detail::ReadIf(d, "seed", cfg.pia.discriminator.confusion.seed);
      }
    }
    if (j.contains("bound")) {
      detail::ReadIf(j.at("bound"), "m_hat", cfg.bound.m_hat);
      detail::ReadIf(j.at("bound"), "epsilon", cfg.bound.epsilon);
    }
    if (j.contains("coverage")) {
      detail::ReadIf(j.at("coverage"), "samples", cfg.coverage.samples);
      detail::ReadIf(j.at("coverage"), "margin", cfg.coverage.margin);
    }
    cfg.Validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

inline ExperimentConfig LoadExperimentConfig(const std::string& path) {
  return ExperimentConfigFromJson(ReadJsonFile(path));
}

struct ExperimentReport {
  std::string pipeline;
  std::uint64_t master_seed = 0;  // after any override
  Json config;
  std::vector<Json> rows;  // (point, rep) order
  Json summary;            // per-point aggregates
  double wall_clock_seconds = 0.0;

  Json SummaryJson() const {
    return {{"pipeline", pipeline},
            {"master_seed", master_seed},
            {"config", config},
            {"row_count", rows.size()},
            {"points", summary},
            {"wall_clock_seconds", wall_clock_seconds}};
  }
};

// Rescales the target_s share within class y_filter to r, keeping P(Y).
inline SyntheticSpec WithClassProportion(SyntheticSpec spec, int target_s, int y_filter, double r) {
  const int ns = spec.schema.sensitive_count();
  double class_mass = 0.0;
  double others = 0.0;
  for (int s = 0; s < ns; ++s) {
    class_mass += spec.cell_weights[s][y_filter];
    if (s != target_s) others += spec.cell_weights[s][y_filter];
  }
  for (int s = 0; s < ns; ++s) {
    double& w = spec.cell_weights[s][y_filter];
    if (s == target_s) {
      w = r * class_mass;
    } else {
      w = others > 0.0 ? (1.0 - r) * class_mass * (w / others)
                       : (1.0 - r) * class_mass / (ns - 1);
    }
  }
  return spec;
}

namespace detail {

inline constexpr std::uint64_t kDataStream = 0xda7a;

struct Split {
  TabularDataset train;
  TabularDataset test;
};

inline Split BuildSplit(const ExperimentConfig& cfg, const DatasetSource& source, bool balance,
                        std::uint64_t data_seed) {
  TabularDataset all;
  if (source.synthetic) {
    SyntheticSpec spec = *source.synthetic;
    spec.seed = DeriveSeed(data_seed, 0);
    all = SynthesizeDataset(spec);
  } else {
    all = LoadCsv(source.csv_path, source.schema);
  }
  if (balance) all = FilterBalanced(all, DeriveSeed(data_seed, 1));
  auto [train, test] = SplitTrainTest(all, cfg.train_fraction, DeriveSeed(data_seed, 2));
  return {std::move(train), std::move(test)};
}

inline SamplingFn MakeSampler(const ExperimentConfig& cfg, const TabularDataset& train,
                              std::uint64_t seed) {
  if (cfg.oracle.sampler == "empirical") return MakeEmpiricalSampler(train);
  const Sampler sampler = SamplerFromName(cfg.oracle.sampler);
  NoiseSchedule schedule = cfg.oracle.schedule.value_or(DefaultSchedule(sampler));
  // Label flipping can empty whole cells; those simply carry no mass.
  return MakeOracleSampler(
      FitOracle(train, cfg.oracle.components, schedule, seed, 200, 1e-6, true), sampler);
}

// Oracle on `shared` -> synthetic training set (optionally mixed with real
// records) -> classifier.
inline ClassifierModel TrainThroughOracle(const ExperimentConfig& cfg, const TabularDataset& shared,
                                          std::uint64_t seed) {
  const SamplingFn oracle = MakeSampler(cfg, shared, DeriveSeed(seed, 0));
  const auto n = cfg.oracle.synthetic_size;
  const auto n_real =
      std::min(shared.size(), static_cast<std::size_t>(std::llround(cfg.oracle.real_fraction * n)));
  TabularDataset train = oracle(n - std::min(n, n_real), DeriveSeed(seed, 1), std::nullopt);
  if (n_real > 0) {
    Rng rng(DeriveSeed(seed, 2));
    for (std::size_t i : SampleWithoutReplacement(shared.size(), n_real, rng)) train.Add(shared[i]);
  }
  TrainConfig tc = cfg.classifier;
  tc.seed = DeriveSeed(seed, 3);
  return TrainClassifier(train, tc);
}

inline std::size_t ResolveMp(const ExperimentConfig& cfg, std::size_t train_size) {
  if (cfg.fpa.m_p) {
    if (*cfg.fpa.m_p > train_size) {
      throw ConfigError("fpa.m_p exceeds the " + std::to_string(train_size) + " training records");
    }
    return *cfg.fpa.m_p;
  }
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.fpa.m_p_fraction * train_size)));
}

inline PoisonConfig MakePoisonConfig(const ExperimentConfig& cfg, double alpha, std::size_t m_p,
                                     std::uint64_t seed) {
  PoisonConfig pc;
  pc.alpha = alpha;
  pc.m_p = m_p;
  pc.candidate_pool = cfg.fpa.candidate_pool;
  pc.seed = seed;
  pc.binning.bins_per_feature = cfg.fpa.bins;
  return pc;
}

// A size-matched uniform subset of D: what the receiver would get without
// poisoning.
inline TabularDataset CleanSubset(const TabularDataset& train, std::size_t m_p,
                                  std::uint64_t seed) {
  Rng rng(seed);
  auto idx = SampleWithoutReplacement(train.size(), m_p, rng);
  std::sort(idx.begin(), idx.end());
  return train.Select(idx, train.provenance());
}

// The learned variant trains on an auxiliary synthetic set drawn from the
// attacked oracle.
inline std::unique_ptr<Discriminator> MakeDiscriminator(const ExperimentConfig& cfg,
                                                        const SamplingFn& oracle,
                                                        std::uint64_t seed) {
  const auto& d = cfg.pia.discriminator;
  if (d.kind == "exact") return std::make_unique<ExactFeatureDiscriminator>(cfg.pia.target_s);
  if (d.kind == "noisy") {
    ConfusionSpec spec = d.confusion;
    spec.seed = DeriveSeed(seed, spec.seed);
    return std::make_unique<NoisyDiscriminator>(cfg.pia.target_s, spec);
  }
  if (d.kind == "learned") {
    TrainConfig tc = cfg.classifier;
    tc.seed = DeriveSeed(seed, 0);
    const TabularDataset auxiliary =
        oracle(cfg.oracle.synthetic_size, DeriveSeed(seed, 1), std::nullopt);
    return std::make_unique<LearnedDiscriminator>(
        TrainLearnedDiscriminator(auxiliary, cfg.pia.target_s, tc));
  }
  throw ConfigError("unknown discriminator kind '" + d.kind + "'");
}

inline void SetFairness(Json& row, const std::string& prefix, const FairnessReport& f) {
  row[prefix + "accuracy_clean"] = f.accuracy_clean;
  row[prefix + "accuracy_biased"] = f.accuracy_biased;
  row[prefix + "dp_gap_clean"] = f.dp_gap_clean;
  row[prefix + "dp_gap_biased"] = f.dp_gap_biased;
  row[prefix + "l_acc"] = f.l_acc;
  row[prefix + "l_fair"] = f.l_fair;
}

// Mean and sample stddev of every numeric field over the rows of one point.
inline Json Aggregate(const std::vector<const Json*>& rows) {
  std::map<std::string, std::vector<double>> values;
  std::size_t errors = 0;
  for (const Json* r : rows) {
    if (r->contains("error")) {
      ++errors;
      continue;
    }
    for (const auto& [k, v] : r->items()) {
      if (k == "point" || k == "rep" || k == "seed" || k == "alpha" || k == "proportion" ||
          k == "m_hat" || k == "epsilon") {
        continue;
      }
      if (v.is_number()) values[k].push_back(v.get<double>());
      if (v.is_boolean()) values[k].push_back(v.get<bool>() ? 1.0 : 0.0);
    }
  }
  Json mean = Json::object();
  Json stddev = Json::object();
  for (const auto& [k, xs] : values) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double m = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    mean[k] = m;
    stddev[k] = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  }
  return {{"rows", rows.size()}, {"errors", errors}, {"mean", mean}, {"stddev", stddev}};
}

}  // namespace detail

// Runs every (point, rep) of the configured pipeline. Module errors are
// caught per row and recorded under "error"; the sweep continues.
inline ExperimentReport RunExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.pipeline = PipelineName(cfg.pipeline);
  report.master_seed = cfg.master_seed;
  report.config = cfg.source;

  std::vector<Json> point_values;
  switch (cfg.pipeline) {
    case Pipeline::kFpaSweep:
    case Pipeline::kDefenseEval:
      for (double a : cfg.fpa.alphas) point_values.push_back({{"alpha", a}});
      break;
    case Pipeline::kPiaSweep:
    case Pipeline::kCoverageAudit:
      for (double r : cfg.pia.proportions) point_values.push_back({{"proportion", r}});
      break;
    case Pipeline::kBoundCheck:
      point_values.push_back({{"m_hat", cfg.bound.m_hat}, {"epsilon", cfg.bound.epsilon}});
      break;
  }

  // Per-repetition state shared by all points: the split and the clean
  // reference model.
  struct RepState {
    std::optional<detail::Split> split;
    std::optional<ClassifierModel> clean;
    std::optional<TabularDataset> clean_subset;
    std::string error;
  };
  std::map<std::size_t, RepState> reps;

  for (std::size_t p = 0; p < point_values.size(); ++p) {
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t seed = DeriveSeed(cfg.master_seed, p, rep);
      const std::uint64_t data_seed = DeriveSeed(cfg.master_seed, detail::kDataStream, rep);
      Json row = {{"point", p}, {"rep", rep}, {"seed", seed}};
      row.update(point_values[p]);
      try {
        switch (cfg.pipeline) {
          case Pipeline::kFpaSweep:
          case Pipeline::kDefenseEval: {
            RepState& st = reps[rep];
            if (!st.split) {
              st.split = detail::BuildSplit(cfg, cfg.dataset, cfg.balance, data_seed);
              const auto m_p = detail::ResolveMp(cfg, st.split->train.size());
              st.clean_subset = detail::CleanSubset(st.split->train, m_p, DeriveSeed(data_seed, 3));
              st.clean =
                  detail::TrainThroughOracle(cfg, *st.clean_subset, DeriveSeed(data_seed, 4));
            }
            const TabularDataset& train = st.split->train;
            const TabularDataset& test = st.split->test;
            const double alpha = point_values[p].at("alpha").get<double>();
            const auto m_p = st.clean_subset->size();
            PoisonConfig pc = detail::MakePoisonConfig(cfg, alpha, m_p, DeriveSeed(seed, 0));
            const BinnedUtility utility(train, pc.binning);
            pc.xi = cfg.fpa.xi_fraction * utility.Evaluate(train);
            if (!(*pc.xi > 0.0)) pc.xi.reset();

            const PoisonResult res =
                cfg.pipeline == Pipeline::kFpaSweep
                    ? GreedySample(train, pc)
                    : ResampleDefense(train, cfg.pia.target_s, pc);
            row["status"] = PoisonStatusName(res.status);
            row["c"] = res.c;
            row["xi"] = res.xi;
            row["achieved_sy_mi"] = res.achieved_sy_mi;
            row["utility_distance"] = res.utility_distance;
            row["fallback_count"] = res.fallback_count;
            row["base_attempts"] = res.base_attempts;
            if (res.status == PoisonStatus::kBottom) {
              row["error"] = "poisoning returned bottom";
              break;
            }
            const ClassifierModel biased =
                detail::TrainThroughOracle(cfg, res.dataset, DeriveSeed(seed, 1));
            detail::SetFairness(row, "", MakeFairnessReport(*st.clean, biased, test));

            if (cfg.pipeline == Pipeline::kFpaSweep && cfg.fpa.label_flip) {
              const TabularDataset flipped =
                  LabelFlipBaseline(*st.clean_subset, alpha, pc.binning, cfg.fpa.flip_objective);
              const ClassifierModel lf =
                  detail::TrainThroughOracle(cfg, flipped, DeriveSeed(seed, 2));
              detail::SetFairness(row, "lf_", MakeFairnessReport(*st.clean, lf, test));
            }
            if (cfg.pipeline == Pipeline::kDefenseEval) {
              const int yf = cfg.pia.y_filter;
              const double truth = PropertyProportion(train, cfg.pia.target_s, yf);
              const SamplingFn defended =
                  detail::MakeSampler(cfg, res.dataset, DeriveSeed(seed, 4));
              const auto disc = detail::MakeDiscriminator(cfg, defended, DeriveSeed(seed, 3));
              const PropertyEstimate est =
                  InferProportion(defended, *disc, cfg.pia.m_hat, yf, DeriveSeed(seed, 5));
              const SamplingFn undefended =
                  detail::MakeSampler(cfg, *st.clean_subset, DeriveSeed(seed, 6));
              const PropertyEstimate base =
                  InferProportion(undefended, *disc, cfg.pia.m_hat, yf, DeriveSeed(seed, 7));
              row["true_proportion"] = truth;
              row["defended_proportion"] = PropertyProportion(res.dataset, cfg.pia.target_s, yf);
              row["r_hat"] = est.r_hat;
              row["l1"] = L1Error(est.r_hat, truth);
              row["undefended_r_hat"] = base.r_hat;
              row["undefended_l1"] = L1Error(base.r_hat, truth);
            }
            break;
          }
          case Pipeline::kPiaSweep:
          case Pipeline::kCoverageAudit: {
            const double r = point_values[p].at("proportion").get<double>();
            DatasetSource source = cfg.dataset;
            source.synthetic =
                WithClassProportion(*source.synthetic, cfg.pia.target_s, cfg.pia.y_filter, r);
            const detail::Split split = detail::BuildSplit(cfg, source, false, seed);
            const int yf = cfg.pia.y_filter;
            const double truth = PropertyProportion(split.train, cfg.pia.target_s, yf);
            const SamplingFn oracle = detail::MakeSampler(cfg, split.train, DeriveSeed(seed, 3));
            row["true_proportion"] = truth;
            if (cfg.pipeline == Pipeline::kPiaSweep) {
              const auto disc = detail::MakeDiscriminator(cfg, oracle, DeriveSeed(seed, 4));
              const PropertyEstimate est =
                  InferProportion(oracle, *disc, cfg.pia.m_hat, yf, DeriveSeed(seed, 5));
              row["r_hat"] = est.r_hat;
              row["l1"] = L1Error(est.r_hat, truth);
              row["bound_epsilon_at_0.05"] = EpsilonForFailureProb(cfg.pia.m_hat, 0.05);
            } else {
              double worst = 0.0;
              for (int y = 0; y < split.train.schema().label_count(); ++y) {
                const TabularDataset synth =
                    oracle(cfg.coverage.samples, DeriveSeed(seed, 6, y), y);
                // A class-conditional sample only speaks to that class's entries.
                const CoverageReport cr = CheckCoverage(split.train, synth, cfg.coverage.margin);
                for (const CoverageEntry& e : cr.entries) {
                  if (e.y_filter == y) worst = std::max(worst, e.deviation);
                }
              }
              row["max_deviation"] = worst;
              row["pass"] = worst <= cfg.coverage.margin;
            }
            break;
          }
          case Pipeline::kBoundCheck: {
            const detail::Split split =
                detail::BuildSplit(cfg, cfg.dataset, cfg.balance, data_seed);
            const int yf = cfg.pia.y_filter;
            const SamplingFn oracle = detail::MakeSampler(cfg, split.train, DeriveSeed(seed, 0));
            // The oracle's own proportion: exact for the bootstrap sampler
            // and for the cell oracle, whose P(S, Y) is the training joint.
            const double r_star = PropertyProportion(split.train, cfg.pia.target_s, yf);
            const auto disc = detail::MakeDiscriminator(cfg, oracle, DeriveSeed(seed, 1));
            const PropertyEstimate est =
                InferProportion(oracle, *disc, cfg.bound.m_hat, yf, DeriveSeed(seed, 2));
            row["r_star"] = r_star;
            row["r_hat"] = est.r_hat;
            row["deviation"] = std::abs(est.r_hat - r_star);
            row["exceeded"] = std::abs(est.r_hat - r_star) >= cfg.bound.epsilon;
            row["bound"] = HoeffdingFailureProb(cfg.bound.m_hat, cfg.bound.epsilon);
            break;
          }
        }
      } catch (const Error& e) {
        row["error"] = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }

  report.summary = Json::array();
  for (std::size_t p = 0; p < point_values.size(); ++p) {
    std::vector<const Json*> rows;
    for (const Json& r : report.rows) {
      if (r.at("point").get<std::size_t>() == p) rows.push_back(&r);
    }
    Json entry = detail::Aggregate(rows);
    entry["point"] = p;
    entry.update(point_values[p]);
    report.summary.push_back(entry);
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// <dir>/rows.jsonl (one row per line) and <dir>/summary.json.
inline void WriteReport(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream rows(std::filesystem::path(dir) / "rows.jsonl");
  if (!rows) throw ConfigError("cannot write report rows under '" + dir + "'");
  for (const Json& r : report.rows) rows << r.dump() << '\n';
  WriteJsonFile((std::filesystem::path(dir) / "summary.json").string(), report.SummaryJson());
}

}  // namespace sharebench

#endif  // SHAREBENCH_EXPERIMENT_HPP_
