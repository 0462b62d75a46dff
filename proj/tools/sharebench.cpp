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

// sharebench: command-line front end. Exit codes: 0 success, 1 usage error,
// 2 runtime error. SHAREBENCH_SEED replaces the default seed of every
// subcommand and the master seed of `run`; an explicit --seed still wins.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "sharebench/sharebench.hpp"

namespace sb = sharebench;

namespace {

// Bad flag values and missing flag alternatives; exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<std::uint64_t> EnvSeed() {
  const char* v = std::getenv("SHAREBENCH_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return seed;
  } catch (const std::exception&) {
    throw UsageError(std::string("SHAREBENCH_SEED is not an unsigned integer: ") + v);
  }
}

// Flag value if given, else SHAREBENCH_SEED, else 0.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  return EnvSeed().value_or(0);
}

std::string SidecarPath(const std::string& csv) { return csv + ".schema.json"; }

sb::Schema ResolveSchema(const std::string& csv, const std::string& schema_path) {
  const std::string path = schema_path.empty() ? SidecarPath(csv) : schema_path;
  if (!std::filesystem::exists(path)) {
    throw UsageError("no schema for '" + csv + "': pass --schema or provide " +
                     SidecarPath(csv));
  }
  return sb::SchemaFromJson(sb::ReadJsonFile(path));
}

sb::TabularDataset LoadData(const std::string& csv, const std::string& schema_path) {
  return sb::LoadCsv(csv, ResolveSchema(csv, schema_path));
}

void SaveData(const std::string& path, const sb::TabularDataset& d) {
  sb::SaveCsv(path, d);
  sb::WriteJsonFile(SidecarPath(path), sb::SchemaToJson(d.schema()));
}

// "s=1" or "1": a sensitive domain value or index.
int ParseTarget(const std::string& text, const sb::Schema& schema) {
  std::string value = text;
  if (value.rfind("s=", 0) == 0) value = value.substr(2);
  if (const auto idx = schema.SensitiveIndex(value)) return *idx;
  try {
    std::size_t used = 0;
    const int idx = std::stoi(value, &used);
    if (used == value.size() && idx >= 0 && idx < schema.sensitive_count()) return idx;
  } catch (const std::exception&) {
  }
  throw UsageError("unknown sensitive target '" + text + "'");
}

// A label value or index.
int ParseLabel(const std::string& text, const sb::Schema& schema) {
  if (const auto idx = schema.LabelIndex(text)) return *idx;
  try {
    std::size_t used = 0;
    const int idx = std::stoi(text, &used);
    if (used == text.size() && idx >= 0 && idx < schema.label_count()) return idx;
  } catch (const std::exception&) {
  }
  throw UsageError("unknown label '" + text + "'");
}

void Print(const sb::Json& j) { std::cout << j.dump(2) << '\n'; }

sb::Json PoisonSummary(const sb::PoisonResult& r) {
  return {{"status", sb::PoisonStatusName(r.status)},
          {"records", r.dataset.size()},
          {"c", r.c},
          {"xi", r.xi},
          {"achieved_sy_mi", r.achieved_sy_mi},
          {"utility_mi", r.utility_mi},
          {"utility_distance", r.utility_distance},
          {"fallback_count", r.fallback_count},
          {"base_attempts", r.base_attempts}};
}

struct PoisonFlags {
  double alpha = 0.5;
  std::optional<double> xi;
  std::size_t m_p = 0;
  std::size_t candidates = 100;
  int bins = 8;
  std::optional<std::uint64_t> seed;

  void Register(CLI::App* app) {
    app->add_option("--alpha", alpha, "Poisoning fraction in [0, 1]");
    app->add_option("--xi", xi, "Utility tolerance (default 0.1 * c)");
    app->add_option("--m-p", m_p, "Shared dataset size (default |D|)");
    app->add_option("--candidates", candidates, "Candidate pool size per slot");
    app->add_option("--bins", bins, "Equal-frequency bins per feature");
    app->add_option("--seed", seed, "Seed");
  }
  sb::PoisonConfig Config() const {
    sb::PoisonConfig c;
    c.alpha = alpha;
    c.xi = xi;
    c.m_p = m_p;
    c.candidate_pool = candidates;
    c.seed = ResolveSeed(seed);
    c.binning.bins_per_feature = bins;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness poisoning and property inference against shared generative models"};
  app.require_subcommand(1);

  std::string data, schema, out, spec_path, oracle_path, model_path, clean_model_path;
  std::optional<std::uint64_t> seed;

  auto* gen = app.add_subcommand("gen-data", "Synthesize a tabular dataset from a spec");
  gen->add_option("--spec", spec_path, "SyntheticSpec JSON")->required();
  gen->add_option("--out", out, "Output CSV")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  int components = 3;
  std::string sampler_name = "ncsn";
  auto* fit = app.add_subcommand("fit-oracle", "Fit the cell-conditional diffusion oracle");
  fit->add_option("--data", data, "Training CSV")->required();
  fit->add_option("--schema", schema, "Schema JSON (default <csv>.schema.json)");
  fit->add_option("--out", out, "Oracle JSON")->required();
  fit->add_option("--components", components, "Mixture components per cell");
  fit->add_option("--sampler", sampler_name, "ncsn or ddpm (picks the default schedule)");
  fit->add_option("--seed", seed, "Seed");

  std::size_t n = 1000;
  std::optional<std::string> y_text;
  auto* sample = app.add_subcommand("sample", "Draw synthetic records from an oracle");
  sample->add_option("--oracle", oracle_path, "Oracle JSON")->required();
  sample->add_option("--n", n, "Record count");
  sample->add_option("--y", y_text, "Restrict to one label");
  sample->add_option("--out", out, "Output CSV")->required();
  sample->add_option("--seed", seed, "Seed");

  PoisonFlags poison;
  auto* fpa = app.add_subcommand("fpa", "Greedy fairness poisoning sampler");
  fpa->add_option("--data", data, "Private dataset CSV")->required();
  fpa->add_option("--schema", schema, "Schema JSON");
  fpa->add_option("--out", out, "Poisoned CSV (written when status is ok)");
  poison.Register(fpa);

  std::string objective = "sensitive";
  auto* flip = app.add_subcommand("label-flip", "Label-flipping baseline");
  flip->add_option("--data", data, "Dataset CSV")->required();
  flip->add_option("--schema", schema, "Schema JSON");
  flip->add_option("--out", out, "Output CSV")->required();
  flip->add_option("--alpha", poison.alpha, "Fraction of labels to flip");
  flip->add_option("--bins", poison.bins, "Bins per feature for the utility objective");
  flip->add_option("--objective", objective, "sensitive or utility");

  std::string target_text = "1";
  auto* defend = app.add_subcommand("defend", "Re-sampling defense against inference");
  defend->add_option("--data", data, "Private dataset CSV")->required();
  defend->add_option("--schema", schema, "Schema JSON");
  defend->add_option("--out", out, "Defended CSV (written when status is ok)");
  defend->add_option("--target", target_text, "Protected sensitive value, e.g. s=1");
  defend->add_option("--y", y_text, "Only move this class's proportion");
  poison.Register(defend);

  std::size_t m_hat = 200;
  double tpr = 1.0, fpr = 0.0;
  auto* pia = app.add_subcommand("pia", "Black-box property inference");
  auto* pia_oracle = pia->add_option("--oracle", oracle_path, "Oracle JSON");
  pia->add_option("--data", data, "Bootstrap oracle over this CSV instead")->excludes(pia_oracle);
  pia->add_option("--schema", schema, "Schema JSON (with --data)");
  pia->add_option("--sampler", sampler_name, "ncsn or ddpm (with --oracle)");
  pia->add_option("--m-hat", m_hat, "Samples to draw");
  pia->add_option("--y", y_text, "Class filter");
  pia->add_option("--target", target_text, "Property, e.g. s=1");
  pia->add_option("--tpr", tpr, "Discriminator true-positive rate");
  pia->add_option("--fpr", fpr, "Discriminator false-positive rate");
  pia->add_option("--seed", seed, "Seed");

  sb::TrainConfig tc;
  std::string kind = "logistic";
  bool no_sensitive = false;
  auto* train = app.add_subcommand("train", "Train a downstream classifier");
  train->add_option("--data", data, "Training CSV")->required();
  train->add_option("--schema", schema, "Schema JSON");
  train->add_option("--out", out, "Model JSON")->required();
  train->add_option("--kind", kind, "logistic or mlp");
  train->add_option("--learning-rate", tc.learning_rate, "Initial step size");
  train->add_option("--iterations", tc.iterations, "Full-batch iterations");
  train->add_option("--hidden", tc.hidden_units, "Hidden units (mlp)");
  train->add_option("--l2", tc.l2, "Weight penalty");
  train->add_flag("--no-sensitive", no_sensitive, "Leave s out of the inputs");
  train->add_option("--seed", seed, "Seed");

  auto* eval = app.add_subcommand("evaluate", "Accuracy and DP gap on a test set");
  eval->add_option("--model", model_path, "Model JSON")->required();
  eval->add_option("--data", data, "Test CSV")->required();
  eval->add_option("--schema", schema, "Schema JSON");
  eval->add_option("--clean-model", clean_model_path, "Reference model for l_acc / l_fair");

  std::optional<double> delta, epsilon;
  std::optional<std::size_t> bound_m;
  auto* bound = app.add_subcommand("bound", "Hoeffding sample size or failure probability");
  bound->add_option("--epsilon", epsilon, "Tolerance")->required();
  auto* bound_delta = bound->add_option("--delta", delta, "Failure probability: print m_hat");
  bound->add_option("--m-hat", bound_m, "Sample count: print failure probability")
      ->excludes(bound_delta);

  std::string synth_path;
  double margin = 0.05;
  auto* coverage = app.add_subcommand("coverage", "Compare sensitive proportions");
  coverage->add_option("--train", data, "Training CSV")->required();
  coverage->add_option("--synthetic", synth_path, "Synthetic CSV")->required();
  coverage->add_option("--schema", schema, "Schema JSON");
  coverage->add_option("--margin", margin, "Allowed deviation");

  std::string config_path, output_dir;
  std::optional<std::size_t> reps;
  auto* run = app.add_subcommand("run", "Run a full experiment config");
  run->add_option("--config", config_path, "ExperimentConfig JSON")->required();
  run->add_option("--output", output_dir, "Report directory (overrides config)");
  run->add_option("--repetitions", reps, "Override repetitions");
  run->add_option("--seed", seed, "Override master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) {
      sb::SyntheticSpec spec = sb::SyntheticSpecFromJson(sb::ReadJsonFile(spec_path));
      if (seed) {
        spec.seed = *seed;
      } else if (const auto env = EnvSeed()) {
        spec.seed = *env;
      }
      const auto d = sb::SynthesizeDataset(spec);
      SaveData(out, d);
      Print({{"records", d.size()}, {"out", out}, {"seed", spec.seed}});
    } else if (*fit) {
      const auto d = LoadData(data, schema);
      const auto o = sb::FitOracle(d, components,
                                   sb::DefaultSchedule(sb::SamplerFromName(sampler_name)),
                                   ResolveSeed(seed));
      sb::SaveOracle(out, o);
      Print({{"out", out}, {"schedule", sb::ScheduleKindName(o.schedule.kind)}});
    } else if (*sample) {
      const auto o = sb::LoadOracle(oracle_path);
      const sb::Sampler s = o.schedule.kind == sb::ScheduleKind::kVeNcsn
                                ? sb::Sampler::kNcsnLangevin
                                : sb::Sampler::kDdpmAncestral;
      std::optional<int> yf;
      if (y_text) yf = ParseLabel(*y_text, o.schema);
      const auto d = sb::SampleDataset(o, n, ResolveSeed(seed), s, yf);
      SaveData(out, d);
      Print({{"records", d.size()}, {"out", out}, {"sampler", sb::SamplerName(s)}});
    } else if (*fpa || *defend) {
      const auto d = LoadData(data, schema);
      const sb::PoisonConfig cfg = poison.Config();
      sb::PoisonResult r;
      if (*fpa) {
        r = sb::GreedySample(d, cfg);
      } else {
        std::optional<int> ty;
        if (y_text) ty = ParseLabel(*y_text, d.schema());
        r = sb::ResampleDefense(d, ParseTarget(target_text, d.schema()), cfg, ty);
      }
      if (r.status == sb::PoisonStatus::kOk && !out.empty()) SaveData(out, r.dataset);
      Print(PoisonSummary(r));
    } else if (*flip) {
      const auto d = LoadData(data, schema);
      sb::BinningSpec spec;
      spec.bins_per_feature = poison.bins;
      const auto flipped =
          sb::LabelFlipBaseline(d, poison.alpha, spec, sb::FlipObjectiveFromName(objective));
      SaveData(out, flipped);
      Print({{"records", flipped.size()},
             {"flipped", sb::LabelFlipSelection(d, poison.alpha, spec,
                                                sb::FlipObjectiveFromName(objective))
                             .size()}});
    } else if (*pia) {
      sb::SamplingFn oracle;
      sb::Schema sch;
      if (!oracle_path.empty()) {
        const auto o = sb::LoadOracle(oracle_path);
        sch = o.schema;
        oracle = sb::MakeOracleSampler(o, sb::SamplerFromName(sampler_name));
      } else if (!data.empty()) {
        const auto d = LoadData(data, schema);
        sch = d.schema();
        oracle = sb::MakeEmpiricalSampler(d);
      } else {
        throw UsageError("pia needs --oracle or --data");
      }
      std::optional<int> yf;
      if (y_text) yf = ParseLabel(*y_text, sch);
      const int target = ParseTarget(target_text, sch);
      const std::uint64_t s = ResolveSeed(seed);
      sb::ConfusionSpec conf{tpr, fpr, s};
      std::unique_ptr<sb::Discriminator> g;
      if (tpr == 1.0 && fpr == 0.0) {
        g = std::make_unique<sb::ExactFeatureDiscriminator>(target);
      } else {
        g = std::make_unique<sb::NoisyDiscriminator>(target, conf);
      }
      const auto est = sb::InferProportion(oracle, *g, m_hat, yf, s);
      Print({{"r_hat", est.r_hat},
             {"m_hat", est.sample_count},
             {"positives", est.positives},
             {"epsilon_at_0.05", sb::EpsilonForFailureProb(m_hat, 0.05)},
             {"symmetric_discriminator", conf.IsSymmetric()}});
    } else if (*train) {
      const auto d = LoadData(data, schema);
      tc.kind = sb::ClassifierKindFromName(kind);
      tc.include_sensitive = !no_sensitive;
      tc.seed = ResolveSeed(seed);
      const auto m = sb::TrainClassifier(d, tc);
      sb::WriteJsonFile(out, sb::ClassifierToJson(m));
      Print({{"out", out}, {"final_loss", m.final_loss}, {"train_accuracy", sb::Accuracy(m, d)}});
    } else if (*eval) {
      const auto test = LoadData(data, schema);
      const auto m = sb::ClassifierFromJson(sb::ReadJsonFile(model_path));
      if (clean_model_path.empty()) {
        Print({{"accuracy", sb::Accuracy(m, test)}, {"dp_gap", sb::DpGap(m, test)}});
      } else {
        const auto clean = sb::ClassifierFromJson(sb::ReadJsonFile(clean_model_path));
        const auto f = sb::MakeFairnessReport(clean, m, test);
        Print({{"accuracy_clean", f.accuracy_clean},
               {"accuracy_biased", f.accuracy_biased},
               {"dp_gap_clean", f.dp_gap_clean},
               {"dp_gap_biased", f.dp_gap_biased},
               {"l_acc", f.l_acc},
               {"l_fair", f.l_fair}});
      }
    } else if (*bound) {
      if (delta) {
        std::cout << sb::RequiredSampleSize(*delta, *epsilon) << '\n';
      } else if (bound_m) {
        std::cout << sb::HoeffdingFailureProb(*bound_m, *epsilon) << '\n';
      } else {
        throw UsageError("bound needs --delta or --m-hat");
      }
    } else if (*coverage) {
      const auto sch = ResolveSchema(data, schema);
      const auto tr = sb::LoadCsv(data, sch);
      const auto sy = sb::LoadCsv(synth_path, sch);
      const auto rep = sb::CheckCoverage(tr, sy, margin);
      sb::Json entries = sb::Json::array();
      for (const auto& e : rep.entries) {
        entries.push_back({{"s", e.s},
                           {"y", e.y_filter ? sb::Json(*e.y_filter) : sb::Json()},
                           {"train", e.train_proportion},
                           {"synthetic", e.synthetic_proportion},
                           {"deviation", e.deviation}});
      }
      Print({{"max_deviation", rep.max_deviation}, {"pass", rep.pass}, {"entries", entries}});
    } else if (*run) {
      sb::ExperimentConfig cfg = sb::LoadExperimentConfig(config_path);
      if (seed) {
        cfg.master_seed = *seed;
      } else if (const auto env = EnvSeed()) {
        cfg.master_seed = *env;
      }
      if (reps) cfg.repetitions = *reps;
      if (!output_dir.empty()) cfg.output = output_dir;
      const auto report = sb::RunExperiment(cfg);
      if (!cfg.output.empty()) sb::WriteReport(report, cfg.output);
      Print({{"pipeline", report.pipeline},
             {"master_seed", cfg.master_seed},
             {"rows", report.rows.size()},
             {"points", report.summary},
             {"output", cfg.output}});
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const sb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
