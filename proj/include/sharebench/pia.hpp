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

// Receiver-side property inference: sample from the oracle, count records
// a discriminator flags as carrying the property, and bound the error with
// Hoeffding's inequality.

#ifndef SHAREBENCH_PIA_HPP_
#define SHAREBENCH_PIA_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "sharebench/data.hpp"
#include "sharebench/downstream.hpp"
#include "sharebench/error.hpp"
#include "sharebench/oracle.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

// g_d: confidence in [0, 1] that a record carries sensitive value target().
// Implementations are deterministic in (record, seed).
class Discriminator {
 public:
  virtual ~Discriminator() = default;
  virtual int target() const = 0;
  virtual double Confidence(const Record& r, std::uint64_t seed) const = 0;
};

// Reads s straight off the record (tabular data carries it explicitly).
class ExactFeatureDiscriminator : public Discriminator {
 public:
  explicit ExactFeatureDiscriminator(int target) : target_(target) {}
  int target() const override { return target_; }
  double Confidence(const Record& r, std::uint64_t) const override {
    return r.s == target_ ? 1.0 : 0.0;
  }

 private:
  int target_;
};

struct ConfusionSpec {
  double tpr = 1.0;  // P(flag | s = target)
  double fpr = 0.0;  // P(flag | s != target)
  std::uint64_t seed = 0;

  void Validate() const {
    if (!(tpr >= 0.0 && tpr <= 1.0) || !(fpr >= 0.0 && fpr <= 1.0)) {
      throw ConfigError("confusion rates must lie in [0, 1]");
    }
  }
  // Equal error rates on both sides; the regime the Hoeffding bound covers.
  bool IsSymmetric() const { return std::abs((1.0 - tpr) - fpr) < 1e-12; }
};

// The exact discriminator with per-class errors drawn from ConfusionSpec.
class NoisyDiscriminator : public Discriminator {
 public:
  NoisyDiscriminator(int target, ConfusionSpec spec) : target_(target), spec_(spec) {
    spec_.Validate();
  }
  int target() const override { return target_; }
  const ConfusionSpec& spec() const { return spec_; }
  double Confidence(const Record& r, std::uint64_t seed) const override {
    Rng rng(DeriveSeed(spec_.seed, seed));
    const double u = Uniform01(rng);
    const bool flag = r.s == target_ ? u < spec_.tpr : u < spec_.fpr;
    return flag ? 1.0 : 0.0;
  }

 private:
  int target_;
  ConfusionSpec spec_;
};

// A downstream classifier trained to predict 1[s = target] from x alone.
class LearnedDiscriminator : public Discriminator {
 public:
  LearnedDiscriminator(int target, ClassifierModel model)
      : target_(target), model_(std::move(model)) {}
  int target() const override { return target_; }
  const ClassifierModel& model() const { return model_; }
  double Confidence(const Record& r, std::uint64_t) const override {
    return model_.Probabilities(r)(1);
  }

 private:
  int target_;
  ClassifierModel model_;
};

inline LearnedDiscriminator TrainLearnedDiscriminator(const TabularDataset& auxiliary, int target,
                                                      TrainConfig cfg) {
  cfg.include_sensitive = false;
  std::vector<int> targets(auxiliary.size());
  for (std::size_t i = 0; i < auxiliary.size(); ++i) targets[i] = auxiliary[i].s == target ? 1 : 0;
  return LearnedDiscriminator(target, TrainOnTargets(auxiliary, targets, 2, cfg));
}

struct PropertyEstimate {
  double r_hat = 0.0;
  std::size_t sample_count = 0;
  std::size_t positives = 0;
  int target = 0;
  std::optional<int> y_filter;
};

// Counts confidences above 0.5. Record i is judged with seed
// DeriveSeed(seed, 1, i).
inline PropertyEstimate EstimateFromSamples(const TabularDataset& samples, const Discriminator& g,
                                            std::uint64_t seed, std::optional<int> y_filter) {
  if (samples.empty()) throw ConfigError("property inference needs at least one sample");
  PropertyEstimate e;
  e.sample_count = samples.size();
  e.target = g.target();
  e.y_filter = y_filter;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (g.Confidence(samples[i], DeriveSeed(seed, 1, i)) > 0.5) ++e.positives;
  }
  e.r_hat = static_cast<double>(e.positives) / static_cast<double>(e.sample_count);
  return e;
}

// Draws m_hat records with DeriveSeed(seed, 0) and estimates r_s.
inline PropertyEstimate InferProportion(const SamplingFn& oracle, const Discriminator& g,
                                        std::size_t m_hat, std::optional<int> y_filter,
                                        std::uint64_t seed) {
  if (m_hat < 1) throw ConfigError("m_hat must be >= 1");
  return EstimateFromSamples(oracle(m_hat, DeriveSeed(seed, 0), y_filter), g, seed, y_filter);
}

// One estimate per sensitive category, all over the same drawn samples.
// No renormalization.
inline std::map<int, PropertyEstimate> OneVsAllInfer(
    const SamplingFn& oracle, const std::map<int, const Discriminator*>& discriminators,
    int sensitive_count, std::size_t m_hat, std::optional<int> y_filter, std::uint64_t seed) {
  if (m_hat < 1) throw ConfigError("m_hat must be >= 1");
  for (int s = 0; s < sensitive_count; ++s) {
    const auto it = discriminators.find(s);
    if (it == discriminators.end() || it->second == nullptr) {
      throw ConfigError("no discriminator for sensitive category " + std::to_string(s));
    }
  }
  const TabularDataset samples = oracle(m_hat, DeriveSeed(seed, 0), y_filter);
  std::map<int, PropertyEstimate> out;
  for (int s = 0; s < sensitive_count; ++s) {
    out[s] = EstimateFromSamples(samples, *discriminators.at(s), DeriveSeed(seed, 2, s), y_filter);
  }
  return out;
}

// sum_y m_y r_{s,y} / sum_y m_y.
inline double OverallProportion(const std::map<int, PropertyEstimate>& per_class,
                                const std::map<int, std::size_t>& class_sizes) {
  if (per_class.empty() || per_class.size() != class_sizes.size()) {
    throw ConfigError("per-class estimates and class sizes must cover the same classes");
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& [y, est] : per_class) {
    const auto it = class_sizes.find(y);
    if (it == class_sizes.end()) {
      throw ConfigError("no class size for label " + std::to_string(y));
    }
    if (it->second == 0) throw ConfigError("class sizes must be positive");
    num += static_cast<double>(it->second) * est.r_hat;
    den += static_cast<double>(it->second);
  }
  return num / den;
}

// min(1, 2 exp(-2 m eps^2)).
inline double HoeffdingFailureProb(std::size_t m_hat, double epsilon) {
  if (m_hat < 1) throw ConfigError("m_hat must be >= 1");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(m_hat) * epsilon * epsilon));
}

// ceil(ln(2 / delta) / (2 eps^2)).
inline std::size_t RequiredSampleSize(double delta, double epsilon) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  return StableCeil(std::log(2.0 / delta) / (2.0 * epsilon * epsilon));
}

// The eps at which the failure probability for m_hat samples equals `prob`.
inline double EpsilonForFailureProb(std::size_t m_hat, double prob) {
  if (m_hat < 1) throw ConfigError("m_hat must be >= 1");
  if (!(prob > 0.0 && prob <= 2.0)) throw ConfigError("failure probability must lie in (0, 2]");
  return std::sqrt(std::log(2.0 / prob) / (2.0 * static_cast<double>(m_hat)));
}

}  // namespace sharebench

#endif  // SHAREBENCH_PIA_HPP_
