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

// The generative oracle: P(S, Y) from training counts times a per-cell
// Gaussian mixture for P(X | S, Y), sampled through a reverse diffusion
// process. Receivers only ever see it through a SamplingFn.

#ifndef SHAREBENCH_ORACLE_HPP_
#define SHAREBENCH_ORACLE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sharebench/data.hpp"
#include "sharebench/diffusion.hpp"
#include "sharebench/error.hpp"
#include "sharebench/gmm.hpp"
#include "sharebench/json_io.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

enum class Sampler { kNcsnLangevin, kDdpmAncestral };

inline const char* SamplerName(Sampler s) {
  return s == Sampler::kNcsnLangevin ? "ncsn" : "ddpm";
}

inline Sampler SamplerFromName(const std::string& name) {
  if (name == "ncsn") return Sampler::kNcsnLangevin;
  if (name == "ddpm") return Sampler::kDdpmAncestral;
  throw ConfigError("unknown sampler '" + name + "' (expected ncsn or ddpm)");
}

// The schedule kind each sampler runs on.
inline ScheduleKind RequiredScheduleKind(Sampler s) {
  return s == Sampler::kNcsnLangevin ? ScheduleKind::kVeNcsn : ScheduleKind::kVpDdpm;
}

inline NoiseSchedule DefaultSchedule(Sampler s) {
  return s == Sampler::kNcsnLangevin ? NoiseSchedule::GeometricVe()
                                     : NoiseSchedule::LinearVp();
}

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // > 0

  bool operator==(const Standardization&) const = default;
};

struct CellOracle {
  Schema schema;
  EmpiricalJoint cell_joint;
  std::vector<std::optional<GaussianMixture>> models;  // row-major [s][y]
  NoiseSchedule schedule;
  Standardization standardization;

  const std::optional<GaussianMixture>& model(int s, int y) const {
    return models[static_cast<std::size_t>(s * schema.label_count() + y)];
  }

  void Validate() const {
    schema.Validate();
    schedule.Validate();
    const auto cells = static_cast<std::size_t>(schema.sensitive_count() * schema.label_count());
    if (models.size() != cells || cell_joint.counts.size() != cells) {
      throw ShapeError("oracle: cell tables do not match the schema");
    }
    const auto d = static_cast<std::size_t>(schema.feature_count);
    if (standardization.mean.size() != d || standardization.scale.size() != d) {
      throw ShapeError("oracle: standardization has wrong dimension");
    }
    for (double s : standardization.scale) {
      if (!(s > 0.0)) throw ConfigError("oracle: standardization scale must be positive");
    }
    for (int s = 0; s < schema.sensitive_count(); ++s) {
      for (int y = 0; y < schema.label_count(); ++y) {
        if (cell_joint.count(s, y) > 0 && !model(s, y)) {
          throw ConfigError("oracle: cell " + CellName(s, y) + " has mass but no model");
        }
      }
    }
  }

  bool operator==(const CellOracle&) const = default;
};

// Returns a copy that samples with `schedule` (e.g. to switch samplers).
inline CellOracle WithSchedule(CellOracle o, NoiseSchedule schedule) {
  schedule.Validate();
  o.schedule = std::move(schedule);
  return o;
}

// Standardizes features with the pooled mean/stddev, then fits one mixture
// per (s, y) cell. Every cell must hold at least K * (d + 1) records; with
// `allow_empty_cells`, cells holding none get zero mass and no model.
inline CellOracle FitOracle(const TabularDataset& d, int k, NoiseSchedule schedule,
                            std::uint64_t seed, int max_iters = 200, double tol = 1e-6,
                            bool allow_empty_cells = false) {
  if (k < 1) throw ConfigError("fit_oracle: K must be >= 1");
  schedule.Validate();
  const Schema& schema = d.schema();
  const int ns = schema.sensitive_count();
  const int ny = schema.label_count();
  const int dim = schema.feature_count;
  const EmpiricalJoint joint = ComputeEmpiricalJoint(d);
  const std::int64_t need = static_cast<std::int64_t>(k) * (dim + 1);
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      if (allow_empty_cells && joint.count(s, y) == 0) continue;
      if (joint.count(s, y) < need) {
        throw FitError("cell (s=" + std::to_string(s) + ",y=" + std::to_string(y) + ") has " +
                       std::to_string(joint.count(s, y)) + " records; need at least " +
                       std::to_string(need));
      }
    }
  }

  CellOracle o;
  o.schema = schema;
  o.cell_joint = joint;
  o.schedule = std::move(schedule);
  const Eigen::MatrixXd x = d.FeatureMatrix();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  o.standardization.mean.resize(static_cast<std::size_t>(dim));
  o.standardization.scale.resize(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    const double var = (x.col(j).array() - mean(j)).square().mean();
    const double sd = std::sqrt(var);
    o.standardization.mean[static_cast<std::size_t>(j)] = mean(j);
    o.standardization.scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
  }

  o.models.resize(static_cast<std::size_t>(ns * ny));
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      if (joint.count(s, y) == 0) continue;
      Eigen::MatrixXd pts(joint.count(s, y), dim);
      Eigen::Index row = 0;
      for (const Record& r : d.records()) {
        if (r.s != s || r.y != y) continue;
        for (int j = 0; j < dim; ++j) {
          const auto jj = static_cast<std::size_t>(j);
          pts(row, j) = (r.x[jj] - o.standardization.mean[jj]) / o.standardization.scale[jj];
        }
        ++row;
      }
      o.models[static_cast<std::size_t>(s * ny + y)] =
          FitGmm(pts, k, DeriveSeed(seed, s, y), max_iters, tol);
    }
  }
  return o;
}

// Draws each record's cell from the (optionally y-restricted) cell
// frequencies, then its features from that cell's reverse sampler. Record i
// uses streams derived from (seed, i) only.
inline TabularDataset SampleDataset(const CellOracle& o, std::size_t n, std::uint64_t seed,
                                    Sampler sampler, std::optional<int> y_filter = std::nullopt) {
  if (o.schedule.kind != RequiredScheduleKind(sampler)) {
    throw SamplingError(std::string("sampler ") + SamplerName(sampler) + " needs a " +
                        ScheduleKindName(RequiredScheduleKind(sampler)) +
                        " schedule but the oracle carries " + ScheduleKindName(o.schedule.kind));
  }
  const int ns = o.schema.sensitive_count();
  const int ny = o.schema.label_count();
  if (y_filter && (*y_filter < 0 || *y_filter >= ny)) {
    throw SamplingError("y_filter " + std::to_string(*y_filter) + " is outside the label domain");
  }
  std::vector<double> cumulative;
  std::vector<int> cell_of;
  double total = 0.0;
  for (int s = 0; s < ns; ++s) {
    for (int y = 0; y < ny; ++y) {
      if (y_filter && y != *y_filter) continue;
      const auto c = o.cell_joint.count(s, y);
      if (c <= 0) continue;
      total += static_cast<double>(c);
      cumulative.push_back(total);
      cell_of.push_back(s * ny + y);
    }
  }
  TabularDataset out(o.schema, Provenance::kSynthetic);
  if (n == 0) return out;
  if (total <= 0.0) {
    throw SamplingError(y_filter ? "no training mass for label index " + std::to_string(*y_filter)
                                 : std::string("oracle has no training mass"));
  }

  std::vector<std::unique_ptr<ReverseSampler>> samplers(o.models.size());
  out.Reserve(n);
  const int dim = o.schema.feature_count;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(DeriveSeed(seed, 0, i));
    const double u = Uniform01(rng) * total;
    std::size_t pick = 0;
    while (pick + 1 < cumulative.size() && u >= cumulative[pick]) ++pick;
    const int cell = cell_of[pick];
    auto& rs = samplers[static_cast<std::size_t>(cell)];
    if (!rs) {
      rs = std::make_unique<ReverseSampler>(*o.models[static_cast<std::size_t>(cell)],
                                            o.schedule);
    }
    const Eigen::VectorXd z = rs->Draw(DeriveSeed(seed, 1, i));
    Record r;
    r.x.resize(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      r.x[jj] = o.standardization.mean[jj] + o.standardization.scale[jj] * z(j);
    }
    r.s = cell / ny;
    r.y = cell % ny;
    out.Add(std::move(r));
  }
  return out;
}

// Black-box sampling access: (n, seed, y_filter) -> synthetic records.
using SamplingFn =
    std::function<TabularDataset(std::size_t, std::uint64_t, std::optional<int>)>;

inline SamplingFn MakeOracleSampler(CellOracle o, Sampler sampler) {
  auto shared = std::make_shared<const CellOracle>(std::move(o));
  return [shared, sampler](std::size_t n, std::uint64_t seed, std::optional<int> y_filter) {
    return SampleDataset(*shared, n, seed, sampler, y_filter);
  };
}

// Zero-generative-error baseline: resample training records uniformly with
// replacement (within the y_filter class when given).
inline SamplingFn MakeEmpiricalSampler(TabularDataset train) {
  auto shared = std::make_shared<const TabularDataset>(std::move(train));
  return [shared](std::size_t n, std::uint64_t seed, std::optional<int> y_filter) {
    const TabularDataset& d = *shared;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!y_filter || d[i].y == *y_filter) pool.push_back(i);
    }
    TabularDataset out(d.schema(), Provenance::kSynthetic);
    if (n == 0) return out;
    if (pool.empty()) throw SamplingError("empirical sampler: no records for the requested label");
    out.Reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(DeriveSeed(seed, i));
      out.Add(d[pool[UniformIndex(rng, pool.size())]]);
    }
    return out;
  };
}

struct CoverageEntry {
  int s = 0;
  std::optional<int> y_filter;
  double train_proportion = 0.0;
  double synthetic_proportion = 0.0;
  double deviation = 0.0;
};

struct CoverageReport {
  std::vector<CoverageEntry> entries;
  double max_deviation = 0.0;
  double margin = 0.05;
  bool pass = true;
};

// |r_s(train) - r_s(synthetic)| for every s, overall and within each class.
// Class filters absent from either dataset are skipped.
inline CoverageReport CheckCoverage(const TabularDataset& train, const TabularDataset& synthetic,
                                    double margin = 0.05) {
  if (train.empty() || synthetic.empty()) {
    throw ConfigError("check_coverage: both datasets must be non-empty");
  }
  if (!(train.schema() == synthetic.schema())) {
    throw ShapeError("check_coverage: schemas differ");
  }
  const EmpiricalJoint a = ComputeEmpiricalJoint(train);
  const EmpiricalJoint b = ComputeEmpiricalJoint(synthetic);
  CoverageReport report;
  report.margin = margin;
  const int ns = train.schema().sensitive_count();
  const int ny = train.schema().label_count();
  auto add = [&](int s, std::optional<int> y) {
    const double na = static_cast<double>(y ? a.label_total(*y) : a.total);
    const double nb = static_cast<double>(y ? b.label_total(*y) : b.total);
    if (na == 0.0 || nb == 0.0) return;
    CoverageEntry e;
    e.s = s;
    e.y_filter = y;
    e.train_proportion = static_cast<double>(y ? a.count(s, *y) : a.sensitive_total(s)) / na;
    e.synthetic_proportion = static_cast<double>(y ? b.count(s, *y) : b.sensitive_total(s)) / nb;
    e.deviation = std::abs(e.train_proportion - e.synthetic_proportion);
    report.max_deviation = std::max(report.max_deviation, e.deviation);
    report.entries.push_back(e);
  };
  for (int s = 0; s < ns; ++s) {
    add(s, std::nullopt);
    for (int y = 0; y < ny; ++y) add(s, y);
  }
  report.pass = report.max_deviation <= margin;
  return report;
}

inline Json OracleToJson(const CellOracle& o) {
  Json models = Json::array();
  for (int s = 0; s < o.schema.sensitive_count(); ++s) {
    for (int y = 0; y < o.schema.label_count(); ++y) {
      if (!o.model(s, y)) continue;
      Json m = MixtureToJson(*o.model(s, y));
      m["s"] = s;
      m["y"] = y;
      models.push_back(m);
    }
  }
  Json counts = Json::array();
  for (int s = 0; s < o.schema.sensitive_count(); ++s) {
    std::vector<std::int64_t> row;
    for (int y = 0; y < o.schema.label_count(); ++y) row.push_back(o.cell_joint.count(s, y));
    counts.push_back(row);
  }
  return {{"schema", SchemaToJson(o.schema)},
          {"schedule", ScheduleToJson(o.schedule)},
          {"standardization",
           {{"mean", o.standardization.mean}, {"scale", o.standardization.scale}}},
          {"cell_counts", counts},
          {"models", models}};
}

inline CellOracle OracleFromJson(const Json& j) {
  try {
    CellOracle o;
    o.schema = SchemaFromJson(j.at("schema"));
    o.schedule = ScheduleFromJson(j.at("schedule"));
    o.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    o.standardization.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    const int ns = o.schema.sensitive_count();
    const int ny = o.schema.label_count();
    const auto counts = j.at("cell_counts").get<std::vector<std::vector<std::int64_t>>>();
    if (counts.size() != static_cast<std::size_t>(ns)) {
      throw ShapeError("oracle: cell_counts has wrong shape");
    }
    o.cell_joint = EmpiricalJoint(ns, ny);
    for (int s = 0; s < ns; ++s) {
      if (counts[static_cast<std::size_t>(s)].size() != static_cast<std::size_t>(ny)) {
        throw ShapeError("oracle: cell_counts has wrong shape");
      }
      for (int y = 0; y < ny; ++y) {
        o.cell_joint.count(s, y) = counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
        o.cell_joint.total += o.cell_joint.count(s, y);
      }
    }
    o.models.resize(static_cast<std::size_t>(ns * ny));
    for (const auto& m : j.at("models")) {
      const int s = m.at("s").get<int>();
      const int y = m.at("y").get<int>();
      if (s < 0 || s >= ns || y < 0 || y >= ny) throw ShapeError("oracle: model cell out of range");
      o.models[static_cast<std::size_t>(s * ny + y)] = MixtureFromJson(m);
    }
    o.Validate();
    return o;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed oracle document: ") + e.what());
  }
}

inline void SaveOracle(const std::string& path, const CellOracle& o) {
  WriteJsonFile(path, OracleToJson(o));
}

inline CellOracle LoadOracle(const std::string& path) { return OracleFromJson(ReadJsonFile(path)); }

}  // namespace sharebench

#endif  // SHAREBENCH_ORACLE_HPP_
