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

// JSON conversions for the shared value types. Doubles are written in
// shortest round-trip form, so every document reloads bit-exactly.

#ifndef SHAREBENCH_JSON_IO_HPP_
#define SHAREBENCH_JSON_IO_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sharebench/data.hpp"
#include "sharebench/diffusion.hpp"
#include "sharebench/error.hpp"
#include "sharebench/gmm.hpp"

namespace sharebench {

using Json = nlohmann::json;

namespace detail {

inline Json VectorToJson(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd VectorFromJson(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

inline Json MatrixToJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(VectorToJson(m.row(i).transpose()));
  return rows;
}

inline Eigen::MatrixXd MatrixFromJson(const Json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
      throw ConfigError("matrix rows differ in length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

}  // namespace detail

inline Json SchemaToJson(const Schema& s) {
  return {{"feature_count", s.feature_count},
          {"sensitive_domain", s.sensitive_domain},
          {"label_domain", s.label_domain}};
}

inline Schema SchemaFromJson(const Json& j) {
  Schema s;
  s.feature_count = j.at("feature_count").get<int>();
  s.sensitive_domain = j.at("sensitive_domain").get<std::vector<std::string>>();
  s.label_domain = j.at("label_domain").get<std::vector<std::string>>();
  s.Validate();
  return s;
}

inline Json SyntheticSpecToJson(const SyntheticSpec& spec) {
  Json covs = Json::array();
  for (const auto& row : spec.cell_covariances) {
    Json r = Json::array();
    for (const auto& c : row) r.push_back(detail::MatrixToJson(c));
    covs.push_back(r);
  }
  return {{"schema", SchemaToJson(spec.schema)},
          {"cell_weights", spec.cell_weights},
          {"cell_means", spec.cell_means},
          {"cell_covariances", covs},
          {"size", spec.size},
          {"seed", spec.seed}};
}

// `cell_covariances` may be omitted (identity everywhere) or given per cell.
inline SyntheticSpec SyntheticSpecFromJson(const Json& j) {
  SyntheticSpec spec;
  spec.schema = SchemaFromJson(j.at("schema"));
  spec.cell_weights = j.at("cell_weights").get<std::vector<std::vector<double>>>();
  spec.cell_means = j.at("cell_means").get<std::vector<std::vector<std::vector<double>>>>();
  const int d = spec.schema.feature_count;
  if (j.contains("cell_covariances")) {
    for (const auto& row : j.at("cell_covariances")) {
      std::vector<Eigen::MatrixXd> r;
      for (const auto& c : row) r.push_back(detail::MatrixFromJson(c));
      spec.cell_covariances.push_back(std::move(r));
    }
  } else {
    spec.cell_covariances.assign(
        spec.cell_weights.size(),
        std::vector<Eigen::MatrixXd>(spec.cell_weights.empty() ? 0 : spec.cell_weights[0].size(),
                                     Eigen::MatrixXd::Identity(d, d)));
  }
  spec.size = j.at("size").get<std::size_t>();
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.Validate();
  return spec;
}

inline Json MixtureToJson(const GaussianMixture& g) {
  Json means = Json::array();
  Json vars = Json::array();
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    means.push_back(detail::VectorToJson(g.means[k]));
    vars.push_back(detail::VectorToJson(g.variances[k]));
  }
  return {{"weights", g.weights}, {"means", means}, {"variances", vars}};
}

inline GaussianMixture MixtureFromJson(const Json& j) {
  GaussianMixture g;
  g.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& m : j.at("means")) g.means.push_back(detail::VectorFromJson(m));
  for (const auto& v : j.at("variances")) g.variances.push_back(detail::VectorFromJson(v));
  g.Validate();
  return g;
}

inline Json ScheduleToJson(const NoiseSchedule& s) {
  Json j = {{"kind", ScheduleKindName(s.kind)}, {"T", s.T}};
  if (s.kind == ScheduleKind::kVpDdpm) {
    j["betas"] = s.betas;
  } else {
    j["sigmas"] = s.sigmas;
    j["langevin_steps_per_level"] = s.langevin_steps_per_level;
    j["langevin_step_scale"] = s.langevin_step_scale;
  }
  return j;
}

inline ScheduleKind ScheduleKindFromName(const std::string& name) {
  if (name == "vp_ddpm") return ScheduleKind::kVpDdpm;
  if (name == "ve_ncsn") return ScheduleKind::kVeNcsn;
  throw ConfigError("unknown schedule kind '" + name + "'");
}

inline NoiseSchedule ScheduleFromJson(const Json& j) {
  NoiseSchedule s;
  s.kind = ScheduleKindFromName(j.at("kind").get<std::string>());
  s.T = j.at("T").get<int>();
  if (s.kind == ScheduleKind::kVpDdpm) {
    s.betas = j.at("betas").get<std::vector<double>>();
  } else {
    s.sigmas = j.at("sigmas").get<std::vector<double>>();
    s.langevin_steps_per_level = j.at("langevin_steps_per_level").get<int>();
    s.langevin_step_scale = j.at("langevin_step_scale").get<double>();
  }
  s.Finalize();
  return s;
}

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace sharebench

#endif  // SHAREBENCH_JSON_IO_HPP_
