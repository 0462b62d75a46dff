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

// The receiver's classifier (softmax regression or a one-hidden-layer tanh
// MLP, trained by full-batch gradient descent) and the evaluation metrics.

#ifndef SHAREBENCH_DOWNSTREAM_HPP_
#define SHAREBENCH_DOWNSTREAM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sharebench/data.hpp"
#include "sharebench/error.hpp"
#include "sharebench/json_io.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

enum class ClassifierKind { kLogistic, kMlpOneHidden };

inline const char* ClassifierKindName(ClassifierKind k) {
  return k == ClassifierKind::kLogistic ? "logistic" : "mlp_one_hidden";
}

inline ClassifierKind ClassifierKindFromName(const std::string& name) {
  if (name == "logistic") return ClassifierKind::kLogistic;
  if (name == "mlp_one_hidden" || name == "mlp") return ClassifierKind::kMlpOneHidden;
  throw ConfigError("unknown classifier kind '" + name + "'");
}

struct TrainConfig {
  ClassifierKind kind = ClassifierKind::kLogistic;
  double learning_rate = 0.5;
  int iterations = 500;
  int hidden_units = 16;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool include_sensitive = true;  // one-hot S appended to the input

  void Validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
    if (kind == ClassifierKind::kMlpOneHidden && hidden_units < 1) {
      throw ConfigError("hidden_units must be >= 1");
    }
  }
};

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::kLogistic;
  Schema schema;
  bool include_sensitive = true;
  int output_count = 2;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  // Logistic: logits = W1 u + b1. MLP: h = tanh(W1 u + b1), logits = W2 h + b2.
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  double final_loss = 0.0;
  int iterations = 0;

  int input_dim() const {
    return schema.feature_count + (include_sensitive ? schema.sensitive_count() : 0);
  }

  // One row per record: standardized x, then one-hot s if enabled.
  Eigen::MatrixXd Inputs(const TabularDataset& d) const {
    if (d.schema().feature_count != schema.feature_count ||
        d.schema().sensitive_count() != schema.sensitive_count()) {
      throw ShapeError("classifier input does not match the training schema");
    }
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.size()), input_dim());
    for (std::size_t i = 0; i < d.size(); ++i) FillInput(d[i], u.row(static_cast<Eigen::Index>(i)));
    return u;
  }

  Eigen::MatrixXd Logits(const Eigen::MatrixXd& u) const {
    if (kind == ClassifierKind::kLogistic) {
      return (u * w1.transpose()).rowwise() + b1.transpose();
    }
    const Eigen::MatrixXd h = ((u * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
    return (h * w2.transpose()).rowwise() + b2.transpose();
  }

  Eigen::MatrixXd Probabilities(const TabularDataset& d) const {
    return Softmax(Logits(Inputs(d)));
  }

  Eigen::VectorXd Probabilities(const Record& r) const {
    if (static_cast<int>(r.x.size()) != schema.feature_count) {
      throw ShapeError("record has wrong feature count for this classifier");
    }
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, input_dim());
    FillInput(r, u.row(0));
    return Softmax(Logits(u)).row(0).transpose();
  }

  static Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    return p.array().colwise() / p.rowwise().sum().array();
  }

 private:
  template <typename Row>
  void FillInput(const Record& r, Row&& row) const {
    for (int j = 0; j < schema.feature_count; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      row(j) = (r.x[jj] - feature_mean[jj]) / feature_scale[jj];
    }
    if (include_sensitive) row(schema.feature_count + r.s) = 1.0;
  }
};

// Parameter vector layout: w1 (column-major), b1, then w2, b2 for the MLP.
inline Eigen::VectorXd FlattenParameters(const ClassifierModel& m) {
  std::vector<double> v;
  auto append = [&v](const auto& a) { v.insert(v.end(), a.data(), a.data() + a.size()); };
  append(m.w1);
  append(m.b1);
  if (m.kind == ClassifierKind::kMlpOneHidden) {
    append(m.w2);
    append(m.b2);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void UnflattenParameters(const Eigen::VectorXd& v, ClassifierModel& m) {
  Eigen::Index at = 0;
  auto take = [&](auto& a) {
    std::copy(v.data() + at, v.data() + at + a.size(), a.data());
    at += a.size();
  };
  take(m.w1);
  take(m.b1);
  if (m.kind == ClassifierKind::kMlpOneHidden) {
    take(m.w2);
    take(m.b2);
  }
  if (at != v.size()) throw ShapeError("parameter vector has wrong length");
}

// Mean cross-entropy plus (l2 / 2) * ||weights||^2 (biases unpenalized), and
// its gradient in FlattenParameters layout.
inline double LossAndGradient(const ClassifierModel& m, const Eigen::MatrixXd& u,
                              const std::vector<int>& targets, double l2,
                              Eigen::VectorXd* gradient) {
  const Eigen::Index n = u.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::MatrixXd h;
  Eigen::MatrixXd logits;
  if (m.kind == ClassifierKind::kLogistic) {
    logits = m.Logits(u);
  } else {
    h = ((u * m.w1.transpose()).rowwise() + m.b1.transpose()).array().tanh();
    logits = (h * m.w2.transpose()).rowwise() + m.b2.transpose();
  }
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Eigen::VectorXd log_norm =
      ((logits.colwise() - row_max).array().exp().rowwise().sum().log()).matrix() + row_max;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += log_norm(i) - logits(i, targets[static_cast<std::size_t>(i)]);
  }
  loss *= inv_n;
  double penalty = m.w1.squaredNorm();
  if (m.kind == ClassifierKind::kMlpOneHidden) penalty += m.w2.squaredNorm();
  loss += 0.5 * l2 * penalty;
  if (gradient == nullptr) return loss;

  Eigen::MatrixXd dlogits = (logits.colwise() - log_norm).array().exp();
  for (Eigen::Index i = 0; i < n; ++i) dlogits(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
  dlogits *= inv_n;
  ClassifierModel g = m;
  if (m.kind == ClassifierKind::kLogistic) {
    g.w1 = dlogits.transpose() * u + l2 * m.w1;
    g.b1 = dlogits.colwise().sum().transpose();
  } else {
    g.w2 = dlogits.transpose() * h + l2 * m.w2;
    g.b2 = dlogits.colwise().sum().transpose();
    const Eigen::MatrixXd da =
        ((dlogits * m.w2).array() * (1.0 - h.array().square())).matrix();
    g.w1 = da.transpose() * u + l2 * m.w1;
    g.b1 = da.colwise().sum().transpose();
  }
  *gradient = FlattenParameters(g);
  return loss;
}

// Sets up an untrained model (standardization fitted on `d`, small seeded
// random weights).
inline ClassifierModel InitializeClassifier(const TabularDataset& d, int output_count,
                                            const TrainConfig& cfg) {
  cfg.Validate();
  ClassifierModel m;
  m.kind = cfg.kind;
  m.schema = d.schema();
  m.include_sensitive = cfg.include_sensitive;
  m.output_count = output_count;
  const int dim = m.schema.feature_count;
  m.feature_mean.assign(static_cast<std::size_t>(dim), 0.0);
  m.feature_scale.assign(static_cast<std::size_t>(dim), 1.0);
  if (!d.empty()) {
    const Eigen::MatrixXd x = d.FeatureMatrix();
    for (int j = 0; j < dim; ++j) {
      const double mean = x.col(j).mean();
      const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
      m.feature_mean[static_cast<std::size_t>(j)] = mean;
      m.feature_scale[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
    }
  }
  Rng rng(cfg.seed);
  auto fill = [&rng](Eigen::MatrixXd& w, double sd) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = sd * StandardNormal(rng);
    }
  };
  const int in = m.input_dim();
  if (m.kind == ClassifierKind::kLogistic) {
    m.w1.resize(output_count, in);
    fill(m.w1, 0.01);
    m.b1 = Eigen::VectorXd::Zero(output_count);
  } else {
    m.w1.resize(cfg.hidden_units, in);
    fill(m.w1, 1.0 / std::sqrt(static_cast<double>(in)));
    m.b1 = Eigen::VectorXd::Zero(cfg.hidden_units);
    m.w2.resize(output_count, cfg.hidden_units);
    fill(m.w2, 1.0 / std::sqrt(static_cast<double>(cfg.hidden_units)));
    m.b2 = Eigen::VectorXd::Zero(output_count);
  }
  return m;
}

// Full-batch gradient descent on arbitrary class targets in [0, classes).
// A step that would raise the loss is retried with half the learning rate,
// so the recorded loss sequence never increases.
inline ClassifierModel TrainOnTargets(const TabularDataset& d, const std::vector<int>& targets,
                                      int classes, const TrainConfig& cfg,
                                      std::vector<double>* loss_trace = nullptr) {
  cfg.Validate();
  if (d.empty()) throw TrainingError("cannot train on an empty dataset");
  if (targets.size() != d.size()) throw ShapeError("one target per record required");
  std::vector<bool> seen(static_cast<std::size_t>(classes), false);
  int distinct = 0;
  for (int t : targets) {
    if (t < 0 || t >= classes) throw ShapeError("target outside [0, classes)");
    if (!seen[static_cast<std::size_t>(t)]) {
      seen[static_cast<std::size_t>(t)] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw TrainingError("training data holds a single class");

  ClassifierModel m = InitializeClassifier(d, classes, cfg);
  const Eigen::MatrixXd u = m.Inputs(d);
  Eigen::VectorXd theta = FlattenParameters(m);
  Eigen::VectorXd grad;
  double loss = LossAndGradient(m, u, targets, cfg.l2, &grad);
  if (loss_trace) loss_trace->assign(1, loss);
  double lr = cfg.learning_rate;
  ClassifierModel trial = m;
  Eigen::VectorXd trial_grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      const Eigen::VectorXd next = theta - lr * grad;
      UnflattenParameters(next, trial);
      const double next_loss = LossAndGradient(trial, u, targets, cfg.l2, &trial_grad);
      if (std::isfinite(next_loss) && next_loss <= loss) {
        theta = next;
        loss = next_loss;
        grad = trial_grad;
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (loss_trace) loss_trace->push_back(loss);
    m.iterations = it + 1;
    if (!accepted) break;  // step size underflowed: at a stationary point
  }
  UnflattenParameters(theta, m);
  m.final_loss = loss;
  if (!theta.allFinite()) throw TrainingError("training diverged to non-finite weights");
  return m;
}

// Classifier f_c(X, S) -> Y.
inline ClassifierModel TrainClassifier(const TabularDataset& d, const TrainConfig& cfg,
                                       std::vector<double>* loss_trace = nullptr) {
  return TrainOnTargets(d, d.LabelColumn(), d.schema().label_count(), cfg, loss_trace);
}

// Argmax of the softmax; ties go to the lowest class index.
inline std::vector<int> Predict(const ClassifierModel& m, const TabularDataset& d) {
  const Eigen::MatrixXd logits = m.Logits(m.Inputs(d));
  std::vector<int> out(d.size());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

inline double Accuracy(const std::vector<int>& predictions, const TabularDataset& d) {
  if (predictions.size() != d.size()) throw ShapeError("one prediction per record required");
  if (d.empty()) throw MetricError("accuracy of an empty test set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < d.size(); ++i) hits += predictions[i] == d[i].y ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

inline double Accuracy(const ClassifierModel& m, const TabularDataset& d) {
  return Accuracy(Predict(m, d), d);
}

// max over s, s' of |P(pred = 1 | S = s) - P(pred = 1 | S = s')|.
inline double DpGapFromPredictions(const std::vector<int>& predictions, const TabularDataset& d) {
  const Schema& schema = d.schema();
  if (schema.label_count() != 2) {
    throw MetricError("demographic parity gap needs a binary label domain");
  }
  if (predictions.size() != d.size()) throw ShapeError("one prediction per record required");
  const auto ns = static_cast<std::size_t>(schema.sensitive_count());
  std::vector<std::size_t> positives(ns, 0);
  std::vector<std::size_t> sizes(ns, 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto s = static_cast<std::size_t>(d[i].s);
    ++sizes[s];
    if (predictions[i] == 1) ++positives[s];
  }
  double lo = 1.0;
  double hi = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    if (sizes[s] == 0) {
      throw MetricError("sensitive group '" + schema.sensitive_domain[s] +
                        "' has no test records");
    }
    const double rate = static_cast<double>(positives[s]) / static_cast<double>(sizes[s]);
    lo = std::min(lo, rate);
    hi = std::max(hi, rate);
  }
  return hi - lo;
}

inline double DpGap(const ClassifierModel& m, const TabularDataset& test) {
  return DpGapFromPredictions(Predict(m, test), test);
}

struct FairnessReport {
  double accuracy_clean = 0.0;
  double accuracy_biased = 0.0;
  double dp_gap_clean = 0.0;
  double dp_gap_biased = 0.0;
  double l_acc = 0.0;
  double l_fair = 0.0;
};

inline FairnessReport FairnessFromMetrics(double accuracy_clean, double accuracy_biased,
                                          double dp_gap_clean, double dp_gap_biased) {
  if (accuracy_clean == 0.0) throw MetricError("l_acc is undefined when clean accuracy is 0");
  FairnessReport r;
  r.accuracy_clean = accuracy_clean;
  r.accuracy_biased = accuracy_biased;
  r.dp_gap_clean = dp_gap_clean;
  r.dp_gap_biased = dp_gap_biased;
  r.l_acc = (accuracy_clean - accuracy_biased) / accuracy_clean;
  r.l_fair = dp_gap_biased - dp_gap_clean;
  return r;
}

inline FairnessReport MakeFairnessReport(const ClassifierModel& clean,
                                         const ClassifierModel& biased,
                                         const TabularDataset& test) {
  const auto pc = Predict(clean, test);
  const auto pb = Predict(biased, test);
  return FairnessFromMetrics(Accuracy(pc, test), Accuracy(pb, test),
                             DpGapFromPredictions(pc, test), DpGapFromPredictions(pb, test));
}

inline double L1Error(double r_hat, double r) { return std::abs(r_hat - r); }

inline Json ClassifierToJson(const ClassifierModel& m) {
  Json j = {{"kind", ClassifierKindName(m.kind)},
            {"schema", SchemaToJson(m.schema)},
            {"include_sensitive", m.include_sensitive},
            {"output_count", m.output_count},
            {"feature_mean", m.feature_mean},
            {"feature_scale", m.feature_scale},
            {"w1", detail::MatrixToJson(m.w1)},
            {"b1", detail::VectorToJson(m.b1)},
            {"final_loss", m.final_loss},
            {"iterations", m.iterations}};
  if (m.kind == ClassifierKind::kMlpOneHidden) {
    j["w2"] = detail::MatrixToJson(m.w2);
    j["b2"] = detail::VectorToJson(m.b2);
  }
  return j;
}

inline ClassifierModel ClassifierFromJson(const Json& j) {
  try {
    ClassifierModel m;
    m.kind = ClassifierKindFromName(j.at("kind").get<std::string>());
    m.schema = SchemaFromJson(j.at("schema"));
    m.include_sensitive = j.at("include_sensitive").get<bool>();
    m.output_count = j.at("output_count").get<int>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    m.w1 = detail::MatrixFromJson(j.at("w1"));
    m.b1 = detail::VectorFromJson(j.at("b1"));
    if (m.kind == ClassifierKind::kMlpOneHidden) {
      m.w2 = detail::MatrixFromJson(j.at("w2"));
      m.b2 = detail::VectorFromJson(j.at("b2"));
    }
    m.final_loss = j.at("final_loss").get<double>();
    m.iterations = j.at("iterations").get<int>();
    if (m.w1.cols() != m.input_dim()) throw ShapeError("classifier weights do not match schema");
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed classifier document: ") + e.what());
  }
}

}  // namespace sharebench

#endif  // SHAREBENCH_DOWNSTREAM_HPP_
