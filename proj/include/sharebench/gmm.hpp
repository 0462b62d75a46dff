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

// Diagonal-covariance Gaussian mixtures and their EM fit.

#ifndef SHAREBENCH_GMM_HPP_
#define SHAREBENCH_GMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sharebench/error.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

inline constexpr double kVarianceFloor = 1e-6;

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;  // diagonal of each covariance

  int component_count() const { return static_cast<int>(weights.size()); }
  int dimension() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  void Validate() const {
    if (weights.empty()) throw ConfigError("mixture needs at least one component");
    if (means.size() != weights.size() || variances.size() != weights.size()) {
      throw ShapeError("mixture parameter lists differ in length");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (!(weights[k] >= 0.0)) throw ConfigError("mixture weight must be >= 0");
      sum += weights[k];
      if (means[k].size() != means[0].size() || variances[k].size() != means[0].size()) {
        throw ShapeError("mixture components differ in dimension");
      }
      if (!(variances[k].array() > 0.0).all()) {
        throw ConfigError("mixture variances must be positive");
      }
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
  }

  // log N(x | mean_k, diag(var_k)) for every component, plus log weight.
  Eigen::VectorXd WeightedComponentLogDensities(const Eigen::VectorXd& x) const {
    const int k_count = component_count();
    Eigen::VectorXd out(k_count);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (int k = 0; k < k_count; ++k) {
      const auto& var = variances[static_cast<std::size_t>(k)];
      const Eigen::VectorXd diff = x - means[static_cast<std::size_t>(k)];
      out(k) = std::log(weights[static_cast<std::size_t>(k)]) -
               0.5 * (static_cast<double>(x.size()) * log_2pi + var.array().log().sum() +
                      (diff.array().square() / var.array()).sum());
    }
    return out;
  }

  double LogDensity(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd l = WeightedComponentLogDensities(x);
    const double m = l.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((l.array() - m).exp().sum());
  }

  bool operator==(const GaussianMixture& o) const {
    if (weights != o.weights || means.size() != o.means.size()) return false;
    for (std::size_t k = 0; k < means.size(); ++k) {
      if (means[k] != o.means[k] || variances[k] != o.variances[k]) return false;
    }
    return true;
  }
};

struct GmmFitOptions {
  int components = 3;
  std::uint64_t seed = 0;
  int max_iters = 200;
  double tol = 1e-6;  // on mean log-likelihood per point
};

struct GmmFitResult {
  GaussianMixture model;
  std::vector<double> log_likelihood_trace;  // mean per point, one per E-step
  int iterations = 0;
  int components_dropped = 0;
};

namespace detail {

// k-means++ seeding over the rows of `points`.
inline std::vector<Eigen::VectorXd> KMeansPlusPlus(const Eigen::MatrixXd& points, int k,
                                                   Rng& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<Eigen::VectorXd> centers;
  centers.push_back(points.row(static_cast<Eigen::Index>(UniformIndex(rng, n))).transpose());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v =
          (points.row(static_cast<Eigen::Index>(i)).transpose() - centers.back()).squaredNorm();
      d2[i] = std::min(d2[i], v);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = Uniform01(rng) * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = UniformIndex(rng, n);
    }
    centers.push_back(points.row(static_cast<Eigen::Index>(pick)).transpose());
  }
  return centers;
}

enum class EmOutcome { kConverged, kDegenerate };

inline EmOutcome RunEm(const Eigen::MatrixXd& points, int k, const GmmFitOptions& opt,
                       GmmFitResult& result) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  Rng rng(opt.seed);
  GaussianMixture& g = result.model;
  g.weights.assign(static_cast<std::size_t>(k), 1.0 / k);
  g.means = KMeansPlusPlus(points, k, rng);
  const Eigen::RowVectorXd global_mean = points.colwise().mean();
  Eigen::VectorXd global_var =
      ((points.rowwise() - global_mean).array().square().colwise().sum() /
       static_cast<double>(n))
          .transpose();
  global_var = global_var.cwiseMax(kVarianceFloor);
  g.variances.assign(static_cast<std::size_t>(k), global_var);

  Eigen::MatrixXd resp(n, k);
  std::vector<int> floored_streak(static_cast<std::size_t>(k), 0);
  result.log_likelihood_trace.clear();
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    // E-step.
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd l = g.WeightedComponentLogDensities(points.row(i).transpose());
      const double m = l.maxCoeff();
      const Eigen::ArrayXd e = (l.array() - m).exp();
      const double s = e.sum();
      ll += m + std::log(s);
      resp.row(i) = (e / s).transpose();
    }
    ll /= static_cast<double>(n);
    result.iterations = iter + 1;
    const bool converged =
        !result.log_likelihood_trace.empty() &&
        std::abs(ll - result.log_likelihood_trace.back()) < opt.tol;
    result.log_likelihood_trace.push_back(ll);
    if (converged) return EmOutcome::kConverged;

    // M-step.
    for (int c = 0; c < k; ++c) {
      const double nk = resp.col(c).sum();
      if (!(nk > 1e-10 * static_cast<double>(n))) return EmOutcome::kDegenerate;
      const Eigen::VectorXd mu = (points.transpose() * resp.col(c)) / nk;
      Eigen::VectorXd var(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        var(j) = (resp.col(c).array() * (points.col(j).array() - mu(j)).square()).sum() / nk;
      }
      const bool floored = (var.array() < kVarianceFloor).any();
      auto& streak = floored_streak[static_cast<std::size_t>(c)];
      streak = floored ? streak + 1 : 0;
      if (streak > 10 && k > 1) return EmOutcome::kDegenerate;
      g.weights[static_cast<std::size_t>(c)] = nk / static_cast<double>(n);
      g.means[static_cast<std::size_t>(c)] = mu;
      g.variances[static_cast<std::size_t>(c)] = var.cwiseMax(kVarianceFloor);
    }
    double total = 0.0;
    for (double w : g.weights) total += w;
    for (double& w : g.weights) w /= total;
  }
  return EmOutcome::kConverged;
}

}  // namespace detail

// EM with k-means++ seeding. A component whose variance sits on the floor
// for more than 10 consecutive iterations, or that loses all mass, triggers
// a refit with one component fewer. With K = 1 the floor is simply kept.
inline GmmFitResult FitGmmDetailed(const Eigen::MatrixXd& points, const GmmFitOptions& opt) {
  if (opt.components < 1) throw ConfigError("fit_gmm: K must be >= 1");
  if (opt.max_iters < 1) throw ConfigError("fit_gmm: max_iters must be >= 1");
  const Eigen::Index need = opt.components * (points.cols() + 1);
  if (points.rows() < need) {
    throw ConfigError("fit_gmm: need at least K*(d+1) = " + std::to_string(need) +
                      " points, got " + std::to_string(points.rows()));
  }
  GmmFitResult result;
  for (int k = opt.components; k >= 1; --k) {
    result = GmmFitResult{};
    result.components_dropped = opt.components - k;
    if (detail::RunEm(points, k, opt, result) == detail::EmOutcome::kConverged) break;
  }
  return result;
}

inline GaussianMixture FitGmm(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                              int max_iters = 200, double tol = 1e-6) {
  return FitGmmDetailed(points, {k, seed, max_iters, tol}).model;
}

}  // namespace sharebench

#endif  // SHAREBENCH_GMM_HPP_
