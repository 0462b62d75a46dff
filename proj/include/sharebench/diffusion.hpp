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

// Noise schedules, closed-form scores of noised Gaussian mixtures, and the
// two discrete reverse samplers (annealed Langevin and DDPM ancestral).
//
// Time index convention for both schedule kinds: t runs over [1, T] and
// t = T is the noisiest level.

#ifndef SHAREBENCH_DIFFUSION_HPP_
#define SHAREBENCH_DIFFUSION_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sharebench/error.hpp"
#include "sharebench/gmm.hpp"
#include "sharebench/random.hpp"

namespace sharebench {

enum class ScheduleKind { kVpDdpm, kVeNcsn };

inline const char* ScheduleKindName(ScheduleKind k) {
  return k == ScheduleKind::kVpDdpm ? "vp_ddpm" : "ve_ncsn";
}

struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::kVpDdpm;
  int T = 0;
  std::vector<double> betas;       // vp: beta_1..beta_T
  std::vector<double> alpha_bars;  // vp: prod_{i<=t} (1 - beta_i)
  std::vector<double> sigmas;      // ve: sampling order, sigma_max first
  int langevin_steps_per_level = 5;
  double langevin_step_scale = 1e-4;

  static NoiseSchedule LinearVp(int T = 1000, double beta_min = 1e-4, double beta_max = 0.02) {
    if (T < 1) throw ConfigError("schedule: T must be >= 1");
    NoiseSchedule s;
    s.kind = ScheduleKind::kVpDdpm;
    s.T = T;
    s.betas.resize(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      s.betas[static_cast<std::size_t>(i)] =
          T == 1 ? beta_min : beta_min + (beta_max - beta_min) * i / (T - 1);
    }
    s.Finalize();
    return s;
  }

  static NoiseSchedule GeometricVe(int levels = 100, double sigma_max = 10.0,
                                   double sigma_min = 0.01, int steps_per_level = 5,
                                   double step_scale = 1e-4) {
    if (levels < 2) throw ConfigError("schedule: need at least 2 noise levels");
    NoiseSchedule s;
    s.kind = ScheduleKind::kVeNcsn;
    s.T = levels;
    s.sigmas.resize(static_cast<std::size_t>(levels));
    const double ratio = std::log(sigma_min / sigma_max) / (levels - 1);
    for (int i = 0; i < levels; ++i) {
      s.sigmas[static_cast<std::size_t>(i)] = sigma_max * std::exp(ratio * i);
    }
    s.sigmas.back() = sigma_min;
    s.langevin_steps_per_level = steps_per_level;
    s.langevin_step_scale = step_scale;
    s.Validate();
    return s;
  }

  // Recomputes alpha_bars from betas and validates.
  void Finalize() {
    if (kind == ScheduleKind::kVpDdpm) {
      alpha_bars.resize(betas.size());
      double prod = 1.0;
      for (std::size_t i = 0; i < betas.size(); ++i) {
        prod *= 1.0 - betas[i];
        alpha_bars[i] = prod;
      }
    }
    Validate();
  }

  void Validate() const {
    if (kind == ScheduleKind::kVpDdpm) {
      if (T < 1 || betas.size() != static_cast<std::size_t>(T)) {
        throw ConfigError("vp schedule: expected T betas");
      }
      for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
          throw ConfigError("vp schedule: betas must lie in (0, 1)");
        }
        if (i > 0 && betas[i] < betas[i - 1]) {
          throw ConfigError("vp schedule: betas must be non-decreasing");
        }
      }
    } else {
      if (T < 1 || sigmas.size() != static_cast<std::size_t>(T)) {
        throw ConfigError("ve schedule: expected T sigmas");
      }
      for (std::size_t i = 0; i < sigmas.size(); ++i) {
        if (!(sigmas[i] > 0.0)) throw ConfigError("ve schedule: sigmas must be positive");
        if (i > 0 && !(sigmas[i] < sigmas[i - 1])) {
          throw ConfigError("ve schedule: sigmas must strictly decrease");
        }
      }
      if (langevin_steps_per_level < 0) {
        throw ConfigError("ve schedule: langevin_steps_per_level must be >= 0");
      }
      if (!(langevin_step_scale > 0.0)) {
        throw ConfigError("ve schedule: langevin_step_scale must be positive");
      }
    }
  }

  void CheckTime(int t) const {
    if (t < 1 || t > T) {
      throw ConfigError("noise level t=" + std::to_string(t) + " outside [1, " +
                        std::to_string(T) + "]");
    }
  }

  double beta(int t) const { return betas[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar(int t) const { return alpha_bars[static_cast<std::size_t>(t - 1)]; }
  double sigma(int t) const { return sigmas[static_cast<std::size_t>(T - t)]; }
  double sigma_min() const { return sigmas.back(); }
  double sigma_max() const { return sigmas.front(); }

  bool operator==(const NoiseSchedule&) const = default;
};

// The marginal of the forward process at level t started from `model`:
//   vp: sum w_k N(sqrt(ab) mu_k, ab var_k + (1 - ab))
//   ve: sum w_k N(mu_k, var_k + sigma_t^2)
inline GaussianMixture NoisedMixture(const GaussianMixture& model,
                                     const NoiseSchedule& schedule, int t) {
  schedule.CheckTime(t);
  GaussianMixture g = model;
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    if (schedule.kind == ScheduleKind::kVpDdpm) {
      const double ab = schedule.alpha_bar(t);
      g.means[k] *= std::sqrt(ab);
      g.variances[k] = (g.variances[k] * ab).array() + (1.0 - ab);
    } else {
      const double s = schedule.sigma(t);
      g.variances[k] = g.variances[k].array() + s * s;
    }
  }
  return g;
}

// Gradient of log density, with log-sum-exp responsibilities.
inline Eigen::VectorXd MixtureScore(const GaussianMixture& g, const Eigen::VectorXd& x) {
  const Eigen::VectorXd l = g.WeightedComponentLogDensities(x);
  const double m = l.maxCoeff();
  const Eigen::ArrayXd e = (l.array() - m).exp();
  const double total = e.sum();
  Eigen::VectorXd score = Eigen::VectorXd::Zero(x.size());
  for (int k = 0; k < g.component_count(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    score -= (e(k) / total) *
             ((x - g.means[kk]).array() / g.variances[kk].array()).matrix();
  }
  return score;
}

inline Eigen::VectorXd Score(const GaussianMixture& model, const Eigen::VectorXd& x,
                             const NoiseSchedule& schedule, int t) {
  return MixtureScore(NoisedMixture(model, schedule, t), x);
}

// Precomputes the noised mixtures of one model so that individual samples
// can be drawn from independent streams.
class ReverseSampler {
 public:
  ReverseSampler(const GaussianMixture& model, const NoiseSchedule& schedule)
      : schedule_(schedule), dimension_(model.dimension()) {
    model.Validate();
    schedule.Validate();
    // levels_[l] belongs to sampling step l, noisiest first.
    for (int t = schedule.T; t >= 1; --t) levels_.push_back(NoisedMixture(model, schedule, t));
  }

  ScheduleKind kind() const { return schedule_.kind; }
  int dimension() const { return dimension_; }

  Eigen::VectorXd Draw(std::uint64_t stream_seed) const {
    Rng rng(stream_seed);
    return schedule_.kind == ScheduleKind::kVeNcsn ? Langevin(rng) : Ancestral(rng);
  }

 private:
  // Annealed Langevin: x <- x + (a/2) score + sqrt(a) z, a = eps (sigma/sigma_min)^2.
  Eigen::VectorXd Langevin(Rng& rng) const {
    Eigen::VectorXd x(dimension_);
    for (int j = 0; j < dimension_; ++j) x(j) = schedule_.sigma_max() * StandardNormal(rng);
    const double sigma_min = schedule_.sigma_min();
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      const double ratio = schedule_.sigmas[l] / sigma_min;
      const double a = schedule_.langevin_step_scale * ratio * ratio;
      const double noise_scale = std::sqrt(a);
      for (int step = 0; step < schedule_.langevin_steps_per_level; ++step) {
        const Eigen::VectorXd s = MixtureScore(levels_[l], x);
        for (int j = 0; j < dimension_; ++j) {
          x(j) += 0.5 * a * s(j) + noise_scale * StandardNormal(rng);
        }
      }
    }
    return x;
  }

  // DDPM ancestral: x <- (x + beta score) / sqrt(1 - beta) + sqrt(beta) z,
  // with no noise on the final step.
  Eigen::VectorXd Ancestral(Rng& rng) const {
    Eigen::VectorXd x(dimension_);
    for (int j = 0; j < dimension_; ++j) x(j) = StandardNormal(rng);
    for (int t = schedule_.T; t >= 1; --t) {
      const double beta = schedule_.beta(t);
      const Eigen::VectorXd s =
          MixtureScore(levels_[static_cast<std::size_t>(schedule_.T - t)], x);
      const double inv = 1.0 / std::sqrt(1.0 - beta);
      const double noise_scale = std::sqrt(beta);
      for (int j = 0; j < dimension_; ++j) {
        x(j) = inv * (x(j) + beta * s(j));
        if (t > 1) x(j) += noise_scale * StandardNormal(rng);
      }
    }
    return x;
  }

  NoiseSchedule schedule_;
  int dimension_;
  std::vector<GaussianMixture> levels_;
};

namespace detail {

inline Eigen::MatrixXd DrawRows(const GaussianMixture& model, const NoiseSchedule& schedule,
                                ScheduleKind want, const char* name, std::size_t n,
                                std::uint64_t seed) {
  if (schedule.kind != want) {
    throw SamplingError(std::string(name) + " needs a " + ScheduleKindName(want) +
                        " schedule, got " + ScheduleKindName(schedule.kind));
  }
  const ReverseSampler sampler(model, schedule);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), model.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = sampler.Draw(DeriveSeed(seed, i)).transpose();
  }
  return out;
}

}  // namespace detail

// Row i is drawn from stream DeriveSeed(seed, i).
inline Eigen::MatrixXd SampleNcsnLangevin(const GaussianMixture& model,
                                          const NoiseSchedule& schedule, std::size_t n,
                                          std::uint64_t seed) {
  return detail::DrawRows(model, schedule, ScheduleKind::kVeNcsn, "sample_ncsn_langevin", n,
                          seed);
}

inline Eigen::MatrixXd SampleDdpmAncestral(const GaussianMixture& model,
                                           const NoiseSchedule& schedule, std::size_t n,
                                           std::uint64_t seed) {
  return detail::DrawRows(model, schedule, ScheduleKind::kVpDdpm, "sample_ddpm_ancestral", n,
                          seed);
}

}  // namespace sharebench

#endif  // SHAREBENCH_DIFFUSION_HPP_
