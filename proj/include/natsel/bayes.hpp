// Copyright 2026 The natsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Online estimation of a time-varying Wiener volatility by FR-NGD.
//
// A hypothesis H = log Sigma predicts X ~ N(0, exp(2H)) for the normalised
// increment X = dW / sqrt(dt). The loss of H on an observation x is its
// surprisal; FR-NGD of the expected surprisal over a Gaussian rho(H; theta)
// is the parametric stand-in for Bayes's rule and never evaluates a prior
// normaliser.

#ifndef NATSEL_BAYES_HPP_
#define NATSEL_BAYES_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "natsel/core.hpp"
#include "natsel/families.hpp"
#include "natsel/kernels.hpp"
#include "natsel/natgrad.hpp"
#include "natsel/trajectory.hpp"

namespace natsel {

/// sigma(t) > 0, either piecewise constant or a smooth function.
class SigmaSchedule {
 public:
  /// values[i] applies on [breaks[i-1], breaks[i]); breaks strictly
  /// increasing, values.size() == breaks.size() + 1.
  static SigmaSchedule piecewise(std::vector<double> breaks, std::vector<double> values);
  static SigmaSchedule constant(double sigma) { return piecewise({}, {sigma}); }
  static SigmaSchedule smooth(std::function<double(double)> sigma);

  double sigma(double t) const;
  /// Integral of sigma(t)^2 over [t0, t1]; exact for piecewise schedules,
  /// composite Simpson (256 panels) for smooth ones.
  double integrated_variance(double t0, double t1) const;

 private:
  SigmaSchedule() = default;
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::function<double(double)> smooth_;
};

struct WienerConfig {
  SigmaSchedule schedule = SigmaSchedule::constant(1.0);
  double horizon = 1.0;
  /// Strictly increasing times in (0, horizon]; W(0) = 0.
  std::vector<double> observation_times;

  void validate() const;
};

struct Observation {
  double t = 0.0;
  double dt = 0.0;
  double dw = 0.0;
  /// dw / sqrt(dt)
  double x = 0.0;
};

/// Times with i.i.d. exponential gaps of the given mean, stopping at horizon.
std::vector<double> exponential_observation_times(double horizon, double mean_gap, Rng& rng);

/// Increments dW ~ N(0, integral of sigma^2 over the gap) between
/// consecutive observation times.
std::vector<Observation> simulate_wiener(const WienerConfig& config, Rng& rng);

/// Zero-mean Gaussian predictive density for X with standard deviation e^H.
struct PredictiveModel {
  double log_scale = 0.0;

  double log_density(double x) const;
};

/// -log N(x; 0, e^{2H}) = H + 0.5 log(2 pi) + x^2 / (2 e^{2H}).
double surprisal(const PredictiveModel& model, double x);
inline double surprisal(double log_scale, double x) { return surprisal(PredictiveModel{log_scale}, x); }

/// KL(N(0, sigma^2) || N(0, e^{2H})) = (H - log sigma) + sigma^2 / (2 e^{2H}) - 1/2.
double gaussian_kl(double sigma_true, double log_scale);

/// Surprisal of observation x as a loss over scalar hypotheses H.
LossOracle surprisal_loss(double x);

/// Monte Carlo gradient of the expected surprisal of x under rho(.; theta).
GradientEstimate kl_mc_gradient(const DistributionFamily& family, const ParamVector& theta,
                                double x, std::size_t samples, Rng& rng, bool baseline = true);

struct GradientEquivalenceReport {
  ParamVector cross_entropy_gradient;
  ParamVector expected_kl_gradient;
  double max_gradient_difference = 0.0;
  /// E_x[Lbar(x)] - E_H[KL], which must equal the entropy of N(0, sigma^2).
  double objective_difference = 0.0;
  double entropy = 0.0;
  bool converged = true;
};

/// Quadrature comparison of the gradients of the expected cross-entropy
/// E_{x~N(0,sigma^2)}[E_H surprisal(H, x)] and of E_H[KL(N(0,sigma^2) || H)].
GradientEquivalenceReport verify_gradient_equivalence(const GaussianScalarFamily& family,
                                                      const ParamVector& theta, double sigma_true,
                                                      std::size_t nodes = 64);

struct InferenceConfig {
  /// (mean, log std) of rho over H = log Sigma.
  ParamVector initial = ParamVector::Zero(2);
  double learning_rate = 1e-2;
  std::size_t mc_samples = 40;
  bool baseline = true;
  double pinv_threshold = 1e-10;
  double divergence_bound = 1e6;
  /// FR-NGD steps per observation.
  std::size_t inner_steps = 1;

  void validate() const;
  StepConfig step_config() const;
  ConfigSnapshot snapshot() const;
};

/// One FR-NGD step (analytic Fisher of the scalar Gaussian) per observation
/// with the surprisal of that observation as loss. Record k holds the
/// parameters after absorbing observation k and the extra columns
/// post_mean, post_std and true_log_sigma (NaN when `truth` is null).
/// `extra_config` is appended to the config snapshot.
Trajectory run_inference(const InferenceConfig& config, const std::vector<Observation>& observations,
                         Rng& rng, const SigmaSchedule* truth = nullptr,
                         ConfigSnapshot extra_config = {});

}  // namespace natsel

#endif  // NATSEL_BAYES_HPP_
