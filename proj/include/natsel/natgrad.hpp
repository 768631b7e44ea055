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

// Fisher-Rao natural gradient descent (FR-NGD).
//
// One step of the engine:
//   1. estimate d/dtheta of the expected loss with the score-function
//      estimator (1/N) sum_k (L(h_k) - b) s(theta; h_k),
//   2. obtain the Fisher, analytically or as the empirical second moment of
//      the score,
//   3. solve the conjugate flow F thetadot = -grad with the Moore-Penrose
//      pseudo-inverse (minimum-norm solution),
//   4. take an Euler step theta + eta * thetadot.

#ifndef NATSEL_NATGRAD_HPP_
#define NATSEL_NATGRAD_HPP_

#include <cstddef>
#include <functional>
#include <vector>

#include "natsel/core.hpp"
#include "natsel/families.hpp"
#include "natsel/kernels.hpp"
#include "natsel/trajectory.hpp"

namespace natsel {

enum class FisherMode { kAnalytic, kEmpirical };

struct StepConfig {
  double learning_rate = 1e-3;
  std::size_t mc_samples = 40;
  FisherMode fisher_mode = FisherMode::kAnalytic;
  /// Eigenvalues at or below pinv_threshold * lambda_max are treated as zero.
  double pinv_threshold = 1e-10;
  bool baseline = true;
  /// Runs abort once any |theta_i| exceeds this bound.
  double divergence_bound = 1e6;

  /// Throws InvalidArgument when a field violates its precondition.
  void validate() const;
  ConfigSnapshot snapshot() const;
};

struct GradientEstimate {
  ParamVector gradient;
  /// Losses of the sampled hypotheses, in sample order. Empty for exact
  /// gradients.
  std::vector<double> losses;
};

/// Score-function estimate of the expected-loss gradient,
/// (1/N) sum_k L_k s_k. With `baseline` the sample mean loss is subtracted
/// and the sum divided by N - 1, which keeps the estimate unbiased.
GradientEstimate mc_loss_gradient(const DistributionFamily& family, const ParamVector& theta,
                                  const LossOracle& loss, std::size_t samples, Rng& rng,
                                  bool baseline);

/// sum_h rho(h) (L(h) - b) s(theta; h) over the full support.
ParamVector exact_loss_gradient(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                const Eigen::VectorXd& losses, bool baseline = false);

/// (1/N) sum_k s_k s_k^T. N >= n + 1.
FisherMatrix empirical_fisher(const DistributionFamily& family, const ParamVector& theta,
                              std::size_t samples, Rng& rng);

/// Same estimator without the sample-size floor, for rank experiments.
FisherMatrix empirical_fisher_unchecked(const DistributionFamily& family,
                                        const ParamVector& theta, std::size_t samples, Rng& rng);

/// sum_h rho(h) s_h s_h^T over the full support.
FisherMatrix exact_fisher(const TabularSoftmaxFamily& family, const ParamVector& theta);

/// Throws InvalidArgument unless F is square, finite and symmetric to
/// 1e-10 * max|F|.
void validate_fisher(const FisherMatrix& fisher);

/// Minimum-norm solution thetadot = -F^+ gradient of F thetadot = -gradient.
ParamVector solve_conjugate_flow(const FisherMatrix& fisher, const ParamVector& gradient,
                                 double pinv_threshold = 1e-10);

/// Orthogonal projector onto range(F), with the same cutoff as
/// solve_conjugate_flow.
Eigen::MatrixXd range_projector(const FisherMatrix& fisher, double pinv_threshold = 1e-10);

ParamVector euler_step(const ParamVector& theta, const ParamVector& thetadot,
                       double learning_rate);

/// Produces a gradient estimate at theta, drawing randomness from rng.
using GradientSource = std::function<GradientEstimate(const ParamVector&, Rng&)>;

GradientSource monte_carlo_source(const DistributionFamily& family, const LossOracle& loss,
                                  const StepConfig& config);

struct StepResult {
  GradientEstimate estimate;
  FisherMatrix fisher;
  ParamVector thetadot;
  ParamVector next_theta;
};

/// One FR-NGD update from an arbitrary gradient source.
StepResult natural_gradient_step(const DistributionFamily& family, const ParamVector& theta,
                                 const GradientSource& source, const StepConfig& config,
                                 Rng& rng);

/// One FR-NGD update with the Monte Carlo gradient of `loss`.
StepResult fr_ngd_step(const DistributionFamily& family, const ParamVector& theta,
                       const LossOracle& loss, const StepConfig& config, Rng& rng);

/// `steps` updates; record k holds theta_k and the losses sampled at it.
/// Evaluation failures and divergence stop the run early and are reported
/// through Trajectory::abort_reason().
Trajectory run_natural_gradient(const DistributionFamily& family, const ParamVector& theta0,
                                const GradientSource& source, const StepConfig& config,
                                std::size_t steps, Rng& rng, ConfigSnapshot extra_config = {});

Trajectory run_fr_ngd(const DistributionFamily& family, const ParamVector& theta0,
                      const LossOracle& loss, const StepConfig& config, std::size_t steps,
                      Rng& rng, ConfigSnapshot extra_config = {});

/// Loss statistics of `samples` fresh draws at theta.
LossStatistics sample_loss_statistics(const DistributionFamily& family, const ParamVector& theta,
                                      const LossOracle& loss, std::size_t samples, Rng& rng);

}  // namespace natsel

#endif  // NATSEL_NATGRAD_HPP_
