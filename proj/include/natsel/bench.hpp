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

// Benchmark losses and the two reference experiments: evolving a bivariate
// Gaussian over the Rastrigin landscape, and tracking the volatility of a
// Wiener process with a switch in sigma.

#ifndef NATSEL_BENCH_HPP_
#define NATSEL_BENCH_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "natsel/bayes.hpp"
#include "natsel/families.hpp"
#include "natsel/natgrad.hpp"
#include "natsel/trajectory.hpp"

namespace natsel {

/// 20 + x^2 + y^2 - 10 cos(2 pi x) - 10 cos(2 pi y).
double rastrigin(const Eigen::Vector2d& h);
double quadratic(const Eigen::VectorXd& h);

LossOracle rastrigin_loss();
LossOracle quadratic_loss();

/// Closed-form expected losses under the Gaussian2DFamily and their
/// gradients with respect to theta.
double rastrigin_expected_loss(const ParamVector& theta);
ParamVector rastrigin_expected_gradient(const ParamVector& theta);
double quadratic_expected_loss(const ParamVector& theta);
ParamVector quadratic_expected_gradient(const ParamVector& theta);

/// Gradient source returning exact gradients (no samples) for a built-in
/// problem under the Gaussian2DFamily.
GradientSource exact_gradient_source(std::string_view problem);

/// Built-in problems: "rastrigin" and "quadratic".
struct Problem {
  std::string name;
  LossOracle loss;
  ParamVector initial;
};

std::vector<std::string> problem_names();
/// Throws InvalidArgument for unknown names.
Problem make_problem(std::string_view name);

struct OptimizeOptions {
  std::string problem = "rastrigin";
  std::size_t steps = 100;
  StepConfig step;  // learning rate 1e-3, 40 samples by default
};

/// FR-NGD over Gaussian2DFamily for `options.problem`, started at mean
/// (-1.5, -1.5) with identity covariance.
Trajectory optimize_experiment(std::uint64_t seed, const OptimizeOptions& options = {});

/// optimize_experiment on the Rastrigin loss; `options.problem` is ignored.
Trajectory rastrigin_experiment(std::uint64_t seed, const OptimizeOptions& options = {});

struct WienerOptions {
  double horizon = 1.0;
  /// Expected number of observations; gaps are exponential with mean
  /// horizon / expected_observations.
  std::size_t expected_observations = 2000;
  double sigma_before = 0.5;
  double sigma_after = 2.0;
  /// Fraction of the horizon at which sigma switches.
  double switch_fraction = 0.5;
  bool constant_schedule = false;
  InferenceConfig inference;
};

SigmaSchedule wiener_schedule(const WienerOptions& options);
/// Observations used by wiener_experiment for the same seed.
std::vector<Observation> wiener_observations(std::uint64_t seed, const WienerOptions& options = {});
/// Seed and schedule settings recorded alongside the inference config.
ConfigSnapshot wiener_snapshot(std::uint64_t seed, const WienerOptions& options);
Trajectory wiener_experiment(std::uint64_t seed, const WienerOptions& options = {});

}  // namespace natsel

#endif  // NATSEL_BENCH_HPP_
