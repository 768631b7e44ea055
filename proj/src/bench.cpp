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

#include "natsel/bench.hpp"

#include <cmath>

namespace natsel {

double rastrigin(const Eigen::Vector2d& h) {
  return 20.0 + h.squaredNorm() - 10.0 * std::cos(2.0 * kPi * h(0)) -
         10.0 * std::cos(2.0 * kPi * h(1));
}

double quadratic(const Eigen::VectorXd& h) { return h.squaredNorm(); }

LossOracle rastrigin_loss() {
  LossOracle oracle;
  oracle.evaluate = [](const Hypothesis& h) {
    const auto& p = h.point();
    if (p.size() != 2) throw InvalidArgument("rastrigin expects a 2-vector");
    return rastrigin(Eigen::Vector2d(p(0), p(1)));
  };
  oracle.concurrency_safe = true;
  oracle.name = "rastrigin";
  return oracle;
}

LossOracle quadratic_loss() {
  LossOracle oracle;
  oracle.evaluate = [](const Hypothesis& h) { return quadratic(h.point()); };
  oracle.concurrency_safe = true;
  oracle.name = "quadratic";
  return oracle;
}

// Under N(mu, Sigma): E[x_i^2] = mu_i^2 + Sigma_ii and
// E[cos(2 pi x_i)] = cos(2 pi mu_i) exp(-2 pi^2 Sigma_ii).
double rastrigin_expected_loss(const ParamVector& theta) {
  const Eigen::Vector2d mu = Gaussian2DFamily::mean(theta);
  const Eigen::Matrix2d cov = Gaussian2DFamily::covariance(theta);
  double total = 20.0 + mu.squaredNorm() + cov.trace();
  for (int i = 0; i < 2; ++i) {
    total -= 10.0 * std::cos(2.0 * kPi * mu(i)) * std::exp(-2.0 * kPi * kPi * cov(i, i));
  }
  return total;
}

ParamVector rastrigin_expected_gradient(const ParamVector& theta) {
  const Eigen::Vector2d mu = Gaussian2DFamily::mean(theta);
  const Eigen::Matrix2d cov = Gaussian2DFamily::covariance(theta);
  ParamVector g(5);
  double d_var[2];
  for (int i = 0; i < 2; ++i) {
    const double damp = std::exp(-2.0 * kPi * kPi * cov(i, i));
    g(i) = 2.0 * mu(i) + 20.0 * kPi * std::sin(2.0 * kPi * mu(i)) * damp;
    d_var[i] = 1.0 + 20.0 * kPi * kPi * std::cos(2.0 * kPi * mu(i)) * damp;
  }
  // Sigma_11 = e^{2 theta_2}, Sigma_22 = theta_3^2 + e^{2 theta_4}.
  g(2) = d_var[0] * 2.0 * std::exp(2.0 * theta(2));
  g(3) = d_var[1] * 2.0 * theta(3);
  g(4) = d_var[1] * 2.0 * std::exp(2.0 * theta(4));
  return g;
}

double quadratic_expected_loss(const ParamVector& theta) {
  return Gaussian2DFamily::mean(theta).squaredNorm() + Gaussian2DFamily::covariance(theta).trace();
}

ParamVector quadratic_expected_gradient(const ParamVector& theta) {
  ParamVector g(5);
  g(0) = 2.0 * theta(0);
  g(1) = 2.0 * theta(1);
  g(2) = 2.0 * std::exp(2.0 * theta(2));
  g(3) = 2.0 * theta(3);
  g(4) = 2.0 * std::exp(2.0 * theta(4));
  return g;
}

GradientSource exact_gradient_source(std::string_view problem) {
  ParamVector (*grad)(const ParamVector&) = nullptr;
  if (problem == "rastrigin") {
    grad = &rastrigin_expected_gradient;
  } else if (problem == "quadratic") {
    grad = &quadratic_expected_gradient;
  } else {
    throw InvalidArgument("no exact gradient for problem '" + std::string(problem) + "'");
  }
  return [grad](const ParamVector& theta, Rng&) { return GradientEstimate{grad(theta), {}}; };
}

std::vector<std::string> problem_names() { return {"rastrigin", "quadratic"}; }

Problem make_problem(std::string_view name) {
  const ParamVector start = Gaussian2DFamily::params(Eigen::Vector2d(-1.5, -1.5),
                                                     Eigen::Matrix2d::Identity());
  if (name == "rastrigin") return {"rastrigin", rastrigin_loss(), start};
  if (name == "quadratic") return {"quadratic", quadratic_loss(), start};
  throw InvalidArgument("unknown problem '" + std::string(name) + "'");
}

Trajectory optimize_experiment(std::uint64_t seed, const OptimizeOptions& options) {
  const Problem problem = make_problem(options.problem);
  const Gaussian2DFamily family;
  Rng rng(seed);
  return run_fr_ngd(family, problem.initial, problem.loss, options.step, options.steps, rng,
                    {{"problem", problem.name}, {"seed", std::to_string(seed)}});
}

Trajectory rastrigin_experiment(std::uint64_t seed, const OptimizeOptions& options) {
  OptimizeOptions o = options;
  o.problem = "rastrigin";
  return optimize_experiment(seed, o);
}

SigmaSchedule wiener_schedule(const WienerOptions& options) {
  if (options.constant_schedule) return SigmaSchedule::constant(options.sigma_before);
  if (!(options.switch_fraction > 0.0 && options.switch_fraction < 1.0))
    throw InvalidArgument("switch fraction must lie in (0, 1)");
  return SigmaSchedule::piecewise({options.switch_fraction * options.horizon},
                                  {options.sigma_before, options.sigma_after});
}

namespace {

enum Stream : std::uint64_t { kTimes = 1, kIncrements = 2, kInference = 3 };

}  // namespace

std::vector<Observation> wiener_observations(std::uint64_t seed, const WienerOptions& options) {
  if (options.expected_observations < 1) throw InvalidArgument("need at least one observation");
  const Rng root(seed);
  Rng times_rng = root.split(kTimes);
  Rng increments_rng = root.split(kIncrements);
  WienerConfig config;
  config.schedule = wiener_schedule(options);
  config.horizon = options.horizon;
  config.observation_times = exponential_observation_times(
      options.horizon, options.horizon / static_cast<double>(options.expected_observations),
      times_rng);
  return simulate_wiener(config, increments_rng);
}

ConfigSnapshot wiener_snapshot(std::uint64_t seed, const WienerOptions& options) {
  const auto num = format_double;
  return {{"seed", std::to_string(seed)},
          {"horizon", num(options.horizon)},
          {"expected_observations", std::to_string(options.expected_observations)},
          {"sigma_before", num(options.sigma_before)},
          {"sigma_after", num(options.constant_schedule ? options.sigma_before : options.sigma_after)},
          {"switch_time", num(options.switch_fraction * options.horizon)}};
}

Trajectory wiener_experiment(std::uint64_t seed, const WienerOptions& options) {
  const std::vector<Observation> obs = wiener_observations(seed, options);
  const SigmaSchedule schedule = wiener_schedule(options);
  Rng rng = Rng(seed).split(kInference);
  return run_inference(options.inference, obs, rng, &schedule, wiener_snapshot(seed, options));
}

}  // namespace natsel
