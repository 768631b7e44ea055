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

#include "natsel/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "natsel/quadrature.hpp"

namespace natsel {

// ---------------------------------------------------------------------------
// Volatility schedules

SigmaSchedule SigmaSchedule::piecewise(std::vector<double> breaks, std::vector<double> values) {
  if (values.size() != breaks.size() + 1)
    throw InvalidArgument("piecewise schedule needs one more value than breakpoints");
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    if (!(breaks[i] > breaks[i - 1])) throw InvalidArgument("breakpoints must increase strictly");
  }
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("sigma must be positive and finite");
  }
  SigmaSchedule s;
  s.breaks_ = std::move(breaks);
  s.values_ = std::move(values);
  return s;
}

SigmaSchedule SigmaSchedule::smooth(std::function<double(double)> sigma) {
  if (!sigma) throw InvalidArgument("empty sigma function");
  SigmaSchedule s;
  s.smooth_ = std::move(sigma);
  return s;
}

double SigmaSchedule::sigma(double t) const {
  if (smooth_) {
    const double v = smooth_(t);
    if (!(v > 0.0)) throw InvalidArgument("sigma schedule returned a non-positive value");
    return v;
  }
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

double SigmaSchedule::integrated_variance(double t0, double t1) const {
  if (!(t1 >= t0)) throw InvalidArgument("integration interval is reversed");
  if (smooth_) {
    constexpr int kPanels = 256;
    const double h = (t1 - t0) / kPanels;
    auto f = [this](double t) { const double s = sigma(t); return s * s; };
    double total = f(t0) + f(t1);
    for (int i = 1; i < kPanels; ++i) total += (i % 2 ? 4.0 : 2.0) * f(t0 + i * h);
    return total * h / 3.0;
  }
  double total = 0.0;
  double left = t0;
  for (std::size_t i = 0; i <= breaks_.size() && left < t1; ++i) {
    const double right = i < breaks_.size() ? std::min(t1, breaks_[i]) : t1;
    if (right > left) {
      total += values_[i] * values_[i] * (right - left);
      left = right;
    }
  }
  return total;
}

void WienerConfig::validate() const {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  double prev = 0.0;
  for (double t : observation_times) {
    if (!(t > prev) || t > horizon)
      throw InvalidArgument("observation times must increase strictly within (0, horizon]");
    prev = t;
  }
}

std::vector<double> exponential_observation_times(double horizon, double mean_gap, Rng& rng) {
  if (!(horizon > 0.0) || !(mean_gap > 0.0))
    throw InvalidArgument("horizon and mean gap must be positive");
  std::vector<double> times;
  double t = 0.0;
  while (true) {
    t += rng.exponential(mean_gap);
    if (t > horizon) break;
    if (!times.empty() && !(t > times.back())) continue;
    times.push_back(t);
  }
  return times;
}

std::vector<Observation> simulate_wiener(const WienerConfig& config, Rng& rng) {
  config.validate();
  std::vector<Observation> out;
  out.reserve(config.observation_times.size());
  double prev = 0.0;
  for (double t : config.observation_times) {
    Observation o;
    o.t = t;
    o.dt = t - prev;
    o.dw = std::sqrt(config.schedule.integrated_variance(prev, t)) * rng.normal();
    o.x = o.dw / std::sqrt(o.dt);
    out.push_back(o);
    prev = t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses

double PredictiveModel::log_density(double x) const {
  return -surprisal(*this, x);
}

double surprisal(const PredictiveModel& model, double x) {
  const double h = model.log_scale;
  return h + kHalfLogTwoPi + 0.5 * x * x * std::exp(-2.0 * h);
}

double gaussian_kl(double sigma_true, double log_scale) {
  if (!(sigma_true > 0.0)) throw InvalidArgument("sigma must be positive");
  return (log_scale - std::log(sigma_true)) +
         0.5 * sigma_true * sigma_true * std::exp(-2.0 * log_scale) - 0.5;
}

LossOracle surprisal_loss(double x) {
  LossOracle oracle;
  oracle.evaluate = [x](const Hypothesis& h) { return surprisal(h.value(), x); };
  oracle.concurrency_safe = true;
  oracle.name = "surprisal";
  return oracle;
}

GradientEstimate kl_mc_gradient(const DistributionFamily& family, const ParamVector& theta,
                                double x, std::size_t samples, Rng& rng, bool baseline) {
  return mc_loss_gradient(family, theta, surprisal_loss(x), samples, rng, baseline);
}

namespace {

struct QuadratureGradients {
  ParamVector cross_entropy;
  ParamVector expected_kl;
  double cross_entropy_value = 0.0;
  double expected_kl_value = 0.0;
};

QuadratureGradients quadrature_gradients(const GaussianScalarFamily& family,
                                         const ParamVector& theta, double sigma_true,
                                         std::size_t nodes) {
  const NormalQuadrature rule(nodes);
  const double mean = theta(0);
  const double sd = std::exp(theta(1));
  QuadratureGradients q{ParamVector::Zero(2), ParamVector::Zero(2)};
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double h = mean + sd * rule.nodes(i);
    const ParamVector s = family.score(theta, Hypothesis::scalar(h));
    // Average surprisal of H = h over x ~ N(0, sigma^2).
    const double cross = rule.expect(0.0, sigma_true, [h](double x) { return surprisal(h, x); });
    const double kl = gaussian_kl(sigma_true, h);
    q.cross_entropy += rule.weights(i) * cross * s;
    q.expected_kl += rule.weights(i) * kl * s;
    q.cross_entropy_value += rule.weights(i) * cross;
    q.expected_kl_value += rule.weights(i) * kl;
  }
  return q;
}

}  // namespace

GradientEquivalenceReport verify_gradient_equivalence(const GaussianScalarFamily& family,
                                                      const ParamVector& theta, double sigma_true,
                                                      std::size_t nodes) {
  family.check_params(theta);
  if (!(sigma_true > 0.0)) throw InvalidArgument("sigma must be positive");
  if (nodes < 2) throw InvalidArgument("need at least 2 quadrature nodes");
  const QuadratureGradients q = quadrature_gradients(family, theta, sigma_true, nodes);
  const QuadratureGradients refined = quadrature_gradients(family, theta, sigma_true, nodes + 16);

  GradientEquivalenceReport r;
  r.cross_entropy_gradient = q.cross_entropy;
  r.expected_kl_gradient = q.expected_kl;
  r.max_gradient_difference = (q.cross_entropy - q.expected_kl).cwiseAbs().maxCoeff();
  r.objective_difference = q.cross_entropy_value - q.expected_kl_value;
  r.entropy = 0.5 * std::log(2.0 * kPi * std::exp(1.0) * sigma_true * sigma_true);
  const double drift = std::max((q.cross_entropy - refined.cross_entropy).cwiseAbs().maxCoeff(),
                                (q.expected_kl - refined.expected_kl).cwiseAbs().maxCoeff());
  r.converged = drift <= 1e-8 * (1.0 + q.expected_kl.cwiseAbs().maxCoeff());
  return r;
}

// ---------------------------------------------------------------------------
// Online inference

void InferenceConfig::validate() const {
  if (initial.size() != 2 || !all_finite(initial))
    throw InvalidArgument("initial parameters must be a finite (mean, log std) pair");
  step_config().validate();
  if (inner_steps < 1) throw InvalidArgument("need at least one step per observation");
}

StepConfig InferenceConfig::step_config() const {
  StepConfig c;
  c.learning_rate = learning_rate;
  c.mc_samples = mc_samples;
  c.fisher_mode = FisherMode::kAnalytic;
  c.pinv_threshold = pinv_threshold;
  c.baseline = baseline;
  c.divergence_bound = divergence_bound;
  return c;
}

ConfigSnapshot InferenceConfig::snapshot() const {
  ConfigSnapshot s = step_config().snapshot();
  s.emplace_back("family", "gaussian-scalar");
  s.emplace_back("initial_mean", format_double(initial(0)));
  s.emplace_back("initial_log_std", format_double(initial(1)));
  s.emplace_back("inner_steps", std::to_string(inner_steps));
  return s;
}

Trajectory run_inference(const InferenceConfig& config, const std::vector<Observation>& observations,
                         Rng& rng, const SigmaSchedule* truth, ConfigSnapshot extra_config) {
  config.validate();
  for (std::size_t k = 1; k < observations.size(); ++k) {
    if (!(observations[k].t > observations[k - 1].t))
      throw InvalidArgument("observations must be time-ordered");
  }
  const GaussianScalarFamily family;
  const StepConfig step = config.step_config();
  ConfigSnapshot snapshot = config.snapshot();
  snapshot.insert(snapshot.end(), extra_config.begin(), extra_config.end());
  Trajectory traj(rng.seed(), std::move(snapshot), {"post_mean", "post_std", "true_log_sigma"});

  ParamVector theta = config.initial;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const LossOracle loss = surprisal_loss(observations[k].x);
    std::vector<double> losses;
    double thetadot_norm = 0.0;
    try {
      for (std::size_t i = 0; i < config.inner_steps; ++i) {
        StepResult r = fr_ngd_step(family, theta, loss, step, rng);
        losses.insert(losses.end(), r.estimate.losses.begin(), r.estimate.losses.end());
        thetadot_norm = r.thetadot.norm();
        theta = std::move(r.next_theta);
      }
    } catch (const EvaluationError& e) {
      traj.set_abort_reason("observation " + std::to_string(k) + ": " + e.what());
      break;
    }
    StepRecord rec;
    rec.step = k;
    rec.time = observations[k].t;
    rec.theta = theta;
    rec.losses = LossStatistics::of(losses);
    rec.thetadot_norm = thetadot_norm;
    const double true_log_sigma = truth ? std::log(truth->sigma(observations[k].t))
                                        : std::numeric_limits<double>::quiet_NaN();
    rec.extras = {theta(0), std::exp(theta(1)), true_log_sigma};
    traj.append(std::move(rec));
  }
  traj.set_final_theta(theta);
  return traj;
}

}  // namespace natsel
