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

#include "natsel/natgrad.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace natsel {
void StepConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning rate must be positive and finite");
  if (mc_samples < 2) throw InvalidArgument("need at least 2 Monte Carlo samples");
  if (!(pinv_threshold > 0.0 && pinv_threshold < 1.0))
    throw InvalidArgument("pinv threshold must lie in (0, 1)");
  if (!(divergence_bound > 0.0)) throw InvalidArgument("divergence bound must be positive");
}

ConfigSnapshot StepConfig::snapshot() const {
  return {
      {"learning_rate", format_double(learning_rate)},
      {"mc_samples", std::to_string(mc_samples)},
      {"fisher", fisher_mode == FisherMode::kAnalytic ? "analytic" : "empirical"},
      {"pinv_threshold", format_double(pinv_threshold)},
      {"baseline", baseline ? "on" : "off"},
      {"divergence_bound", format_double(divergence_bound)},
  };
}

GradientEstimate mc_loss_gradient(const DistributionFamily& family, const ParamVector& theta,
                                  const LossOracle& loss, std::size_t samples, Rng& rng,
                                  bool baseline) {
  family.check_params(theta);
  if (samples < 2) throw InvalidArgument("need at least 2 Monte Carlo samples");
  const std::vector<Hypothesis> hs = family.sample(theta, rng, samples);
  GradientEstimate out;
  out.losses = kernels::parallel::evaluate_losses(loss, hs);
  double b = 0.0;
  if (baseline) {
    for (double v : out.losses) b += v;
    b /= static_cast<double>(samples);
  }
  std::vector<double> weights(samples);
  for (std::size_t k = 0; k < samples; ++k) weights[k] = out.losses[k] - b;
  // Centring on the sample mean shrinks the expectation by (N - 1) / N;
  // dividing by N - 1 instead of N removes that bias.
  const double denom = static_cast<double>(baseline ? samples - 1 : samples);
  out.gradient = kernels::parallel::weighted_score_sum(family, theta, hs, weights) / denom;
  return out;
}

ParamVector exact_loss_gradient(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                const Eigen::VectorXd& losses, bool baseline) {
  if (static_cast<std::size_t>(losses.size()) != family.support_size())
    throw InvalidArgument("loss vector does not match the support size");
  const Eigen::VectorXd rho = family.probabilities(theta);
  const double b = baseline ? rho.dot(losses) : 0.0;
  const Eigen::MatrixXd scores = family.score_table(theta);
  const Eigen::VectorXd w = rho.array() * (losses.array() - b);
  return scores.transpose() * w;
}

FisherMatrix empirical_fisher_unchecked(const DistributionFamily& family,
                                        const ParamVector& theta, std::size_t samples, Rng& rng) {
  const std::vector<Hypothesis> hs = family.sample(theta, rng, samples);
  FisherMatrix f = kernels::parallel::score_outer_sum(family, theta, hs) /
                   static_cast<double>(samples);
  return 0.5 * (f + f.transpose());
}

FisherMatrix empirical_fisher(const DistributionFamily& family, const ParamVector& theta,
                              std::size_t samples, Rng& rng) {
  family.check_params(theta);
  if (samples < family.param_dim() + 1)
    throw InvalidArgument("empirical Fisher needs at least n + 1 samples");
  return empirical_fisher_unchecked(family, theta, samples, rng);
}

FisherMatrix exact_fisher(const TabularSoftmaxFamily& family, const ParamVector& theta) {
  const Eigen::VectorXd rho = family.probabilities(theta);
  const Eigen::MatrixXd scores = family.score_table(theta);
  FisherMatrix f = scores.transpose() * rho.asDiagonal() * scores;
  return 0.5 * (f + f.transpose());
}

void validate_fisher(const FisherMatrix& fisher) {
  if (fisher.rows() != fisher.cols() || fisher.rows() == 0)
    throw InvalidArgument("Fisher matrix must be square and non-empty");
  if (!all_finite(fisher)) throw InvalidArgument("Fisher matrix has non-finite entries");
  const double scale = fisher.cwiseAbs().maxCoeff();
  const double asym = (fisher - fisher.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) throw InvalidArgument("Fisher matrix is not symmetric");
}

namespace {

struct Spectrum {
  Eigen::VectorXd inverse_values;  // 1/lambda on the kept subspace, 0 elsewhere
  Eigen::MatrixXd vectors;
};

Spectrum pseudo_spectrum(const FisherMatrix& fisher, double pinv_threshold) {
  validate_fisher(fisher);
  if (!(pinv_threshold > 0.0 && pinv_threshold < 1.0))
    throw InvalidArgument("pinv threshold must lie in (0, 1)");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
  if (eig.info() != Eigen::Success) throw EvaluationError("eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  Spectrum out{Eigen::VectorXd::Zero(values.size()), eig.eigenvectors()};
  if (top <= 0.0) return out;
  const double cutoff = pinv_threshold * top;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > cutoff) out.inverse_values(i) = 1.0 / values(i);
  }
  return out;
}

}  // namespace

ParamVector solve_conjugate_flow(const FisherMatrix& fisher, const ParamVector& gradient,
                                 double pinv_threshold) {
  if (gradient.size() != fisher.rows())
    throw InvalidArgument("gradient length does not match the Fisher matrix");
  const Spectrum s = pseudo_spectrum(fisher, pinv_threshold);
  const Eigen::VectorXd coeffs = s.vectors.transpose() * gradient;
  return -(s.vectors * s.inverse_values.cwiseProduct(coeffs));
}

Eigen::MatrixXd range_projector(const FisherMatrix& fisher, double pinv_threshold) {
  const Spectrum s = pseudo_spectrum(fisher, pinv_threshold);
  const Eigen::VectorXd kept = (s.inverse_values.array() > 0.0).cast<double>();
  return s.vectors * kept.asDiagonal() * s.vectors.transpose();
}

ParamVector euler_step(const ParamVector& theta, const ParamVector& thetadot,
                       double learning_rate) {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (theta.size() != thetadot.size()) throw InvalidArgument("theta and thetadot differ in length");
  if (!all_finite(thetadot)) throw EvaluationError("parameter velocity is non-finite");
  return theta + learning_rate * thetadot;
}

GradientSource monte_carlo_source(const DistributionFamily& family, const LossOracle& loss,
                                  const StepConfig& config) {
  return [&family, loss, samples = config.mc_samples, baseline = config.baseline](
             const ParamVector& theta, Rng& rng) {
    return mc_loss_gradient(family, theta, loss, samples, rng, baseline);
  };
}

StepResult natural_gradient_step(const DistributionFamily& family, const ParamVector& theta,
                                 const GradientSource& source, const StepConfig& config,
                                 Rng& rng) {
  StepResult r;
  r.estimate = source(theta, rng);
  if (!all_finite(r.estimate.gradient)) throw EvaluationError("loss gradient is non-finite");
  r.fisher = config.fisher_mode == FisherMode::kAnalytic
                 ? family.analytic_fisher(theta)
                 : empirical_fisher(family, theta, config.mc_samples, rng);
  r.thetadot = solve_conjugate_flow(r.fisher, r.estimate.gradient, config.pinv_threshold);
  r.next_theta = euler_step(theta, r.thetadot, config.learning_rate);
  if (r.next_theta.cwiseAbs().maxCoeff() > config.divergence_bound) {
    std::ostringstream os;
    os << "parameters exceeded divergence bound " << config.divergence_bound
       << " (max |theta| = " << r.next_theta.cwiseAbs().maxCoeff() << ")";
    throw DivergenceError(os.str());
  }
  return r;
}

StepResult fr_ngd_step(const DistributionFamily& family, const ParamVector& theta,
                       const LossOracle& loss, const StepConfig& config, Rng& rng) {
  return natural_gradient_step(family, theta, monte_carlo_source(family, loss, config), config,
                               rng);
}

Trajectory run_natural_gradient(const DistributionFamily& family, const ParamVector& theta0,
                                const GradientSource& source, const StepConfig& config,
                                std::size_t steps, Rng& rng, ConfigSnapshot extra_config) {
  config.validate();
  family.check_params(theta0);
  if (steps < 1) throw InvalidArgument("need at least one step");

  ConfigSnapshot snapshot = config.snapshot();
  snapshot.emplace_back("family", std::string(to_string(family.kind())));
  snapshot.emplace_back("steps", std::to_string(steps));
  for (auto& kv : extra_config) snapshot.push_back(std::move(kv));
  Trajectory traj(rng.seed(), std::move(snapshot));

  ParamVector theta = theta0;
  for (std::size_t k = 0; k < steps; ++k) {
    StepResult r;
    try {
      r = natural_gradient_step(family, theta, source, config, rng);
    } catch (const EvaluationError& e) {
      traj.set_abort_reason("step " + std::to_string(k) + ": " + e.what());
      break;
    }
    StepRecord rec;
    rec.step = k;
    rec.time = static_cast<double>(k) * config.learning_rate;
    rec.theta = theta;
    rec.losses = LossStatistics::of(r.estimate.losses);
    rec.thetadot_norm = r.thetadot.norm();
    traj.append(std::move(rec));
    theta = std::move(r.next_theta);
  }
  traj.set_final_theta(theta);
  return traj;
}

Trajectory run_fr_ngd(const DistributionFamily& family, const ParamVector& theta0,
                      const LossOracle& loss, const StepConfig& config, std::size_t steps,
                      Rng& rng, ConfigSnapshot extra_config) {
  extra_config.emplace_back("loss", loss.name);
  return run_natural_gradient(family, theta0, monte_carlo_source(family, loss, config), config,
                              steps, rng, std::move(extra_config));
}

LossStatistics sample_loss_statistics(const DistributionFamily& family, const ParamVector& theta,
                                      const LossOracle& loss, std::size_t samples, Rng& rng) {
  const std::vector<Hypothesis> hs = family.sample(theta, rng, samples);
  const std::vector<double> losses = kernels::parallel::evaluate_losses(loss, hs);
  return LossStatistics::of(losses);
}

}  // namespace natsel
