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

// Exact replicator dynamics on a finite support, and the diagnostics that
// compare FR-NGD against them.
//
//   continuous:  rhodot(h) = rho(h) (Lbar - L(h)),  Lbar = sum_h rho(h) L(h)
//   discrete:    rho'(h)   = rho(h) exp(-L(h) dt) / sum_k rho(k) exp(-L(k) dt)
//
// Losses are held constant over each discrete interval.

#ifndef NATSEL_REPLICATOR_HPP_
#define NATSEL_REPLICATOR_HPP_

#include <cstddef>
#include <functional>
#include <span>

#include "natsel/core.hpp"
#include "natsel/families.hpp"

namespace natsel {

struct TabularState {
  Eigen::VectorXd probabilities;
  Eigen::VectorXd losses;

  /// Throws InvalidArgument unless the probabilities are non-negative, sum
  /// to 1 within 1e-12, and match the losses in length.
  void validate() const;
  double mean_loss() const { return probabilities.dot(losses); }
};

/// State with rho = rho(.; theta).
TabularState make_state(const TabularSoftmaxFamily& family, const ParamVector& theta,
                        Eigen::VectorXd losses);

Eigen::VectorXd replicator_rhs(const TabularState& state);

/// Exact solution of the replicator equation over an interval of length dt
/// with constant losses. Losses may be +inf (the hypothesis is removed).
TabularState replicator_exact_step(const TabularState& state, double dt);

/// posterior(h) = prior(h) lik(h) / sum_k prior(k) lik(k).
/// Throws UndefinedPosterior when the total evidence is zero.
Eigen::VectorXd bayes_update(const Eigen::VectorXd& prior, const Eigen::VectorXd& likelihoods);

/// rhodot induced on the support by thetadot: rho(h) s(theta; h) . thetadot.
Eigen::VectorXd induced_rhodot(const TabularSoftmaxFamily& family, const ParamVector& theta,
                               const ParamVector& thetadot);

struct DeviationReport {
  /// 0.5 E_rho[(s . thetadot - (Lbar - L))^2] >= 0.
  double deviation = 0.0;
  /// F thetadot + dLbar/dtheta.
  ParamVector gradient_wrt_thetadot;
  /// Fisher, summed over the support.
  FisherMatrix hessian_wrt_thetadot;
};

/// Natural deviation of the distribution velocity induced by `thetadot` from
/// the replicator velocity. `state.probabilities` must equal rho(.; theta)
/// to within 1e-10.
DeviationReport natural_deviation(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                  const ParamVector& thetadot, const TabularState& state);

/// Exact FR-NGD velocity: support-sum gradient and Fisher, pseudo-inverse solve.
ParamVector exact_fr_ngd_velocity(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                  const TabularState& state, double pinv_threshold = 1e-10);

struct MinimalityReport {
  bool passed = false;
  double deviation_at_optimum = 0.0;
  /// min over directions of E(thetadot* + eps v) - E(thetadot*).
  double smallest_increase = 0.0;
  ParamVector worst_direction;
  double worst_epsilon = 0.0;
  /// |P_range(F) grad E(thetadot*)|.
  double projected_gradient_norm = 0.0;
  ParamVector optimum;
};

/// Checks that the FR-NGD velocity minimises the natural deviation: no
/// sampled perturbation eps * v (unit v, for each eps) lowers it, and the
/// gradient vanishes on range(F) (norm below `gradient_tolerance`).
MinimalityReport verify_cns_minimality(const TabularSoftmaxFamily& family,
                                       const ParamVector& theta, const TabularState& state,
                                       std::size_t perturbations,
                                       std::span<const double> epsilons, Rng& rng,
                                       double gradient_tolerance = 1e-8);

/// Trait u(theta, h) whose population average is tracked by price_residual.
using Trait = std::function<double(const ParamVector&, std::size_t)>;

/// |d/dt E[u] - (-Cov[u, L] + E[udot])| along theta(t) = theta + t thetadot,
/// with both time derivatives taken by central differences of step dt.
double price_residual(const TabularSoftmaxFamily& family, const ParamVector& theta,
                      const ParamVector& thetadot, const TabularState& state, const Trait& trait,
                      double dt);

/// price_residual for u = alpha . s(theta; h).
double price_check(const TabularSoftmaxFamily& family, const ParamVector& theta,
                   const ParamVector& thetadot, const TabularState& state,
                   const ParamVector& alpha, double dt);

}  // namespace natsel

#endif  // NATSEL_REPLICATOR_HPP_
