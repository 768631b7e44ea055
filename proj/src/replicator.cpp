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

#include "natsel/replicator.hpp"

#include <cmath>
#include <limits>

#include "natsel/natgrad.hpp"

namespace natsel {

void TabularState::validate() const {
  if (probabilities.size() == 0) throw InvalidArgument("empty tabular state");
  if (probabilities.size() != losses.size())
    throw InvalidArgument("probabilities and losses differ in length");
  if (!all_finite(probabilities) || (probabilities.array() < 0.0).any())
    throw InvalidArgument("probabilities must be finite and non-negative");
  if (std::abs(probabilities.sum() - 1.0) > 1e-12)
    throw InvalidArgument("probabilities do not sum to 1");
  if (losses.array().isNaN().any()) throw InvalidArgument("losses contain NaN");
}

TabularState make_state(const TabularSoftmaxFamily& family, const ParamVector& theta,
                        Eigen::VectorXd losses) {
  TabularState s{family.probabilities(theta), std::move(losses)};
  s.validate();
  return s;
}

Eigen::VectorXd replicator_rhs(const TabularState& state) {
  state.validate();
  const double mean = state.mean_loss();
  return state.probabilities.array() * (mean - state.losses.array());
}

TabularState replicator_exact_step(const TabularState& state, double dt) {
  state.validate();
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  const auto m = state.probabilities.size();
  // Work in log space: log rho(h) - L(h) dt, shifted by its maximum.
  Eigen::VectorXd log_w(m);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index h = 0; h < m; ++h) {
    const double p = state.probabilities(h);
    log_w(h) = (p > 0.0) ? std::log(p) - state.losses(h) * dt
                         : -std::numeric_limits<double>::infinity();
    if (log_w(h) > top) top = log_w(h);
  }
  if (!std::isfinite(top)) throw UndefinedPosterior("every hypothesis has zero weight");
  // Equal losses on the support leave rho unchanged; skip the round trip
  // through log and exp so the result is exact.
  double first = std::numeric_limits<double>::quiet_NaN();
  bool uniform = true;
  for (Eigen::Index h = 0; h < m && uniform; ++h) {
    if (!(state.probabilities(h) > 0.0)) continue;
    if (std::isnan(first)) first = state.losses(h);
    uniform = state.losses(h) == first;
  }
  if (uniform) return state;
  // Eigen's vectorised exp clamps -inf to a subnormal; extinct stays zero.
  Eigen::VectorXd w = (log_w.array() - top).exp();
  for (Eigen::Index h = 0; h < m; ++h) {
    if (std::isinf(log_w(h))) w(h) = 0.0;
  }
  TabularState next{w / w.sum(), state.losses};
  return next;
}

Eigen::VectorXd bayes_update(const Eigen::VectorXd& prior, const Eigen::VectorXd& likelihoods) {
  if (prior.size() != likelihoods.size())
    throw InvalidArgument("prior and likelihoods differ in length");
  if ((prior.array() < 0.0).any() || std::abs(prior.sum() - 1.0) > 1e-12)
    throw InvalidArgument("prior is not a probability vector");
  if ((likelihoods.array() < 0.0).any() || !all_finite(likelihoods))
    throw InvalidArgument("likelihoods must be finite and non-negative");
  const Eigen::VectorXd joint = prior.cwiseProduct(likelihoods);
  const double evidence = joint.sum();
  if (!(evidence > 0.0)) throw UndefinedPosterior("evidence is zero for every hypothesis");
  return joint / evidence;
}

Eigen::VectorXd induced_rhodot(const TabularSoftmaxFamily& family, const ParamVector& theta,
                               const ParamVector& thetadot) {
  const Eigen::VectorXd rho = family.probabilities(theta);
  return rho.cwiseProduct(family.score_table(theta) * thetadot);
}

namespace {

void check_state_matches(const TabularSoftmaxFamily& family, const ParamVector& theta,
                         const TabularState& state) {
  state.validate();
  if (static_cast<std::size_t>(state.probabilities.size()) != family.support_size())
    throw InvalidArgument("state support does not match the family");
  const Eigen::VectorXd rho = family.probabilities(theta);
  if ((rho - state.probabilities).cwiseAbs().maxCoeff() > 1e-10)
    throw InvalidArgument("state probabilities differ from rho(.; theta)");
}

// 0.5 sum_h rho(h) (s_h . thetadot - (Lbar - L_h))^2
double deviation_value(const Eigen::VectorXd& rho, const Eigen::MatrixXd& scores,
                       const Eigen::VectorXd& losses, const ParamVector& thetadot) {
  const double mean = rho.dot(losses);
  const Eigen::ArrayXd resid =
      (scores * thetadot).array() - (mean - losses.array());
  return 0.5 * (rho.array() * resid.square()).sum();
}

}  // namespace

DeviationReport natural_deviation(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                  const ParamVector& thetadot, const TabularState& state) {
  check_state_matches(family, theta, state);
  if (static_cast<std::size_t>(thetadot.size()) != family.param_dim())
    throw InvalidArgument("thetadot length does not match the family");
  const Eigen::VectorXd rho = family.probabilities(theta);
  const Eigen::MatrixXd scores = family.score_table(theta);
  DeviationReport r;
  r.deviation = deviation_value(rho, scores, state.losses, thetadot);
  r.hessian_wrt_thetadot = exact_fisher(family, theta);
  r.gradient_wrt_thetadot = r.hessian_wrt_thetadot * thetadot +
                            exact_loss_gradient(family, theta, state.losses);
  return r;
}

ParamVector exact_fr_ngd_velocity(const TabularSoftmaxFamily& family, const ParamVector& theta,
                                  const TabularState& state, double pinv_threshold) {
  check_state_matches(family, theta, state);
  return solve_conjugate_flow(exact_fisher(family, theta),
                              exact_loss_gradient(family, theta, state.losses), pinv_threshold);
}

MinimalityReport verify_cns_minimality(const TabularSoftmaxFamily& family,
                                       const ParamVector& theta, const TabularState& state,
                                       std::size_t perturbations,
                                       std::span<const double> epsilons, Rng& rng,
                                       double gradient_tolerance) {
  MinimalityReport r;
  r.optimum = exact_fr_ngd_velocity(family, theta, state);
  const DeviationReport at = natural_deviation(family, theta, r.optimum, state);
  r.deviation_at_optimum = at.deviation;
  r.projected_gradient_norm =
      (range_projector(at.hessian_wrt_thetadot) * at.gradient_wrt_thetadot).norm();

  const Eigen::VectorXd rho = family.probabilities(theta);
  const Eigen::MatrixXd scores = family.score_table(theta);
  const auto n = static_cast<Eigen::Index>(family.param_dim());
  r.smallest_increase = std::numeric_limits<double>::infinity();
  r.worst_direction = ParamVector::Zero(n);
  for (std::size_t k = 0; k < perturbations; ++k) {
    ParamVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    v.normalize();
    for (double eps : epsilons) {
      const double e = deviation_value(rho, scores, state.losses, r.optimum + eps * v);
      const double increase = e - r.deviation_at_optimum;
      if (increase < r.smallest_increase) {
        r.smallest_increase = increase;
        r.worst_direction = v;
        r.worst_epsilon = eps;
      }
    }
  }
  if (perturbations == 0 || epsilons.empty()) r.smallest_increase = 0.0;
  r.passed = r.smallest_increase >= 0.0 && r.projected_gradient_norm < gradient_tolerance;
  return r;
}

namespace {

// rho(theta + t thetadot) - rho(theta), accurate to relative rounding of
// the difference itself: with a = Phi thetadot and p = expm1(t a),
// the shifted softmax is rho (1 + p) / (1 + rho . p).
Eigen::VectorXd softmax_shift(const Eigen::VectorXd& rho, const Eigen::VectorXd& a, double t) {
  const Eigen::VectorXd p = (t * a).unaryExpr([](double x) { return std::expm1(x); });
  const double mean = rho.dot(p);
  return rho.cwiseProduct((p.array() - mean).matrix()) / (1.0 + mean);
}

struct TraitDeltas {
  Eigen::VectorXd u;
  Eigen::VectorXd plus;   // u(theta + dt thetadot) - u(theta)
  Eigen::VectorXd minus;  // u(theta - dt thetadot) - u(theta)
};

// |d/dt E[u] - (-Cov[u, L] + E[udot])| from central differences, assembled
// from differences so that no O(1) quantities cancel.
double price_from_deltas(const Eigen::VectorXd& rho, const Eigen::VectorXd& d_plus,
                         const Eigen::VectorXd& d_minus, const TraitDeltas& u,
                         const Eigen::VectorXd& losses, double dt) {
  // rho+ . u+ - rho- . u-, expanded around (rho, u).
  const double d_mean = ((d_plus - d_minus).dot(u.u) + rho.dot(u.plus - u.minus) +
                         d_plus.dot(u.plus) - d_minus.dot(u.minus)) /
                        (2.0 * dt);
  const double mean_udot = rho.dot(u.plus - u.minus) / (2.0 * dt);
  const double mean_u = rho.dot(u.u);
  const double cov = rho.dot(((u.u.array() - mean_u) * (losses.array() - rho.dot(losses))).matrix());
  return std::abs(d_mean - (-cov + mean_udot));
}

}  // namespace

double price_residual(const TabularSoftmaxFamily& family, const ParamVector& theta,
                      const ParamVector& thetadot, const TabularState& state, const Trait& trait,
                      double dt) {
  check_state_matches(family, theta, state);
  if (!(dt > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (static_cast<std::size_t>(thetadot.size()) != family.param_dim())
    throw InvalidArgument("thetadot length does not match the family");
  const auto m = static_cast<Eigen::Index>(family.support_size());
  const ParamVector plus = theta + dt * thetadot;
  const ParamVector minus = theta - dt * thetadot;
  const Eigen::VectorXd rho = family.probabilities(theta);
  const Eigen::VectorXd a = family.features() * thetadot;

  TraitDeltas u{Eigen::VectorXd(m), Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (Eigen::Index h = 0; h < m; ++h) {
    const auto idx = static_cast<std::size_t>(h);
    u.u(h) = trait(theta, idx);
    u.plus(h) = trait(plus, idx) - u.u(h);
    u.minus(h) = trait(minus, idx) - u.u(h);
  }
  return price_from_deltas(rho, softmax_shift(rho, a, dt), softmax_shift(rho, a, -dt), u,
                           state.losses, dt);
}

double price_check(const TabularSoftmaxFamily& family, const ParamVector& theta,
                   const ParamVector& thetadot, const TabularState& state,
                   const ParamVector& alpha, double dt) {
  check_state_matches(family, theta, state);
  if (!(dt > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  if (static_cast<std::size_t>(alpha.size()) != family.param_dim() ||
      static_cast<std::size_t>(thetadot.size()) != family.param_dim())
    throw InvalidArgument("alpha or thetadot length does not match the family");
  // u(theta, h) = alpha . Phi^T (e_h - rho) = c_h - c . rho with c = Phi alpha,
  // so its change along the path is a constant shift -c . (rho' - rho).
  const Eigen::VectorXd rho = family.probabilities(theta);
  const Eigen::VectorXd a = family.features() * thetadot;
  const Eigen::VectorXd c = family.features() * alpha;
  const Eigen::VectorXd d_plus = softmax_shift(rho, a, dt);
  const Eigen::VectorXd d_minus = softmax_shift(rho, a, -dt);
  const auto m = rho.size();
  const TraitDeltas u{(c.array() - c.dot(rho)).matrix(),
                      Eigen::VectorXd::Constant(m, -c.dot(d_plus)),
                      Eigen::VectorXd::Constant(m, -c.dot(d_minus))};
  return price_from_deltas(rho, d_plus, d_minus, u, state.losses, dt);
}

}  // namespace natsel
