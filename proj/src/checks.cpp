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

#include "natsel/checks.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "natsel/bayes.hpp"
#include "natsel/families.hpp"
#include "natsel/kernels.hpp"
#include "natsel/natgrad.hpp"
#include "natsel/replicator.hpp"

namespace natsel::checks {

namespace {

// Collects sub-conditions of one check. The reported residual is the item
// closest to (or furthest past) its limit.
class Tally {
 public:
  void at_most(const std::string& what, double value, double limit) {
    add(what, value, limit, value <= limit, ratio(value, limit), "<=");
  }
  void below(const std::string& what, double value, double limit) {
    add(what, value, limit, value < limit, ratio(value, limit), "<");
  }
  void at_least(const std::string& what, double value, double limit) {
    const double severity = value >= limit ? 0.0 : 2.0 + (limit - value);
    add(what, value, limit, value >= limit, severity, ">=");
  }
  void within(const std::string& what, double value, double lo, double hi) {
    const bool ok = value >= lo && value <= hi;
    const double mid = std::sqrt(lo * hi);
    const double severity = std::abs(std::log(value / mid)) / std::log(hi / mid);
    std::ostringstream limit;
    limit.precision(3);
    limit << "[" << lo << ", " << hi << "]";
    add_text(what, value, ok, std::isfinite(severity) ? severity : 1e300, "in " + limit.str(), hi);
  }

  Result result() const {
    Result r;
    r.passed = failures_ == 0;
    r.residual = worst_value_;
    r.tolerance = worst_limit_;
    r.detail = detail_.str();
    return r;
  }

 private:
  static double ratio(double value, double limit) {
    if (limit > 0.0) return value / limit;
    return value <= limit ? 0.0 : 1e300;
  }
  void add(const std::string& what, double value, double limit, bool ok, double severity,
           const char* op) {
    std::ostringstream l;
    l.precision(3);
    l << op << ' ' << limit;
    add_text(what, value, ok, severity, l.str(), limit);
  }
  void add_text(const std::string& what, double value, bool ok, double severity,
                const std::string& limit_text, double limit) {
    if (!ok) ++failures_;
    if (!std::isfinite(severity)) severity = 1e300;
    if (!ok) severity += 1e6;
    if (first_ || severity > worst_severity_) {
      worst_severity_ = severity;
      worst_value_ = value;
      worst_limit_ = limit;
      first_ = false;
    }
    if (detail_.tellp() > 0) detail_ << "; ";
    detail_.precision(3);
    detail_ << what << " = " << value << " (" << limit_text << (ok ? ")" : ", FAIL)");
  }

  bool first_ = true;
  int failures_ = 0;
  double worst_severity_ = 0.0;
  double worst_value_ = 0.0;
  double worst_limit_ = 0.0;
  std::ostringstream detail_;
};

ParamVector normal_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  ParamVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
  return v;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

TabularSoftmaxFamily tabular(std::size_t m, std::size_t n, Rng& rng) {
  return n == m ? TabularSoftmaxFamily(m) : TabularSoftmaxFamily::random_features(m, n, rng);
}

constexpr std::size_t kSupports[] = {4, 8, 16};

// Feature dimensions tried for each support size; m itself is the full
// parameterization.
std::vector<std::size_t> feature_dims(std::size_t m) { return {2, 3, m}; }

Eigen::VectorXd random_simplex(Eigen::Index m, Rng& rng, double zero_fraction) {
  Eigen::VectorXd p(m);
  for (Eigen::Index i = 0; i < m; ++i) p(i) = rng.uniform() < zero_fraction ? 0.0 : rng.exponential(1.0);
  if (p.sum() == 0.0) p(static_cast<Eigen::Index>(rng.uniform() * m) % m) = 1.0;
  return p / p.sum();
}

}  // namespace

Result cns_minimality(const Options& options) {
  Tally tally;
  const Rng root = Rng(options.seed).split(1);
  double worst_grad = 0.0, worst_increase = INFINITY, worst_full_e = 0.0, worst_full_increase = INFINITY;
  double worst_projection = 0.0;
  const double eps[] = {1e-2, 1e-1};
  std::uint64_t key = 0;
  for (std::size_t m : kSupports) {
    for (std::size_t n : feature_dims(m)) {
      Rng rng = root.split(++key);
      const TabularSoftmaxFamily family = tabular(m, n, rng);
      const ParamVector theta = normal_vector(static_cast<Eigen::Index>(n), rng);
      const TabularState state =
          make_state(family, theta, normal_vector(static_cast<Eigen::Index>(m), rng));
      const MinimalityReport r =
          verify_cns_minimality(family, theta, state, options.perturbations, eps, rng);
      worst_grad = std::max(worst_grad, r.projected_gradient_norm);
      worst_increase = std::min(worst_increase, r.smallest_increase);
      if (n == m) {
        worst_full_e = std::max(worst_full_e, r.deviation_at_optimum);
        worst_full_increase = std::min(worst_full_increase, r.smallest_increase);
      }
      // Score moments of the induced velocity equal those of the replicator
      // velocity.
      const Eigen::MatrixXd scores = family.score_table(theta);
      const Eigen::VectorXd induced = induced_rhodot(family, theta, r.optimum);
      const Eigen::VectorXd target = replicator_rhs(state);
      worst_projection =
          std::max(worst_projection, (scores.transpose() * (induced - target)).cwiseAbs().maxCoeff());
    }
  }
  tally.below("projected |grad E|", worst_grad, 1e-8);
  tally.at_least("min E increase", worst_increase, 0.0);
  tally.below("full E(thetadot*)", worst_full_e, 1e-14);
  tally.at_least("full min E increase (strict)", worst_full_increase > 0.0 ? 1.0 : 0.0, 1.0);
  tally.at_most("score-projection mismatch", worst_projection, 1e-8);
  return tally.result();
}

Result deviation_oracle(const Options& options) {
  Tally tally;
  const Rng root = Rng(options.seed).split(2);
  double worst_rel = 0.0, worst_hess = 0.0, worst_psd = 0.0, worst_zero = 0.0, min_e = INFINITY;
  constexpr double kStep = 1e-5;
  std::uint64_t key = 0;
  for (std::size_t m : kSupports) {
    for (std::size_t n : feature_dims(m)) {
      Rng rng = root.split(++key);
      const TabularSoftmaxFamily family = tabular(m, n, rng);
      const auto ni = static_cast<Eigen::Index>(n);
      const ParamVector theta = normal_vector(ni, rng);
      const TabularState state =
          make_state(family, theta, normal_vector(static_cast<Eigen::Index>(m), rng));
      const ParamVector thetadot = normal_vector(ni, rng);
      const DeviationReport rep = natural_deviation(family, theta, thetadot, state);
      min_e = std::min(min_e, rep.deviation);

      ParamVector fd(ni);
      for (Eigen::Index i = 0; i < ni; ++i) {
        ParamVector up = thetadot, down = thetadot;
        up(i) += kStep;
        down(i) -= kStep;
        fd(i) = (natural_deviation(family, theta, up, state).deviation -
                 natural_deviation(family, theta, down, state).deviation) /
                (2.0 * kStep);
      }
      const double scale = std::max(rep.gradient_wrt_thetadot.cwiseAbs().maxCoeff(), DBL_MIN);
      worst_rel = std::max(worst_rel, (fd - rep.gradient_wrt_thetadot).cwiseAbs().maxCoeff() / scale);
      worst_hess = std::max(
          worst_hess,
          (rep.hessian_wrt_thetadot - family.analytic_fisher(theta)).cwiseAbs().maxCoeff());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(rep.hessian_wrt_thetadot);
      worst_psd = std::max(worst_psd, -eig.eigenvalues().minCoeff());

      // thetadot = 0 leaves half the loss variance.
      const double mean = state.mean_loss();
      const double var =
          state.probabilities.dot((state.losses.array() - mean).square().matrix());
      const double e0 = natural_deviation(family, theta, ParamVector::Zero(ni), state).deviation;
      worst_zero = std::max(worst_zero, std::abs(e0 - 0.5 * var));
    }
  }
  tally.at_most("gradient vs finite differences (relative)", worst_rel, 1e-6);
  tally.at_most("|hessian - analytic Fisher|", worst_hess, 1e-10);
  tally.at_least("min deviation", min_e, 0.0);
  tally.at_most("hessian negative eigenvalue", worst_psd, 1e-12);
  tally.at_most("|E(0) - Var[L]/2|", worst_zero, 1e-12);
  return tally.result();
}

Result replicator_identities(const Options& options) {
  Tally tally;
  const Rng root = Rng(options.seed).split(3);
  Rng rng = root.split(1);
  double worst_sum = 0.0, worst_consistency = 0.0, worst_closed = 0.0;
  std::size_t sign_violations = 0;
  constexpr double kDt = 1e-6;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = static_cast<Eigen::Index>(2 + trial % 15);
    TabularState state{random_simplex(m, rng, 0.0), normal_vector(m, rng)};
    const Eigen::VectorXd rhs = replicator_rhs(state);
    worst_sum = std::max(worst_sum, std::abs(rhs.sum()));
    const TabularState next = replicator_exact_step(state, kDt);
    worst_consistency = std::max(
        worst_consistency,
        ((next.probabilities - state.probabilities) / kDt - rhs).cwiseAbs().maxCoeff());

    // Zero stays zero and positive stays positive.
    TabularState sparse{random_simplex(m, rng, 0.3), normal_vector(m, rng, 2.0)};
    const TabularState moved = replicator_exact_step(sparse, uniform(rng, 0.0, 5.0) + 1e-3);
    for (Eigen::Index h = 0; h < m; ++h) {
      if ((sparse.probabilities(h) > 0.0) != (moved.probabilities(h) > 0.0)) ++sign_violations;
    }

    if (trial % 10 == 0) {
      TabularState it = state;
      for (int k = 0; k < 10; ++k) it = replicator_exact_step(it, 0.1);
      Eigen::VectorXd closed =
          state.probabilities.array() * (-state.losses.array()).exp();
      closed /= closed.sum();
      worst_closed = std::max(worst_closed, (it.probabilities - closed).cwiseAbs().maxCoeff());
    }
  }
  tally.at_most("|sum rhodot|", worst_sum, 1e-14);
  tally.at_most("|(rho'-rho)/dt - rhodot| at dt=1e-6", worst_consistency, 1e-5);
  tally.at_most("sign changes", static_cast<double>(sign_violations), 0.0);
  tally.at_most("iterated vs closed form", worst_closed, 1e-10);
  return tally.result();
}

Result bayes_equivalence(const Options& options) {
  Tally tally;
  Rng rng = Rng(options.seed).split(4);
  double worst_step = 0.0, worst_sequential = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = static_cast<Eigen::Index>(2 + trial % 11);
    const Eigen::VectorXd prior = random_simplex(m, rng, 0.1);
    Eigen::VectorXd lik(m);
    for (Eigen::Index h = 0; h < m; ++h) lik(h) = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
    // Keep some evidence.
    Eigen::Index keep = 0;
    prior.maxCoeff(&keep);
    if (lik(keep) == 0.0) lik(keep) = 0.5;
    const Eigen::VectorXd post = bayes_update(prior, lik);
    const TabularState step =
        replicator_exact_step({prior, (-lik.array().log()).matrix()}, 1.0);
    worst_step = std::max(worst_step, (post - step.probabilities).cwiseAbs().maxCoeff());

    if (trial % 10 == 0) {
      Eigen::VectorXd seq = prior;
      Eigen::VectorXd product = Eigen::VectorXd::Ones(m);
      for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd l(m);
        for (Eigen::Index h = 0; h < m; ++h) l(h) = 0.05 + rng.uniform();
        seq = bayes_update(seq, l);
        product.array() *= l.array();
      }
      worst_sequential =
          std::max(worst_sequential, (seq - bayes_update(prior, product)).cwiseAbs().maxCoeff());
    }
  }
  tally.at_most("|bayes - exact step|", worst_step, 8.0 * DBL_EPSILON);
  tally.at_most("|sequential - single-shot|", worst_sequential, 1e-10);
  return tally.result();
}

Result kl_gradient_equivalence(const Options& options) {
  (void)options;
  Tally tally;
  const GaussianScalarFamily family;
  const double sigmas[] = {0.5, 0.8, 1.0, 1.5, 2.0};
  double worst_grad = 0.0, worst_spread = 0.0, worst_entropy = 0.0;
  bool converged = true;
  for (double sigma : sigmas) {
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < 5; ++i) {
      const ParamVector theta = (ParamVector(2) << -1.0 + 0.5 * i, -0.5 + 0.25 * i).finished();
      const GradientEquivalenceReport r = verify_gradient_equivalence(family, theta, sigma);
      worst_grad = std::max(worst_grad, r.max_gradient_difference);
      lo = std::min(lo, r.objective_difference);
      hi = std::max(hi, r.objective_difference);
      worst_entropy = std::max(worst_entropy, std::abs(r.objective_difference - r.entropy));
      converged = converged && r.converged;
    }
    worst_spread = std::max(worst_spread, hi - lo);
  }
  tally.at_most("max |grad cross-entropy - grad E[KL]|", worst_grad, 1e-6);
  tally.at_most("objective difference spread over theta", worst_spread, 1e-8);
  tally.at_most("|objective difference - entropy|", worst_entropy, 1e-8);
  tally.at_least("quadrature converged", converged ? 1.0 : 0.0, 1.0);
  return tally.result();
}

Result price_equation(const Options& options) {
  Tally tally;
  const Rng root = Rng(options.seed).split(6);
  constexpr double kCoarse = 1e-4;
  constexpr double kFine = 1e-5;
  double lo_ratio = INFINITY, hi_ratio = 0.0, worst_zero = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng = root.split(trial);
    const TabularSoftmaxFamily family = TabularSoftmaxFamily::random_features(6, 4, rng);
    const ParamVector theta = normal_vector(4, rng);
    const TabularState state = make_state(family, theta, normal_vector(6, rng));
    const ParamVector alpha = normal_vector(4, rng);
    const ParamVector thetadot = exact_fr_ngd_velocity(family, theta, state);
    const double ratio = price_check(family, theta, thetadot, state, alpha, kCoarse) /
                         price_check(family, theta, thetadot, state, alpha, kFine);
    lo_ratio = std::min(lo_ratio, ratio);
    hi_ratio = std::max(hi_ratio, ratio);
    worst_zero = std::max(
        worst_zero, price_check(family, theta, thetadot, state, ParamVector::Zero(4), kCoarse));
  }
  tally.within("min residual ratio (dt 1e-4 -> 1e-5)", lo_ratio, 50.0, 200.0);
  tally.within("max residual ratio (dt 1e-4 -> 1e-5)", hi_ratio, 50.0, 200.0);
  tally.at_most("residual at alpha = 0", worst_zero, 0.0);
  return tally.result();
}

Result fisher_consistency(const Options& options) {
  Tally tally;
  const Rng root = Rng(options.seed).split(7);
  constexpr std::size_t kSamples = 1000000;
  double worst[3] = {0.0, 0.0, 0.0};
  const char* names[3] = {"gaussian-scalar", "gaussian-full-2d", "tabular-softmax"};
  Rng feature_rng = root.split(99);
  const GaussianScalarFamily scalar;
  const Gaussian2DFamily full2d;
  const TabularSoftmaxFamily table = TabularSoftmaxFamily::random_features(8, 3, feature_rng);
  for (int f = 0; f < 3; ++f) {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      Rng rng = root.split(100 * (f + 1) + trial);
      const DistributionFamily* family = nullptr;
      ParamVector theta;
      if (f == 0) {
        family = &scalar;
        theta = (ParamVector(2) << rng.normal(), uniform(rng, -0.7, 0.7)).finished();
      } else if (f == 1) {
        family = &full2d;
        theta = (ParamVector(5) << rng.normal(), rng.normal(), uniform(rng, -0.5, 0.5),
                 0.5 * rng.normal(), uniform(rng, -0.5, 0.5))
                    .finished();
      } else {
        family = &table;
        theta = normal_vector(3, rng);
      }
      const FisherMatrix exact = family->analytic_fisher(theta);
      const FisherMatrix est = empirical_fisher(*family, theta, kSamples, rng);
      const Eigen::VectorXd d = exact.diagonal().cwiseSqrt();
      const Eigen::MatrixXd rel =
          (est - exact).cwiseAbs().array() / (d * d.transpose()).array();
      worst[f] = std::max(worst[f], rel.maxCoeff());
    }
  }
  for (int f = 0; f < 3; ++f)
    tally.at_most(std::string(names[f]) + " max relative entry error", worst[f], 0.01);
  return tally.result();
}

Result full_parameterization(const Options& options) {
  Tally tally;
  Rng rng = Rng(options.seed).split(10);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(trial % 15);
    const TabularSoftmaxFamily family(m);
    const ParamVector theta = normal_vector(static_cast<Eigen::Index>(m), rng);
    const TabularState state =
        make_state(family, theta, normal_vector(static_cast<Eigen::Index>(m), rng));
    const ParamVector thetadot = exact_fr_ngd_velocity(family, theta, state);
    worst = std::max(worst, (induced_rhodot(family, theta, thetadot) - replicator_rhs(state))
                                .cwiseAbs()
                                .maxCoeff());
  }
  tally.at_most("|induced rhodot - replicator rhodot|", worst, 1e-8);
  return tally.result();
}

Result kernel_equivalence(const Options& options) {
  Tally tally;
  Rng rng = Rng(options.seed).split(11);
  const Gaussian2DFamily family;
  const ParamVector theta = Gaussian2DFamily::params(Eigen::Vector2d(0.3, -0.2),
                                                     (Eigen::Matrix2d() << 1.5, 0.4, 0.4, 0.7).finished());
  double worst_multi = 0.0, worst_single = 0.0, worst_threads = 0.0;
  for (std::size_t count : {kernels::kBlockSize / 2, 5 * kernels::kBlockSize + 17}) {
    const std::vector<Hypothesis> samples = family.sample(theta, rng, count);
    std::vector<double> w(count);
    for (double& x : w) x = rng.normal();
    const Eigen::VectorXd gs = kernels::serial::weighted_score_sum(family, theta, samples, w);
    const Eigen::VectorXd gp = kernels::parallel::weighted_score_sum(family, theta, samples, w);
    const Eigen::MatrixXd fs = kernels::serial::score_outer_sum(family, theta, samples);
    const Eigen::MatrixXd fp = kernels::parallel::score_outer_sum(family, theta, samples);
    const double diff = std::max((gs - gp).cwiseAbs().maxCoeff() / gs.cwiseAbs().maxCoeff(),
                                 (fs - fp).cwiseAbs().maxCoeff() / fs.cwiseAbs().maxCoeff());
    if (count <= kernels::kBlockSize) {
      worst_single = std::max(worst_single, diff);
    } else {
      worst_multi = std::max(worst_multi, diff);
    }

    const int saved = kernels::max_threads();
    kernels::set_threads(1);
    const Eigen::MatrixXd one = kernels::parallel::score_outer_sum(family, theta, samples);
    kernels::set_threads(4);
    const Eigen::MatrixXd four = kernels::parallel::score_outer_sum(family, theta, samples);
    kernels::set_threads(saved);
    worst_threads = std::max(worst_threads, (one - four).cwiseAbs().maxCoeff());
  }
  tally.at_most("single block parallel vs serial", worst_single, 0.0);
  tally.at_most("multi block parallel vs serial (relative)", worst_multi, 1e-12);
  tally.at_most("1 vs 4 threads", worst_threads, 0.0);
  return tally.result();
}

const std::vector<Check>& registry() {
  static const std::vector<Check> checks = {
      {"cns-minimality", "FR-NGD velocity minimises the natural deviation", cns_minimality},
      {"deviation-oracle", "deviation gradient and Hessian against finite differences",
       deviation_oracle},
      {"replicator-identities", "normalisation, small-step consistency, sign preservation",
       replicator_identities},
      {"bayes-equivalence", "Bayes update equals the unit-time replicator step", bayes_equivalence},
      {"kl-gradient-equivalence", "cross-entropy and expected-KL gradients coincide",
       kl_gradient_equivalence},
      {"price-equation", "score-span traits obey the Price equation to second order",
       price_equation},
      {"fisher-consistency", "empirical Fisher matches the analytic Fisher", fisher_consistency},
      {"full-parameterization", "full softmax FR-NGD reproduces the replicator velocity",
       full_parameterization},
      {"kernel-equivalence", "parallel reductions match the serial reference",
       kernel_equivalence},
  };
  return checks;
}

const Check* find(std::string_view name) {
  for (const Check& c : registry()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

}  // namespace natsel::checks
