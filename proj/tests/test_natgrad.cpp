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

#include <gtest/gtest.h>

#include <cmath>

#include "natsel/bench.hpp"
#include "natsel/natgrad.hpp"
#include "natsel/replicator.hpp"

namespace natsel {
namespace {

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

LossOracle table_loss(Eigen::VectorXd values) {
  LossOracle o;
  o.evaluate = [values](const Hypothesis& h) { return values(static_cast<Eigen::Index>(h.index())); };
  return o;
}

LossOracle constant_loss(double c) {
  LossOracle o;
  o.evaluate = [c](const Hypothesis&) { return c; };
  return o;
}

TEST(LossGradient, ExactTabularSpecValue) {
  const ParamVector g = exact_loss_gradient(TabularSoftmaxFamily(2), vec({0, 0}), vec({0, 1}));
  EXPECT_NEAR(g(0), -0.25, 1e-15);
  EXPECT_NEAR(g(1), 0.25, 1e-15);
}

TEST(LossGradient, ConstantLossWithoutBaselineIsScaledMeanScore) {
  const GaussianScalarFamily f;
  const ParamVector theta = vec({0.2, -0.1});
  Rng a(1), b(1);
  const GradientEstimate est = mc_loss_gradient(f, theta, constant_loss(3.0), 50, a, false);
  const auto samples = f.sample(theta, b, 50);
  ParamVector mean = ParamVector::Zero(2);
  for (const auto& h : samples) mean += f.score(theta, h);
  mean /= 50.0;
  EXPECT_LT((est.gradient - 3.0 * mean).cwiseAbs().maxCoeff(), 1e-13);
  // With the baseline the constant cancels exactly.
  Rng c(1);
  EXPECT_EQ(mc_loss_gradient(f, theta, constant_loss(3.0), 50, c, true).gradient.norm(), 0.0);
}

TEST(LossGradient, ScalarGaussianSquareLoss) {
  // E[h^2] = mu^2 + sigma^2, so the gradient at (0, 0) is (0, 2).
  const GaussianScalarFamily f;
  LossOracle sq;
  sq.evaluate = [](const Hypothesis& h) { return h.value() * h.value(); };
  sq.concurrency_safe = true;
  constexpr std::size_t kN = 1000000;
  Rng rng(2);
  const GradientEstimate est = mc_loss_gradient(f, vec({0, 0}), sq, kN, rng, false);
  // Per-sample standard deviations: h^3 has sd sqrt(15), h^2 (h^2 - 1) has sd sqrt(96 - 4).
  EXPECT_NEAR(est.gradient(0), 0.0, 3.0 * std::sqrt(15.0 / kN));
  EXPECT_NEAR(est.gradient(1), 2.0, 3.0 * std::sqrt(92.0 / kN));
  EXPECT_EQ(est.losses.size(), kN);
}

TEST(LossGradient, UnbiasedForTabularWithAndWithoutBaseline) {
  Rng rng(3);
  const auto f = TabularSoftmaxFamily::random_features(6, 3, rng);
  const ParamVector theta = vec({0.3, -0.5, 0.8});
  Eigen::VectorXd losses(6);
  for (Eigen::Index i = 0; i < 6; ++i) losses(i) = rng.normal();
  const ParamVector exact = exact_loss_gradient(f, theta, losses);
  for (bool baseline : {false, true}) {
    constexpr int kReps = 10000;
    ParamVector sum = ParamVector::Zero(3), sq = ParamVector::Zero(3);
    for (int r = 0; r < kReps; ++r) {
      const ParamVector g = mc_loss_gradient(f, theta, table_loss(losses), 10, rng, baseline).gradient;
      sum += g;
      sq += g.cwiseAbs2();
    }
    const ParamVector mean = sum / kReps;
    const ParamVector se = ((sq / kReps - mean.cwiseAbs2()) / kReps).cwiseSqrt();
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_LT(std::abs(mean(i) - exact(i)), 4.0 * se(i))
          << "baseline=" << baseline << " component " << i;
    }
  }
}

TEST(LossGradient, ExactBaselineInvariance) {
  Rng rng(4);
  const auto f = TabularSoftmaxFamily::random_features(7, 4, rng);
  const ParamVector theta = vec({0.1, 0.2, -0.3, 0.4});
  Eigen::VectorXd losses(7);
  for (Eigen::Index i = 0; i < 7; ++i) losses(i) = rng.normal();
  EXPECT_LT((exact_loss_gradient(f, theta, losses, true) - exact_loss_gradient(f, theta, losses, false))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(LossGradient, NonFiniteLossNamesHypothesis) {
  LossOracle bad;
  bad.evaluate = [](const Hypothesis&) { return std::nan(""); };
  Rng rng(5);
  try {
    mc_loss_gradient(TabularSoftmaxFamily(3), vec({0, 0, 0}), bad, 5, rng, true);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("at hypothesis"), std::string::npos) << e.what();
  }
  EXPECT_THROW(mc_loss_gradient(TabularSoftmaxFamily(3), vec({0, 0, 0}), bad, 1, rng, true),
               InvalidArgument);
}

TEST(EmpiricalFisher, ScalarGaussianAtOrigin) {
  Rng rng(6);
  const FisherMatrix f = empirical_fisher(GaussianScalarFamily(), vec({0, 0}), 1000000, rng);
  EXPECT_NEAR(f(0, 0), 1.0, 0.01);
  EXPECT_NEAR(f(1, 1), 2.0, 0.02);
  EXPECT_NEAR(f(0, 1), 0.0, 0.01 * std::sqrt(2.0));
}

TEST(EmpiricalFisher, SingleSampleIsRankOne) {
  Rng rng(7);
  const FisherMatrix f = empirical_fisher_unchecked(Gaussian2DFamily(), ParamVector::Zero(5), 1, rng);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < 5; ++i) nonzero += eig.eigenvalues()(i) > 1e-10;
  EXPECT_EQ(nonzero, 1);
  EXPECT_THROW(empirical_fisher(Gaussian2DFamily(), ParamVector::Zero(5), 5, rng), InvalidArgument);
}

TEST(EmpiricalFisher, ExactTabularMatchesClosedForm) {
  const ParamVector theta = vec({0.3, -1.0, 0.5, 0.0});
  const TabularSoftmaxFamily f(4);
  const Eigen::VectorXd rho = f.probabilities(theta);
  const Eigen::MatrixXd closed = Eigen::MatrixXd(rho.asDiagonal()) - rho * rho.transpose();
  EXPECT_LT((exact_fisher(f, theta) - closed).cwiseAbs().maxCoeff(), 1e-16 * 8);
}

TEST(Solve, SpecValues) {
  const ParamVector g = vec({1.0, -2.0, 0.5});
  EXPECT_LT((solve_conjugate_flow(Eigen::MatrixXd::Identity(3, 3), g) + g).norm(), 1e-15);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  const ParamVector v = solve_conjugate_flow(d, vec({4, 0}));
  EXPECT_NEAR(v(0), -2.0, 1e-15);
  EXPECT_EQ(v(1), 0.0);

  const TabularSoftmaxFamily f(2);
  const ParamVector td =
      solve_conjugate_flow(f.analytic_fisher(vec({0, 0})), vec({-0.25, 0.25}));
  EXPECT_NEAR(td(0), 0.5, 1e-14);
  EXPECT_NEAR(td(1), -0.5, 1e-14);
}

TEST(Solve, PseudoInverseContract) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    // Random PSD matrix of rank 3 in dimension 5.
    Eigen::MatrixXd a(5, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    const Eigen::MatrixXd f = a * a.transpose();
    Eigen::VectorXd coeffs(3);
    for (Eigen::Index i = 0; i < 3; ++i) coeffs(i) = rng.normal();
    const Eigen::VectorXd g = a * coeffs;  // in range(F)
    const ParamVector v = solve_conjugate_flow(f, g);
    EXPECT_LT((f * v + g).norm() / g.norm(), 1e-8);
    // Orthogonal to null(F): null(F) = null(A^T).
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a.transpose());
    const Eigen::MatrixXd null = lu.kernel();
    EXPECT_LT((null.transpose() * v).cwiseAbs().maxCoeff() / v.norm(), 1e-8);
  }
}

TEST(Solve, RejectsBadFisher) {
  Eigen::MatrixXd f(2, 2);
  f << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(solve_conjugate_flow(f, vec({1, 1})), InvalidArgument);
  f << 1.0, NAN, NAN, 1.0;
  EXPECT_THROW(solve_conjugate_flow(f, vec({1, 1})), InvalidArgument);
  EXPECT_THROW(solve_conjugate_flow(Eigen::MatrixXd::Identity(3, 3), vec({1, 1})), InvalidArgument);
}

TEST(Euler, SpecValues) {
  EXPECT_EQ(euler_step(vec({1, 2}), vec({0, 0}), 0.7), vec({1, 2}));
  const ParamVector t = euler_step(vec({0, 0}), vec({1, -1}), 1e-3);
  EXPECT_DOUBLE_EQ(t(0), 0.001);
  EXPECT_DOUBLE_EQ(t(1), -0.001);
  EXPECT_THROW(euler_step(vec({0, 0}), vec({INFINITY, 0}), 1e-3), EvaluationError);
  EXPECT_THROW(euler_step(vec({0, 0}), vec({1, 0}), 0.0), InvalidArgument);
}

TEST(Euler, TabularStepFavoursLowerLoss) {
  const TabularSoftmaxFamily f(2);
  const ParamVector next = euler_step(vec({0, 0}), vec({0.5, -0.5}), 1e-2);
  EXPECT_NEAR(next(0), 0.005, 1e-17);
  EXPECT_NEAR(next(1), -0.005, 1e-17);
  EXPECT_GT(f.probabilities(next)(0), 0.5);
}

TEST(StepConfig, Validation) {
  StepConfig c;
  EXPECT_NO_THROW(c.validate());
  c.mc_samples = 1;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = StepConfig{};
  c.pinv_threshold = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = StepConfig{};
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Run, ConstantLossWithBaselineStaysPut) {
  const Gaussian2DFamily f;
  Rng rng(9);
  StepConfig c;
  const ParamVector start = ParamVector::Zero(5);
  const Trajectory t = run_fr_ngd(f, start, constant_loss(1.0), c, 20, rng);
  ASSERT_EQ(t.size(), 20u);
  EXPECT_FALSE(t.abort_reason().has_value());
  EXPECT_EQ(t.final_theta(), start);
}

TEST(Run, RecordsStepsAndStatistics) {
  const Gaussian2DFamily f;
  Rng rng(10);
  StepConfig c;
  const Trajectory t = run_fr_ngd(f, ParamVector::Zero(5), rastrigin_loss(), c, 5, rng);
  ASSERT_EQ(t.size(), 5u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t[k].step, k);
    EXPECT_DOUBLE_EQ(t[k].time, k * c.learning_rate);
    EXPECT_LE(t[k].losses.min, t[k].losses.mean);
    EXPECT_GE(t[k].losses.max, t[k].losses.mean);
    EXPECT_GE(t[k].losses.stddev, 0.0);
  }
  EXPECT_EQ(t[0].theta, ParamVector::Zero(5));
  EXPECT_EQ(t.config_value("mc_samples"), 40.0);
}

TEST(Run, DeterministicForSeed) {
  const Gaussian2DFamily f;
  StepConfig c;
  Rng a(11), b(11);
  const Trajectory x = run_fr_ngd(f, ParamVector::Zero(5), rastrigin_loss(), c, 10, a);
  const Trajectory y = run_fr_ngd(f, ParamVector::Zero(5), rastrigin_loss(), c, 10, b);
  EXPECT_EQ(x.final_theta(), y.final_theta());
}

TEST(Run, DivergenceKeepsPartialTrajectory) {
  // Loss that explodes quickly pushes the mean far away.
  LossOracle steep;
  steep.evaluate = [](const Hypothesis& h) { return -1e9 * h.value(); };
  StepConfig c;
  c.learning_rate = 1.0;
  Rng rng(12);
  const Trajectory t = run_fr_ngd(GaussianScalarFamily(), vec({0, 0}), steep, c, 100, rng);
  ASSERT_TRUE(t.abort_reason().has_value());
  EXPECT_LT(t.size(), 100u);
  EXPECT_NE(t.abort_reason()->find("divergence bound"), std::string::npos) << *t.abort_reason();
}

TEST(Run, EmpiricalFisherModeRuns) {
  StepConfig c;
  c.fisher_mode = FisherMode::kEmpirical;
  Rng rng(13);
  const Trajectory t = run_fr_ngd(Gaussian2DFamily(), ParamVector::Zero(5), quadratic_loss(), c, 5, rng);
  EXPECT_EQ(t.size(), 5u);
  EXPECT_TRUE(all_finite(t.final_theta()));
}

TEST(Descent, SmallStepsDecreaseExpectedLoss) {
  // Exact gradients, analytic Fisher, eta = 1e-4 at 100 random theta.
  const Gaussian2DFamily f;
  Rng rng(14);
  StepConfig c;
  c.learning_rate = 1e-4;
  struct Case {
    const char* name;
    double (*value)(const ParamVector&);
  } cases[] = {{"rastrigin", rastrigin_expected_loss}, {"quadratic", quadratic_expected_loss}};
  for (const auto& cs : cases) {
    const GradientSource src = exact_gradient_source(cs.name);
    for (int trial = 0; trial < 100; ++trial) {
      ParamVector theta(5);
      for (Eigen::Index i = 0; i < 5; ++i) theta(i) = 0.7 * rng.normal();
      const StepResult r = natural_gradient_step(f, theta, src, c, rng);
      EXPECT_LE(cs.value(r.next_theta), cs.value(theta) + 1e-12) << cs.name << " trial " << trial;
    }
  }
}

TEST(Descent, QuadraticExactFlowDecreasesMonotonically) {
  const Gaussian2DFamily f;
  StepConfig c;
  c.learning_rate = 1e-2;
  Rng rng(15);
  const Problem p = make_problem("quadratic");
  const Trajectory t =
      run_natural_gradient(f, p.initial, exact_gradient_source("quadratic"), c, 300, rng);
  double prev = quadratic_expected_loss(t[0].theta);
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double cur = quadratic_expected_loss(t[k].theta);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(Gaussian2DFamily::mean(t.final_theta()).norm(),
            Gaussian2DFamily::mean(p.initial).norm());
}

TEST(FullParameterization, InducedVelocityMatchesReplicator) {
  Rng rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + trial % 9;
    const TabularSoftmaxFamily f(m);
    ParamVector theta(static_cast<Eigen::Index>(m));
    Eigen::VectorXd losses(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      theta(i) = rng.normal();
      losses(i) = rng.normal();
    }
    const ParamVector g = exact_loss_gradient(f, theta, losses);
    const ParamVector v = solve_conjugate_flow(exact_fisher(f, theta), g);
    const TabularState s = make_state(f, theta, losses);
    EXPECT_LT((induced_rhodot(f, theta, v) - replicator_rhs(s)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

}  // namespace
}  // namespace natsel
