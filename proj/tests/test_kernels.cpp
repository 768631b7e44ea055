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
#include "natsel/kernels.hpp"

namespace natsel {
namespace {

struct Fixture {
  Gaussian2DFamily family;
  ParamVector theta = (ParamVector(5) << 0.2, -0.4, -0.3, 0.5, 0.1).finished();
  std::vector<Hypothesis> samples;
  std::vector<double> weights;

  explicit Fixture(std::size_t n) {
    Rng rng(17);
    samples = family.sample(theta, rng, n);
    for (const auto& h : samples) weights.push_back(rastrigin({h.point()(0), h.point()(1)}));
  }
};

// Plain accumulation with explicit score formulas, independent of the
// family implementation.
Eigen::VectorXd reference_score(const ParamVector& t, const Eigen::VectorXd& x) {
  const double l11 = std::exp(t(2)), l21 = t(3), l22 = std::exp(t(4));
  const double z1 = (x(0) - t(0)) / l11;
  const double z2 = (x(1) - t(1) - l21 * z1) / l22;
  Eigen::VectorXd s(5);
  s(0) = z1 / l11 - z2 * l21 / (l11 * l22);
  s(1) = z2 / l22;
  s(2) = z1 * z1 - 1.0 - z2 * l21 * z1 / l22;
  s(3) = z2 * z1 / l22;
  s(4) = z2 * z2 - 1.0;
  return s;
}

TEST(Kernels, SerialMatchesReferenceScores) {
  Fixture f(500);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(5);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(5, 5);
  for (std::size_t k = 0; k < f.samples.size(); ++k) {
    const Eigen::VectorXd s = reference_score(f.theta, f.samples[k].point());
    expect += f.weights[k] * s;
    outer += s * s.transpose();
  }
  const auto got = kernels::serial::weighted_score_sum(f.family, f.theta, f.samples, f.weights);
  EXPECT_LT((got - expect).norm(), 1e-10 * expect.norm());
  const auto fisher = kernels::serial::score_outer_sum(f.family, f.theta, f.samples);
  EXPECT_LT((fisher - outer).norm(), 1e-10 * outer.norm());
}

TEST(Kernels, SingleBlockIsBitIdentical) {
  Fixture f(kernels::kBlockSize);
  EXPECT_EQ(kernels::parallel::weighted_score_sum(f.family, f.theta, f.samples, f.weights),
            kernels::serial::weighted_score_sum(f.family, f.theta, f.samples, f.weights));
  EXPECT_EQ(kernels::parallel::score_outer_sum(f.family, f.theta, f.samples),
            kernels::serial::score_outer_sum(f.family, f.theta, f.samples));
}

TEST(Kernels, MultiBlockAgreesWithSerial) {
  Fixture f(3 * kernels::kBlockSize + 77);
  const auto a = kernels::parallel::weighted_score_sum(f.family, f.theta, f.samples, f.weights);
  const auto b = kernels::serial::weighted_score_sum(f.family, f.theta, f.samples, f.weights);
  EXPECT_LT((a - b).norm(), 1e-12 * b.norm());
  const auto fa = kernels::parallel::score_outer_sum(f.family, f.theta, f.samples, f.weights);
  const auto fb = kernels::serial::score_outer_sum(f.family, f.theta, f.samples, f.weights);
  EXPECT_LT((fa - fb).norm(), 1e-12 * fb.norm());
}

TEST(Kernels, ResultIndependentOfThreadCount) {
  Fixture f(5 * kernels::kBlockSize + 3);
  const int before = kernels::max_threads();
  kernels::set_threads(1);
  const auto one = kernels::parallel::score_outer_sum(f.family, f.theta, f.samples, f.weights);
  const auto one_l = kernels::parallel::evaluate_losses(rastrigin_loss(), f.samples);
  kernels::set_threads(4);
  const auto four = kernels::parallel::score_outer_sum(f.family, f.theta, f.samples, f.weights);
  const auto four_l = kernels::parallel::evaluate_losses(rastrigin_loss(), f.samples);
  kernels::set_threads(before);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one_l, four_l);
}

TEST(Kernels, EvaluateLossesKeepsSampleOrder) {
  Fixture f(2 * kernels::kBlockSize + 10);
  const auto par = kernels::parallel::evaluate_losses(rastrigin_loss(), f.samples);
  EXPECT_EQ(par, f.weights);
  EXPECT_EQ(kernels::serial::evaluate_losses(rastrigin_loss(), f.samples), f.weights);
}

TEST(Kernels, UnsafeOracleRunsSequentially) {
  Fixture f(kernels::kBlockSize + 5);
  std::vector<std::size_t> order;
  LossOracle counting;
  counting.evaluate = [&order](const Hypothesis&) {
    order.push_back(order.size());
    return 1.0;
  };
  kernels::parallel::evaluate_losses(counting, f.samples);
  ASSERT_EQ(order.size(), f.samples.size());
  for (std::size_t k = 0; k < order.size(); ++k) EXPECT_EQ(order[k], k);
}

TEST(Kernels, NonFiniteLossRaises) {
  Fixture f(3 * kernels::kBlockSize);
  LossOracle bad = rastrigin_loss();
  bad.evaluate = [](const Hypothesis& h) { return h.point()(0) > 1.0 ? NAN : 0.0; };
  try {
    kernels::parallel::evaluate_losses(bad, f.samples);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("at hypothesis"), std::string::npos);
  }
  EXPECT_THROW(kernels::serial::evaluate_losses(bad, f.samples), EvaluationError);
}

TEST(Kernels, WeightLengthMismatchRejected) {
  Fixture f(10);
  std::vector<double> w(9, 1.0);
  EXPECT_THROW(kernels::serial::weighted_score_sum(f.family, f.theta, f.samples, w), InvalidArgument);
  EXPECT_THROW(kernels::parallel::score_outer_sum(f.family, f.theta, f.samples, w), InvalidArgument);
}

TEST(Kernels, EmptySampleSet) {
  Fixture f(1);
  f.samples.clear();
  f.weights.clear();
  EXPECT_EQ(kernels::parallel::weighted_score_sum(f.family, f.theta, f.samples, f.weights),
            Eigen::VectorXd::Zero(5));
  EXPECT_TRUE(kernels::parallel::evaluate_losses(rastrigin_loss(), f.samples).empty());
}

}  // namespace
}  // namespace natsel
