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
#include <memory>

#include "natsel/families.hpp"
#include "natsel/natgrad.hpp"

namespace natsel {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

ParamVector vec(std::initializer_list<double> xs) {
  ParamVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Central differences of log_prob, step 1e-5.
ParamVector fd_score(const DistributionFamily& f, const ParamVector& theta, const Hypothesis& h) {
  constexpr double kStep = 1e-5;
  ParamVector g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    ParamVector up = theta, down = theta;
    up(i) += kStep;
    down(i) -= kStep;
    g(i) = (f.log_prob(up, h) - f.log_prob(down, h)) / (2.0 * kStep);
  }
  return g;
}

TEST(LogProb, SpecValues) {
  EXPECT_NEAR(TabularSoftmaxFamily(2).log_prob(vec({0, 0}), Hypothesis::discrete(0)), std::log(0.5),
              1e-15);
  EXPECT_NEAR(GaussianScalarFamily().log_prob(vec({0, 0}), Hypothesis::scalar(0.0)),
              -0.5 * kLog2Pi, 1e-15);
  EXPECT_NEAR(Gaussian2DFamily().log_prob(ParamVector::Zero(5), Hypothesis::continuous(Eigen::Vector2d(0, 0))),
              -kLog2Pi, 1e-15);
}

TEST(LogProb, Gaussian2DMatchesDirectDensity) {
  // Independent evaluation from (mu, Sigma) with an explicit 2x2 inverse.
  const ParamVector theta = vec({0.3, -0.7, 0.2, 0.9, -0.4});
  const double l11 = std::exp(0.2), l21 = 0.9, l22 = std::exp(-0.4);
  const double s11 = l11 * l11, s12 = l11 * l21, s22 = l21 * l21 + l22 * l22;
  const double det = s11 * s22 - s12 * s12;
  const double x = 1.1 - 0.3, y = -0.2 + 0.7;
  const double quad = (s22 * x * x - 2 * s12 * x * y + s11 * y * y) / det;
  const double expected = -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
  EXPECT_NEAR(Gaussian2DFamily().log_prob(theta, Hypothesis::continuous(Eigen::Vector2d(1.1, -0.2))),
              expected, 1e-13);
}

TEST(LogProb, DimensionMismatchThrows) {
  EXPECT_THROW(GaussianScalarFamily().log_prob(vec({0, 0, 0}), Hypothesis::scalar(0.0)),
               InvalidArgument);
  EXPECT_THROW(TabularSoftmaxFamily(3).log_prob(vec({0, 0, 0}), Hypothesis::discrete(3)),
               InvalidArgument);
  EXPECT_THROW(Gaussian2DFamily().log_prob(ParamVector::Zero(5), Hypothesis::scalar(1.0)),
               InvalidArgument);
  EXPECT_THROW(GaussianScalarFamily().log_prob(vec({NAN, 0}), Hypothesis::scalar(0.0)),
               InvalidArgument);
}

TEST(Score, SpecValues) {
  const ParamVector s = TabularSoftmaxFamily(2).score(vec({0, 0}), Hypothesis::discrete(0));
  EXPECT_NEAR(s(0), 0.5, 1e-15);
  EXPECT_NEAR(s(1), -0.5, 1e-15);
  const ParamVector g = GaussianScalarFamily().score(vec({0, 0}), Hypothesis::scalar(0.0));
  EXPECT_NEAR(g(0), 0.0, 1e-15);
  EXPECT_NEAR(g(1), -1.0, 1e-15);
}

struct FamilyCase {
  std::shared_ptr<DistributionFamily> family;
  std::function<ParamVector(Rng&)> draw_theta;
};

std::vector<FamilyCase> all_families() {
  Rng feature_rng(11);
  auto phi = std::make_shared<TabularSoftmaxFamily>(
      TabularSoftmaxFamily::random_features(7, 3, feature_rng));
  auto normals = [](Eigen::Index n, double scale) {
    return [n, scale](Rng& r) {
      ParamVector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * r.normal();
      return v;
    };
  };
  return {
      {std::make_shared<TabularSoftmaxFamily>(5), normals(5, 1.0)},
      {phi, normals(3, 1.0)},
      {std::make_shared<GaussianScalarFamily>(), normals(2, 0.5)},
      {std::make_shared<GaussianDiagonalFamily>(3), normals(6, 0.5)},
      {std::make_shared<Gaussian2DFamily>(), normals(5, 0.5)},
  };
}

TEST(Score, MatchesFiniteDifferences) {
  Rng rng(1);
  for (const auto& c : all_families()) {
    for (int trial = 0; trial < 20; ++trial) {
      const ParamVector theta = c.draw_theta(rng);
      for (const Hypothesis& h : c.family->sample(theta, rng, 3)) {
        const ParamVector s = c.family->score(theta, h);
        const ParamVector fd = fd_score(*c.family, theta, h);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
          EXPECT_NEAR(s(i), fd(i), 1e-4 * std::max(1.0, std::abs(fd(i))))
              << to_string(c.family->kind()) << " component " << i;
        }
      }
    }
  }
}

TEST(Score, TabularExpectedScoreIsZero) {
  Rng rng(2);
  const auto f = TabularSoftmaxFamily::random_features(9, 4, rng);
  ParamVector theta(4);
  for (Eigen::Index i = 0; i < 4; ++i) theta(i) = rng.normal();
  const Eigen::VectorXd rho = f.probabilities(theta);
  EXPECT_NEAR(rho.sum(), 1.0, 1e-12);
  const Eigen::VectorXd mean = f.score_table(theta).transpose() * rho;
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Score, MonteCarloMeanNearZero) {
  constexpr std::size_t kN = 100000;
  Rng rng(3);
  for (const auto& c : all_families()) {
    const ParamVector theta = c.draw_theta(rng);
    const auto samples = c.family->sample(theta, rng, kN);
    const auto n = theta.size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = Eigen::VectorXd::Zero(n);
    for (const auto& h : samples) {
      const ParamVector s = c.family->score(theta, h);
      sum += s;
      sq += s.cwiseAbs2();
    }
    const Eigen::VectorXd mean = sum / kN;
    const Eigen::VectorXd sd = (sq / kN - mean.cwiseAbs2()).cwiseSqrt();
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_LT(std::abs(mean(i)), 5.0 / std::sqrt(double(kN)) * sd(i) + 1e-15)
          << to_string(c.family->kind()) << " component " << i;
    }
  }
}

// Trapezoid rule on a wide uniform grid.
template <typename F>
double trapezoid(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double total = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) total += f(lo + i * h);
  return total * h;
}

TEST(Normalization, ScalarGaussianIntegratesToOne) {
  const GaussianScalarFamily f;
  for (const ParamVector& theta : {vec({0, 0}), vec({1.5, -0.8}), vec({-2, 0.6})}) {
    const double mu = theta(0), sd = std::exp(theta(1));
    const double total = trapezoid(
        [&](double h) { return std::exp(f.log_prob(theta, Hypothesis::scalar(h))); },
        mu - 12 * sd, mu + 12 * sd, 4000);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Normalization, DiagonalMarginalsIntegrateToOne) {
  // One-dimensional diagonal family is a scalar Gaussian in disguise.
  const GaussianDiagonalFamily f(1);
  const ParamVector theta = vec({0.4, -0.3});
  const double total = trapezoid(
      [&](double h) {
        return std::exp(f.log_prob(theta, Hypothesis::continuous(Eigen::VectorXd::Constant(1, h))));
      },
      -10, 10, 4000);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Fisher, SpecValues) {
  const FisherMatrix f = TabularSoftmaxFamily(2).analytic_fisher(vec({0, 0}));
  EXPECT_NEAR(f(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(f(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(f(1, 0), -0.25, 1e-15);
  EXPECT_NEAR(f(1, 1), 0.25, 1e-15);
  const FisherMatrix g = GaussianScalarFamily().analytic_fisher(vec({0.7, std::log(3.0)}));
  EXPECT_NEAR(g(0, 0), 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(g(1, 1), 2.0, 1e-15);
  EXPECT_EQ(g(0, 1), 0.0);
}

TEST(Fisher, ScalarGaussianMatchesQuadrature) {
  const GaussianScalarFamily f;
  const ParamVector theta = vec({0.3, 0.4});
  const double mu = theta(0), sd = std::exp(theta(1));
  const FisherMatrix exact = f.analytic_fisher(theta);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double q = trapezoid(
          [&](double h) {
            const Hypothesis hyp = Hypothesis::scalar(h);
            const ParamVector s = f.score(theta, hyp);
            return std::exp(f.log_prob(theta, hyp)) * s(a) * s(b);
          },
          mu - 14 * sd, mu + 14 * sd, 8000);
      EXPECT_NEAR(q, exact(a, b), 1e-8);
    }
  }
}

TEST(Fisher, Gaussian2DMatchesGridQuadrature) {
  const Gaussian2DFamily f;
  const ParamVector theta = vec({0.2, -0.1, -0.2, 0.5, 0.1});
  const FisherMatrix exact = f.analytic_fisher(theta);
  // Integrate over the standardised coordinates z = L^{-1}(h - mu).
  const Eigen::Vector2d mu = Gaussian2DFamily::mean(theta);
  const Eigen::Matrix2d l = Gaussian2DFamily::cholesky(theta);
  constexpr int kN = 400;
  constexpr double kR = 9.0;
  const double step = 2 * kR / kN;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i <= kN; ++i) {
    for (int j = 0; j <= kN; ++j) {
      const Eigen::Vector2d z(-kR + i * step, -kR + j * step);
      const double w = (i == 0 || i == kN ? 0.5 : 1.0) * (j == 0 || j == kN ? 0.5 : 1.0);
      const double phi = std::exp(-0.5 * z.squaredNorm()) / (2 * kPi);
      const ParamVector s = f.score(theta, Hypothesis::continuous(mu + l * z));
      q += w * phi * s * s.transpose();
    }
  }
  q *= step * step;
  EXPECT_LT((q - exact).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fisher, SymmetricPsdAndNonDegenerate) {
  Rng rng(4);
  for (const auto& c : all_families()) {
    for (int trial = 0; trial < 10; ++trial) {
      const ParamVector theta = c.draw_theta(rng);
      const FisherMatrix f = c.family->analytic_fisher(theta);
      EXPECT_LT((f - f.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
      if (c.family->kind() == FamilyKind::kGaussianFull2D) {
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
      }
    }
  }
}

TEST(Fisher, FullSoftmaxHasGaugeNullDirection) {
  Rng rng(5);
  const TabularSoftmaxFamily f(6);
  ParamVector theta(6);
  for (Eigen::Index i = 0; i < 6; ++i) theta(i) = rng.normal();
  const FisherMatrix fisher = f.analytic_fisher(theta);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fisher);
  EXPECT_LT(std::abs(eig.eigenvalues()(0)), 1e-10);
  EXPECT_GT(eig.eigenvalues()(1), 1e-6);
  EXPECT_LT((fisher * Eigen::VectorXd::Ones(6)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sample, NearDegenerateSoftmax) {
  Rng rng(6);
  for (const auto& h : TabularSoftmaxFamily(2).sample(vec({10, -10}), rng, 100)) {
    EXPECT_EQ(h.index(), 0u);
  }
}

TEST(Sample, Gaussian2DMean) {
  Rng rng(7);
  const ParamVector theta = Gaussian2DFamily::params(Eigen::Vector2d(-1.5, -1.5),
                                                     Eigen::Matrix2d::Identity());
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const auto samples = Gaussian2DFamily().sample(theta, rng, 100000);
  for (const auto& h : samples) mean += h.point();
  mean /= double(samples.size());
  EXPECT_NEAR(mean(0), -1.5, 0.02);
  EXPECT_NEAR(mean(1), -1.5, 0.02);
}

TEST(Sample, DeterministicForSeed) {
  for (const auto& c : all_families()) {
    Rng a(8), b(8), t(9);
    const ParamVector theta = c.draw_theta(t);
    const auto x = c.family->sample(theta, a, 50);
    const auto y = c.family->sample(theta, b, 50);
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].to_string(), y[i].to_string());
  }
}

TEST(Gaussian2D, ParamsRoundTrip) {
  const Eigen::Vector2d mu(0.3, -2.0);
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 0.5;
  const ParamVector theta = Gaussian2DFamily::params(mu, cov);
  EXPECT_LT((Gaussian2DFamily::mean(theta) - mu).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((Gaussian2DFamily::covariance(theta) - cov).cwiseAbs().maxCoeff(), 1e-14);
  const ParamVector identity = Gaussian2DFamily::params(mu, Eigen::Matrix2d::Identity());
  EXPECT_LT(identity.tail(3).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Factory, ParsesKinds) {
  EXPECT_EQ(parse_family_kind("gaussian-full-2d"), FamilyKind::kGaussianFull2D);
  EXPECT_EQ(make_family(FamilyKind::kGaussianScalar, 1)->param_dim(), 2u);
  EXPECT_EQ(make_family(FamilyKind::kTabularSoftmax, 4)->param_dim(), 4u);
  EXPECT_FALSE(parse_family_kind("cauchy").has_value());
}

}  // namespace
}  // namespace natsel
