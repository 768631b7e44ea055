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

// Parametric distribution families rho(h; theta) over hypothesis space.
//
// Every family provides its log-density, analytic score, a sampler driven by
// a caller-owned Rng, and a closed-form Fisher information matrix. All member
// functions are const and keep no mutable state, so a family may be shared
// between threads.

#ifndef NATSEL_FAMILIES_HPP_
#define NATSEL_FAMILIES_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "natsel/core.hpp"

namespace natsel {

enum class FamilyKind { kTabularSoftmax, kGaussianFull2D, kGaussianDiagonal, kGaussianScalar };

std::string_view to_string(FamilyKind kind);

class DistributionFamily {
 public:
  virtual ~DistributionFamily() = default;

  virtual FamilyKind kind() const = 0;
  /// Number of parameters n.
  virtual std::size_t param_dim() const = 0;
  /// Dimension d of continuous hypotheses, or support size for discrete ones.
  virtual std::size_t hypothesis_dim() const = 0;
  virtual bool is_discrete() const = 0;

  virtual double log_prob(const ParamVector& theta, const Hypothesis& h) const = 0;

  /// Writes s_i = d log rho(h; theta) / d theta_i into `out` (length n).
  virtual void score_into(const ParamVector& theta, const Hypothesis& h,
                          Eigen::Ref<Eigen::VectorXd> out) const = 0;

  ParamVector score(const ParamVector& theta, const Hypothesis& h) const;

  /// I.i.d. draws from rho(.; theta).
  virtual std::vector<Hypothesis> sample(const ParamVector& theta, Rng& rng,
                                         std::size_t count) const = 0;

  virtual FisherMatrix analytic_fisher(const ParamVector& theta) const = 0;

  /// Throws InvalidArgument unless theta has length n and finite entries.
  void check_params(const ParamVector& theta) const;

 protected:
  void check_hypothesis(const Hypothesis& h) const;
};

/// Softmax over a finite support of size m with logits Phi * theta.
/// Phi defaults to the m x m identity (full parameterization); n < m columns
/// give an underparameterized manifold.
class TabularSoftmaxFamily final : public DistributionFamily {
 public:
  explicit TabularSoftmaxFamily(std::size_t support_size);
  explicit TabularSoftmaxFamily(Eigen::MatrixXd features);

  /// Random standard-normal m x n feature matrix.
  static TabularSoftmaxFamily random_features(std::size_t support_size,
                                              std::size_t param_dim, Rng& rng);

  FamilyKind kind() const override { return FamilyKind::kTabularSoftmax; }
  std::size_t param_dim() const override { return features_.cols(); }
  std::size_t hypothesis_dim() const override { return features_.rows(); }
  std::size_t support_size() const { return features_.rows(); }
  bool is_discrete() const override { return true; }

  const Eigen::MatrixXd& features() const { return features_; }

  double log_prob(const ParamVector& theta, const Hypothesis& h) const override;
  void score_into(const ParamVector& theta, const Hypothesis& h,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
  std::vector<Hypothesis> sample(const ParamVector& theta, Rng& rng,
                                 std::size_t count) const override;
  /// Phi^T (diag(rho) - rho rho^T) Phi.
  FisherMatrix analytic_fisher(const ParamVector& theta) const override;

  Eigen::VectorXd probabilities(const ParamVector& theta) const;
  /// m x n matrix whose row h is the score at hypothesis h.
  Eigen::MatrixXd score_table(const ParamVector& theta) const;

 private:
  Eigen::MatrixXd features_;
};

/// Scalar Gaussian with theta = (mu, log sigma).
class GaussianScalarFamily final : public DistributionFamily {
 public:
  FamilyKind kind() const override { return FamilyKind::kGaussianScalar; }
  std::size_t param_dim() const override { return 2; }
  std::size_t hypothesis_dim() const override { return 1; }
  bool is_discrete() const override { return false; }

  double log_prob(const ParamVector& theta, const Hypothesis& h) const override;
  void score_into(const ParamVector& theta, const Hypothesis& h,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
  std::vector<Hypothesis> sample(const ParamVector& theta, Rng& rng,
                                 std::size_t count) const override;
  /// diag(1 / sigma^2, 2).
  FisherMatrix analytic_fisher(const ParamVector& theta) const override;

  static ParamVector params(double mean, double stddev);
};

/// Axis-aligned Gaussian in d dimensions with
/// theta = (mu_1..mu_d, log sigma_1..log sigma_d).
class GaussianDiagonalFamily final : public DistributionFamily {
 public:
  explicit GaussianDiagonalFamily(std::size_t dim);

  FamilyKind kind() const override { return FamilyKind::kGaussianDiagonal; }
  std::size_t param_dim() const override { return 2 * dim_; }
  std::size_t hypothesis_dim() const override { return dim_; }
  bool is_discrete() const override { return false; }

  double log_prob(const ParamVector& theta, const Hypothesis& h) const override;
  void score_into(const ParamVector& theta, const Hypothesis& h,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
  std::vector<Hypothesis> sample(const ParamVector& theta, Rng& rng,
                                 std::size_t count) const override;
  FisherMatrix analytic_fisher(const ParamVector& theta) const override;

 private:
  std::size_t dim_;
};

/// Bivariate Gaussian with five degrees of freedom in Cholesky coordinates:
/// theta = (mu_1, mu_2, log l11, l21, log l22) and covariance L L^T, where
/// L = [[l11, 0], [l21, l22]]. The covariance is positive definite for every
/// finite theta and the map theta -> (mu, Sigma) is a diffeomorphism, so the
/// Fisher is never degenerate.
class Gaussian2DFamily final : public DistributionFamily {
 public:
  FamilyKind kind() const override { return FamilyKind::kGaussianFull2D; }
  std::size_t param_dim() const override { return 5; }
  std::size_t hypothesis_dim() const override { return 2; }
  bool is_discrete() const override { return false; }

  double log_prob(const ParamVector& theta, const Hypothesis& h) const override;
  void score_into(const ParamVector& theta, const Hypothesis& h,
                  Eigen::Ref<Eigen::VectorXd> out) const override;
  std::vector<Hypothesis> sample(const ParamVector& theta, Rng& rng,
                                 std::size_t count) const override;
  /// Mean block Sigma^-1; covariance block 0.5 tr(Sigma^-1 dSigma_a Sigma^-1 dSigma_b);
  /// the cross block vanishes.
  FisherMatrix analytic_fisher(const ParamVector& theta) const override;

  static Eigen::Vector2d mean(const ParamVector& theta);
  static Eigen::Matrix2d cholesky(const ParamVector& theta);
  static Eigen::Matrix2d covariance(const ParamVector& theta);
  /// d Sigma / d theta_{2+k} for k = 0, 1, 2.
  static Eigen::Matrix2d covariance_derivative(const ParamVector& theta, int k);
  /// Encodes (mu, Sigma) with Sigma symmetric positive definite.
  static ParamVector params(const Eigen::Vector2d& mean, const Eigen::Matrix2d& covariance);
};

/// Builds a family from its kind tag. `dim` is the support size (tabular),
/// the dimension (diagonal) and is ignored otherwise.
std::unique_ptr<DistributionFamily> make_family(FamilyKind kind, std::size_t dim = 0);

std::optional<FamilyKind> parse_family_kind(std::string_view name);

}  // namespace natsel

#endif  // NATSEL_FAMILIES_HPP_
