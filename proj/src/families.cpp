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

#include "natsel/families.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace natsel {

std::string Hypothesis::to_string() const {
  std::ostringstream os;
  if (is_discrete()) {
    os << "#" << index();
  } else {
    os << "(";
    const auto& p = point();
    for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p(i);
    os << ")";
  }
  return os.str();
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kTabularSoftmax: return "tabular-softmax";
    case FamilyKind::kGaussianFull2D: return "gaussian-full-2d";
    case FamilyKind::kGaussianDiagonal: return "gaussian-diagonal";
    case FamilyKind::kGaussianScalar: return "gaussian-scalar";
  }
  return "unknown";
}

std::optional<FamilyKind> parse_family_kind(std::string_view name) {
  for (auto k : {FamilyKind::kTabularSoftmax, FamilyKind::kGaussianFull2D,
                 FamilyKind::kGaussianDiagonal, FamilyKind::kGaussianScalar}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

ParamVector DistributionFamily::score(const ParamVector& theta, const Hypothesis& h) const {
  ParamVector out(param_dim());
  score_into(theta, h, out);
  return out;
}

void DistributionFamily::check_params(const ParamVector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != param_dim()) {
    throw InvalidArgument("parameter vector has length " + std::to_string(theta.size()) +
                          ", family expects " + std::to_string(param_dim()));
  }
  if (!all_finite(theta)) throw InvalidArgument("parameter vector has non-finite entries");
}

void DistributionFamily::check_hypothesis(const Hypothesis& h) const {
  if (is_discrete()) {
    if (!h.is_discrete() || h.index() >= hypothesis_dim()) {
      throw InvalidArgument("hypothesis " + h.to_string() + " outside support of size " +
                            std::to_string(hypothesis_dim()));
    }
  } else if (h.is_discrete() ||
             static_cast<std::size_t>(h.point().size()) != hypothesis_dim()) {
    throw InvalidArgument("hypothesis " + h.to_string() + " does not have dimension " +
                          std::to_string(hypothesis_dim()));
  }
}

// ---------------------------------------------------------------------------
// Tabular softmax

TabularSoftmaxFamily::TabularSoftmaxFamily(std::size_t support_size)
    : TabularSoftmaxFamily(Eigen::MatrixXd::Identity(support_size, support_size)) {}

TabularSoftmaxFamily::TabularSoftmaxFamily(Eigen::MatrixXd features)
    : features_(std::move(features)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw InvalidArgument("feature matrix must be non-empty");
  }
  if (!all_finite(features_)) throw InvalidArgument("feature matrix has non-finite entries");
}

TabularSoftmaxFamily TabularSoftmaxFamily::random_features(std::size_t support_size,
                                                           std::size_t param_dim, Rng& rng) {
  Eigen::MatrixXd phi(support_size, param_dim);
  for (Eigen::Index j = 0; j < phi.cols(); ++j)
    for (Eigen::Index i = 0; i < phi.rows(); ++i) phi(i, j) = rng.normal();
  return TabularSoftmaxFamily(std::move(phi));
}

Eigen::VectorXd TabularSoftmaxFamily::probabilities(const ParamVector& theta) const {
  check_params(theta);
  const Eigen::VectorXd logits = features_ * theta;
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

double TabularSoftmaxFamily::log_prob(const ParamVector& theta, const Hypothesis& h) const {
  check_params(theta);
  check_hypothesis(h);
  const Eigen::VectorXd logits = features_ * theta;
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits(h.index()) - lse;
}

void TabularSoftmaxFamily::score_into(const ParamVector& theta, const Hypothesis& h,
                                      Eigen::Ref<Eigen::VectorXd> out) const {
  check_hypothesis(h);
  const Eigen::VectorXd rho = probabilities(theta);
  // Phi^T (e_h - rho)
  out = features_.row(h.index()).transpose() - features_.transpose() * rho;
}

Eigen::MatrixXd TabularSoftmaxFamily::score_table(const ParamVector& theta) const {
  const Eigen::VectorXd rho = probabilities(theta);
  const Eigen::RowVectorXd centre = (features_.transpose() * rho).transpose();
  return features_.rowwise() - centre;
}

std::vector<Hypothesis> TabularSoftmaxFamily::sample(const ParamVector& theta, Rng& rng,
                                                     std::size_t count) const {
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  const Eigen::VectorXd rho = probabilities(theta);
  std::discrete_distribution<std::size_t> pick(rho.data(), rho.data() + rho.size());
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(Hypothesis::discrete(pick(rng.engine())));
  return out;
}

FisherMatrix TabularSoftmaxFamily::analytic_fisher(const ParamVector& theta) const {
  const Eigen::VectorXd rho = probabilities(theta);
  Eigen::MatrixXd centred = rho.asDiagonal();
  centred -= rho * rho.transpose();
  FisherMatrix f = features_.transpose() * centred * features_;
  return 0.5 * (f + f.transpose());
}

// ---------------------------------------------------------------------------
// Scalar Gaussian

ParamVector GaussianScalarFamily::params(double mean, double stddev) {
  if (!(stddev > 0.0)) throw InvalidArgument("standard deviation must be positive");
  return ParamVector{{mean, std::log(stddev)}};
}

double GaussianScalarFamily::log_prob(const ParamVector& theta, const Hypothesis& h) const {
  check_params(theta);
  check_hypothesis(h);
  const double z = (h.value() - theta(0)) * std::exp(-theta(1));
  return -theta(1) - kHalfLogTwoPi - 0.5 * z * z;
}

void GaussianScalarFamily::score_into(const ParamVector& theta, const Hypothesis& h,
                                      Eigen::Ref<Eigen::VectorXd> out) const {
  check_params(theta);
  check_hypothesis(h);
  const double inv_sigma = std::exp(-theta(1));
  const double z = (h.value() - theta(0)) * inv_sigma;
  out(0) = z * inv_sigma;
  out(1) = z * z - 1.0;
}

std::vector<Hypothesis> GaussianScalarFamily::sample(const ParamVector& theta, Rng& rng,
                                                     std::size_t count) const {
  check_params(theta);
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  const double sigma = std::exp(theta(1));
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(Hypothesis::scalar(theta(0) + sigma * rng.normal()));
  return out;
}

FisherMatrix GaussianScalarFamily::analytic_fisher(const ParamVector& theta) const {
  check_params(theta);
  FisherMatrix f = FisherMatrix::Zero(2, 2);
  f(0, 0) = std::exp(-2.0 * theta(1));
  f(1, 1) = 2.0;
  return f;
}

// ---------------------------------------------------------------------------
// Diagonal Gaussian

GaussianDiagonalFamily::GaussianDiagonalFamily(std::size_t dim) : dim_(dim) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
}

double GaussianDiagonalFamily::log_prob(const ParamVector& theta, const Hypothesis& h) const {
  check_params(theta);
  check_hypothesis(h);
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::ArrayXd log_sigma = theta.tail(d).array();
  const Eigen::ArrayXd z = (h.point().array() - theta.head(d).array()) * (-log_sigma).exp();
  return -log_sigma.sum() - static_cast<double>(dim_) * kHalfLogTwoPi - 0.5 * z.square().sum();
}

void GaussianDiagonalFamily::score_into(const ParamVector& theta, const Hypothesis& h,
                                        Eigen::Ref<Eigen::VectorXd> out) const {
  check_params(theta);
  check_hypothesis(h);
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::ArrayXd inv_sigma = (-theta.tail(d).array()).exp();
  const Eigen::ArrayXd z = (h.point().array() - theta.head(d).array()) * inv_sigma;
  out.head(d) = (z * inv_sigma).matrix();
  out.tail(d) = (z.square() - 1.0).matrix();
}

std::vector<Hypothesis> GaussianDiagonalFamily::sample(const ParamVector& theta, Rng& rng,
                                                       std::size_t count) const {
  check_params(theta);
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  const auto d = static_cast<Eigen::Index>(dim_);
  const Eigen::VectorXd sigma = theta.tail(d).array().exp();
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = theta(i) + sigma(i) * rng.normal();
    out.push_back(Hypothesis::continuous(std::move(x)));
  }
  return out;
}

FisherMatrix GaussianDiagonalFamily::analytic_fisher(const ParamVector& theta) const {
  check_params(theta);
  const auto d = static_cast<Eigen::Index>(dim_);
  Eigen::VectorXd diag(2 * d);
  diag.head(d) = (-2.0 * theta.tail(d).array()).exp();
  diag.tail(d).setConstant(2.0);
  return diag.asDiagonal();
}

// ---------------------------------------------------------------------------
// Full bivariate Gaussian, Cholesky coordinates

Eigen::Vector2d Gaussian2DFamily::mean(const ParamVector& theta) { return theta.head<2>(); }

Eigen::Matrix2d Gaussian2DFamily::cholesky(const ParamVector& theta) {
  Eigen::Matrix2d l;
  l << std::exp(theta(2)), 0.0, theta(3), std::exp(theta(4));
  return l;
}

Eigen::Matrix2d Gaussian2DFamily::covariance(const ParamVector& theta) {
  const Eigen::Matrix2d l = cholesky(theta);
  return l * l.transpose();
}

Eigen::Matrix2d Gaussian2DFamily::covariance_derivative(const ParamVector& theta, int k) {
  const Eigen::Matrix2d l = cholesky(theta);
  Eigen::Matrix2d dl = Eigen::Matrix2d::Zero();
  switch (k) {
    case 0: dl(0, 0) = l(0, 0); break;
    case 1: dl(1, 0) = 1.0; break;
    case 2: dl(1, 1) = l(1, 1); break;
    default: throw InvalidArgument("covariance parameter index out of range");
  }
  return dl * l.transpose() + l * dl.transpose();
}

ParamVector Gaussian2DFamily::params(const Eigen::Vector2d& mu, const Eigen::Matrix2d& cov) {
  Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("covariance is not positive definite");
  const Eigen::Matrix2d l = llt.matrixL();
  return ParamVector{{mu(0), mu(1), std::log(l(0, 0)), l(1, 0), std::log(l(1, 1))}};
}

double Gaussian2DFamily::log_prob(const ParamVector& theta, const Hypothesis& h) const {
  check_params(theta);
  check_hypothesis(h);
  const double l11 = std::exp(theta(2));
  const double l22 = std::exp(theta(4));
  const double z1 = (h.point()(0) - theta(0)) / l11;
  const double z2 = (h.point()(1) - theta(1) - theta(3) * z1) / l22;
  return -2.0 * kHalfLogTwoPi - theta(2) - theta(4) - 0.5 * (z1 * z1 + z2 * z2);
}

void Gaussian2DFamily::score_into(const ParamVector& theta, const Hypothesis& h,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
  check_params(theta);
  check_hypothesis(h);
  const double l11 = std::exp(theta(2));
  const double l21 = theta(3);
  const double l22 = std::exp(theta(4));
  // z = L^-1 (h - mu)
  const double z1 = (h.point()(0) - theta(0)) / l11;
  const double z2 = (h.point()(1) - theta(1) - l21 * z1) / l22;
  // grad_mu = L^-T z
  const double w2 = z2 / l22;
  out(0) = (z1 - l21 * w2) / l11;
  out(1) = w2;
  out(2) = -1.0 + z1 * z1 - l21 * z1 * w2;
  out(3) = z1 * w2;
  out(4) = -1.0 + z2 * z2;
}

std::vector<Hypothesis> Gaussian2DFamily::sample(const ParamVector& theta, Rng& rng,
                                                 std::size_t count) const {
  check_params(theta);
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  const Eigen::Matrix2d l = cholesky(theta);
  const Eigen::Vector2d mu = mean(theta);
  std::vector<Hypothesis> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double e1 = rng.normal();
    const double e2 = rng.normal();
    Eigen::VectorXd x(2);
    x(0) = mu(0) + l(0, 0) * e1;
    x(1) = mu(1) + l(1, 0) * e1 + l(1, 1) * e2;
    out.push_back(Hypothesis::continuous(std::move(x)));
  }
  return out;
}

FisherMatrix Gaussian2DFamily::analytic_fisher(const ParamVector& theta) const {
  check_params(theta);
  const Eigen::Matrix2d cov_inv = covariance(theta).inverse();
  FisherMatrix f = FisherMatrix::Zero(5, 5);
  f.topLeftCorner<2, 2>() = cov_inv;
  Eigen::Matrix2d a[3];
  for (int k = 0; k < 3; ++k) a[k] = cov_inv * covariance_derivative(theta, k);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      f(2 + i, 2 + j) = f(2 + j, 2 + i) = 0.5 * (a[i] * a[j]).trace();
    }
  }
  return f;
}

std::unique_ptr<DistributionFamily> make_family(FamilyKind kind, std::size_t dim) {
  switch (kind) {
    case FamilyKind::kTabularSoftmax: return std::make_unique<TabularSoftmaxFamily>(dim);
    case FamilyKind::kGaussianFull2D: return std::make_unique<Gaussian2DFamily>();
    case FamilyKind::kGaussianDiagonal: return std::make_unique<GaussianDiagonalFamily>(dim);
    case FamilyKind::kGaussianScalar: return std::make_unique<GaussianScalarFamily>();
  }
  throw InvalidArgument("unknown family kind");
}

}  // namespace natsel
