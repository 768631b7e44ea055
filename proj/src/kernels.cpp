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

#include "natsel/kernels.hpp"

#include <cmath>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace natsel::kernels {
namespace {

void check_weights(std::span<const Hypothesis> samples, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != samples.size()) {
    throw InvalidArgument("weights and samples differ in length");
  }
}

double checked_loss(const LossOracle& loss, const Hypothesis& h) {
  const double value = loss(h);
  if (!std::isfinite(value)) {
    throw EvaluationError("loss '" + loss.name + "' is non-finite (" + std::to_string(value) +
                          ") at hypothesis " + h.to_string());
  }
  return value;
}

std::size_t block_count(std::size_t n) { return (n + kBlockSize - 1) / kBlockSize; }

// Runs body(block) over all blocks, rethrowing the first exception by block
// order once the parallel region has finished.
template <typename Body>
void for_each_block(std::size_t n, Body&& body) {
  const auto blocks = static_cast<std::ptrdiff_t>(block_count(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    try {
      body(static_cast<std::size_t>(b));
    } catch (...) {
      errors[static_cast<std::size_t>(b)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

namespace serial {

Eigen::VectorXd weighted_score_sum(const DistributionFamily& family, const ParamVector& theta,
                                   std::span<const Hypothesis> samples,
                                   std::span<const double> weights) {
  check_weights(samples, weights);
  const auto n = static_cast<Eigen::Index>(family.param_dim());
  Eigen::VectorXd total = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s(n);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    family.score_into(theta, samples[k], s);
    total += (weights.empty() ? 1.0 : weights[k]) * s;
  }
  return total;
}

Eigen::MatrixXd score_outer_sum(const DistributionFamily& family, const ParamVector& theta,
                                std::span<const Hypothesis> samples,
                                std::span<const double> weights) {
  check_weights(samples, weights);
  const auto n = static_cast<Eigen::Index>(family.param_dim());
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd s(n);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    family.score_into(theta, samples[k], s);
    total.noalias() += (weights.empty() ? 1.0 : weights[k]) * s * s.transpose();
  }
  return total;
}

std::vector<double> evaluate_losses(const LossOracle& loss, std::span<const Hypothesis> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& h : samples) out.push_back(checked_loss(loss, h));
  return out;
}

}  // namespace serial

namespace parallel {

Eigen::VectorXd weighted_score_sum(const DistributionFamily& family, const ParamVector& theta,
                                   std::span<const Hypothesis> samples,
                                   std::span<const double> weights) {
  check_weights(samples, weights);
  const std::size_t blocks = block_count(samples.size());
  if (blocks <= 1) return serial::weighted_score_sum(family, theta, samples, weights);
  std::vector<Eigen::VectorXd> partial(blocks);
  for_each_block(samples.size(), [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    const std::size_t len = std::min(kBlockSize, samples.size() - begin);
    partial[b] = serial::weighted_score_sum(
        family, theta, samples.subspan(begin, len),
        weights.empty() ? weights : weights.subspan(begin, len));
  });
  Eigen::VectorXd total = partial[0];
  for (std::size_t b = 1; b < blocks; ++b) total += partial[b];
  return total;
}

Eigen::MatrixXd score_outer_sum(const DistributionFamily& family, const ParamVector& theta,
                                std::span<const Hypothesis> samples,
                                std::span<const double> weights) {
  check_weights(samples, weights);
  const std::size_t blocks = block_count(samples.size());
  if (blocks <= 1) return serial::score_outer_sum(family, theta, samples, weights);
  std::vector<Eigen::MatrixXd> partial(blocks);
  for_each_block(samples.size(), [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    const std::size_t len = std::min(kBlockSize, samples.size() - begin);
    partial[b] = serial::score_outer_sum(family, theta, samples.subspan(begin, len),
                                         weights.empty() ? weights : weights.subspan(begin, len));
  });
  Eigen::MatrixXd total = partial[0];
  for (std::size_t b = 1; b < blocks; ++b) total += partial[b];
  return total;
}

std::vector<double> evaluate_losses(const LossOracle& loss, std::span<const Hypothesis> samples) {
  if (!loss.concurrency_safe) return serial::evaluate_losses(loss, samples);
  std::vector<double> out(samples.size());
  for_each_block(samples.size(), [&](std::size_t b) {
    const std::size_t begin = b * kBlockSize;
    const std::size_t end = std::min(samples.size(), begin + kBlockSize);
    for (std::size_t k = begin; k < end; ++k) out[k] = checked_loss(loss, samples[k]);
  });
  return out;
}

}  // namespace parallel

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace natsel::kernels
