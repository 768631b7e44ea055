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

// Data-parallel reductions over sampled hypotheses.
//
// `serial` holds the straightforward reference loops. `parallel` holds the
// OpenMP versions used by the engine. The parallel kernels reduce over
// fixed-size blocks and combine block partials in block order, so their
// output depends only on the inputs and never on the thread count. For
// inputs no larger than one block they are bit-identical to `serial`.

#ifndef NATSEL_KERNELS_HPP_
#define NATSEL_KERNELS_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "natsel/core.hpp"
#include "natsel/families.hpp"

namespace natsel {

/// Loss L: H -> R, possibly stochastic or time-indexed.
struct LossOracle {
  std::function<double(const Hypothesis&)> evaluate;
  /// Evaluations may run concurrently. Off by default: evaluation then
  /// happens sequentially in sample order.
  bool concurrency_safe = false;
  /// Noise, if any, is zero-mean. Recorded for reporting only.
  bool unbiased = true;
  std::string name = "loss";

  double operator()(const Hypothesis& h) const { return evaluate(h); }
};

namespace kernels {

inline constexpr std::size_t kBlockSize = 2048;

namespace serial {

/// sum_k weights[k] * s(theta; samples[k]).
Eigen::VectorXd weighted_score_sum(const DistributionFamily& family, const ParamVector& theta,
                                   std::span<const Hypothesis> samples,
                                   std::span<const double> weights);

/// sum_k weights[k] * s_k s_k^T; unit weights when `weights` is empty.
Eigen::MatrixXd score_outer_sum(const DistributionFamily& family, const ParamVector& theta,
                                std::span<const Hypothesis> samples,
                                std::span<const double> weights = {});

/// L(samples[k]) for every k. Throws EvaluationError on a non-finite loss.
std::vector<double> evaluate_losses(const LossOracle& loss, std::span<const Hypothesis> samples);

}  // namespace serial

namespace parallel {

Eigen::VectorXd weighted_score_sum(const DistributionFamily& family, const ParamVector& theta,
                                   std::span<const Hypothesis> samples,
                                   std::span<const double> weights);

Eigen::MatrixXd score_outer_sum(const DistributionFamily& family, const ParamVector& theta,
                                std::span<const Hypothesis> samples,
                                std::span<const double> weights = {});

/// Runs concurrently only when `loss.concurrency_safe`.
std::vector<double> evaluate_losses(const LossOracle& loss, std::span<const Hypothesis> samples);

}  // namespace parallel

/// Threads OpenMP would use; 1 when built without OpenMP.
int max_threads();
void set_threads(int n);

}  // namespace kernels
}  // namespace natsel

#endif  // NATSEL_KERNELS_HPP_
