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

#ifndef NATSEL_QUADRATURE_HPP_
#define NATSEL_QUADRATURE_HPP_

#include <cstddef>

#include <Eigen/Dense>

namespace natsel {

/// Gauss-Hermite rule for expectations under the standard normal:
/// E[f(Z)] ~= sum_i weights(i) f(nodes(i)), exact for polynomials of degree
/// below 2 * size. Built with the Golub-Welsch eigenvalue method.
struct NormalQuadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit NormalQuadrature(std::size_t size);

  template <typename F>
  double expect(double mean, double stddev, F&& f) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) total += weights(i) * f(mean + stddev * nodes(i));
    return total;
  }
};

}  // namespace natsel

#endif  // NATSEL_QUADRATURE_HPP_
