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

#include "natsel/quadrature.hpp"

#include <cmath>

#include "natsel/core.hpp"

namespace natsel {

NormalQuadrature::NormalQuadrature(std::size_t size) {
  if (size < 1) throw InvalidArgument("quadrature needs at least one node");
  const auto n = static_cast<Eigen::Index>(size);
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes = eig.eigenvalues();
  weights = eig.eigenvectors().row(0).transpose().array().square();
  weights /= weights.sum();
}

}  // namespace natsel
