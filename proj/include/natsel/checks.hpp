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

// Named property checks run by `natsel verify`. Every check is
// deterministic for a given seed and shares no state with the others.

#ifndef NATSEL_CHECKS_HPP_
#define NATSEL_CHECKS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace natsel::checks {

struct Options {
  /// Random unit directions per configuration in cns-minimality.
  std::size_t perturbations = 100;
  std::uint64_t seed = 20240611;
};

struct Result {
  bool passed = false;
  /// Worst observed value of the quantity compared against `tolerance`.
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Check {
  std::string name;
  std::string summary;
  std::function<Result(const Options&)> run;
};

/// Checks in their canonical order.
const std::vector<Check>& registry();
/// nullptr for unknown names.
const Check* find(std::string_view name);

Result cns_minimality(const Options& options);
Result deviation_oracle(const Options& options);
Result replicator_identities(const Options& options);
Result bayes_equivalence(const Options& options);
Result kl_gradient_equivalence(const Options& options);
Result price_equation(const Options& options);
Result fisher_consistency(const Options& options);
Result full_parameterization(const Options& options);
Result kernel_equivalence(const Options& options);

}  // namespace natsel::checks

#endif  // NATSEL_CHECKS_HPP_
