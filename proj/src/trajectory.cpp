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

#include "natsel/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace natsel {

LossStatistics LossStatistics::of(std::span<const double> losses) {
  LossStatistics s;
  if (losses.empty()) return s;
  double sum = 0.0;
  for (double v : losses) sum += v;
  s.mean = sum / static_cast<double>(losses.size());
  double sq = 0.0;
  for (double v : losses) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(losses.size()));
  const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

void Trajectory::append(StepRecord record) {
  if (record.step != records_.size()) {
    throw InvalidArgument("step " + std::to_string(record.step) + " appended after " +
                          std::to_string(records_.size()) + " records");
  }
  if (record.extras.size() != extra_columns_.size()) {
    throw InvalidArgument("record carries " + std::to_string(record.extras.size()) +
                          " extra values, trajectory declares " +
                          std::to_string(extra_columns_.size()));
  }
  records_.push_back(std::move(record));
}

std::optional<double> Trajectory::config_value(const std::string& key) const {
  for (const auto& [k, v] : config_) {
    if (k == key) {
      try {
        return std::stod(v);
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

}  // namespace natsel
