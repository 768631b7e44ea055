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

#ifndef NATSEL_TRAJECTORY_HPP_
#define NATSEL_TRAJECTORY_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "natsel/core.hpp"

namespace natsel {

/// Mean, population standard deviation and extremes of sampled losses.
struct LossStatistics {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;

  static LossStatistics of(std::span<const double> losses);
};

struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  /// Parameters at which this step's samples were drawn.
  ParamVector theta;
  LossStatistics losses;
  double thetadot_norm = 0.0;
  /// Values for Trajectory::extra_columns(), in order.
  std::vector<double> extras;
};

/// Ordered key/value description of the run that produced a trajectory.
using ConfigSnapshot = std::vector<std::pair<std::string, std::string>>;

/// Time-indexed record of an FR-NGD run. The config snapshot is fixed at
/// construction; step indices are contiguous from zero.
class Trajectory {
 public:
  Trajectory(std::uint64_t seed, ConfigSnapshot config, std::vector<std::string> extra_columns = {})
      : seed_(seed), config_(std::move(config)), extra_columns_(std::move(extra_columns)) {}

  std::uint64_t seed() const { return seed_; }
  const ConfigSnapshot& config() const { return config_; }
  const std::vector<std::string>& extra_columns() const { return extra_columns_; }
  const std::vector<StepRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const StepRecord& operator[](std::size_t i) const { return records_.at(i); }
  const StepRecord& back() const { return records_.back(); }

  /// Throws InvalidArgument if `record.step` is not the next index or the
  /// extras do not match the declared columns.
  void append(StepRecord record);

  /// Parameters after the last update.
  const ParamVector& final_theta() const { return final_theta_; }
  void set_final_theta(ParamVector theta) { final_theta_ = std::move(theta); }

  /// Set when the run stopped early; the records up to that point are kept.
  const std::optional<std::string>& abort_reason() const { return abort_reason_; }
  void set_abort_reason(std::string reason) { abort_reason_ = std::move(reason); }

  std::optional<double> config_value(const std::string& key) const;

 private:
  std::uint64_t seed_;
  ConfigSnapshot config_;
  std::vector<std::string> extra_columns_;
  std::vector<StepRecord> records_;
  ParamVector final_theta_;
  std::optional<std::string> abort_reason_;
};

}  // namespace natsel

#endif  // NATSEL_TRAJECTORY_HPP_
