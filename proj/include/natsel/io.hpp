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

// CSV and JSON export of trajectories and observation lists.

#ifndef NATSEL_IO_HPP_
#define NATSEL_IO_HPP_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "natsel/bayes.hpp"
#include "natsel/trajectory.hpp"

namespace natsel::io {

enum class Format { kCsv, kJson };

/// "csv" or "json"; throws InvalidArgument otherwise.
Format parse_format(std::string_view name);
/// JSON for a ".json" extension (case-insensitive), CSV otherwise.
Format format_for_path(std::string_view path);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);
/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view text);
/// Splits one CSV record, honouring quoted fields.
std::vector<std::string> split_csv_record(std::string_view line);

/// Column layout of an exported trajectory.
enum class Layout {
  /// step, time, theta_0..theta_{n-1}, loss_mean, loss_std, loss_min,
  /// loss_max, thetadot_norm
  kOptimize,
  /// step, t, post_mean, post_std, true_log_sigma
  kInference,
};

std::vector<std::string> columns(const Trajectory& traj, Layout layout);

void write_csv(std::ostream& out, const Trajectory& traj, Layout layout);
/// One JSON document: seed, config snapshot, column names, rows, final
/// parameters and abort reason (null when the run completed).
void write_json(std::ostream& out, const Trajectory& traj, Layout layout);
void write(std::ostream& out, const Trajectory& traj, Layout layout, Format format);

/// Columns t, dt, dW, x.
void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations);
/// Throws InvalidArgument on a malformed header or row.
std::vector<Observation> read_observations_csv(std::istream& in);

}  // namespace natsel::io

#endif  // NATSEL_IO_HPP_
