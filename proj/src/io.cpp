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

#include "natsel/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace natsel::io {

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw InvalidArgument("unknown output format '" + std::string(name) + "'");
}

Format format_for_path(std::string_view path) {
  if (path.size() < 5) return Format::kCsv;
  std::string ext(path.substr(path.size() - 5));
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".json" ? Format::kJson : Format::kCsv;
}

std::string format_double(double value) { return natsel::format_double(value); }

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw InvalidArgument("unterminated quoted CSV field");
  return fields;
}

std::vector<std::string> columns(const Trajectory& traj, Layout layout) {
  if (layout == Layout::kInference) return {"step", "t", "post_mean", "post_std", "true_log_sigma"};
  std::vector<std::string> cols = {"step", "time"};
  const Eigen::Index dim = traj.empty() ? traj.final_theta().size() : traj[0].theta.size();
  for (Eigen::Index i = 0; i < dim; ++i) cols.push_back("theta_" + std::to_string(i));
  for (const char* c : {"loss_mean", "loss_std", "loss_min", "loss_max", "thetadot_norm"})
    cols.emplace_back(c);
  return cols;
}

namespace {

std::size_t extra_index(const Trajectory& traj, std::string_view name) {
  const auto& cols = traj.extra_columns();
  const auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end())
    throw InvalidArgument("trajectory has no '" + std::string(name) + "' column");
  return static_cast<std::size_t>(it - cols.begin());
}

// Numeric row values for one record; the step index is kept separate so it
// prints as an integer.
std::vector<double> row_values(const Trajectory& traj, const StepRecord& r, Layout layout) {
  if (layout == Layout::kInference) {
    return {r.time, r.extras[extra_index(traj, "post_mean")],
            r.extras[extra_index(traj, "post_std")],
            r.extras[extra_index(traj, "true_log_sigma")]};
  }
  std::vector<double> v = {r.time};
  v.insert(v.end(), r.theta.data(), r.theta.data() + r.theta.size());
  v.insert(v.end(), {r.losses.mean, r.losses.stddev, r.losses.min, r.losses.max, r.thetadot_norm});
  return v;
}

nlohmann::ordered_json json_number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void write_csv(std::ostream& out, const Trajectory& traj, Layout layout) {
  const auto cols = columns(traj, layout);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(cols[i]);
  out << '\n';
  for (const StepRecord& r : traj.records()) {
    out << r.step;
    for (double v : row_values(traj, r, layout)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_json(std::ostream& out, const Trajectory& traj, Layout layout) {
  nlohmann::ordered_json doc;
  doc["seed"] = traj.seed();
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : traj.config()) config[key] = value;
  doc["config"] = std::move(config);
  doc["columns"] = columns(traj, layout);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const StepRecord& r : traj.records()) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    row.push_back(r.step);
    for (double v : row_values(traj, r, layout)) row.push_back(json_number(v));
    rows.push_back(std::move(row));
  }
  doc["rows"] = std::move(rows);
  nlohmann::ordered_json final_theta = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < traj.final_theta().size(); ++i)
    final_theta.push_back(json_number(traj.final_theta()(i)));
  doc["final_theta"] = std::move(final_theta);
  doc["abort_reason"] = traj.abort_reason() ? nlohmann::ordered_json(*traj.abort_reason())
                                            : nlohmann::ordered_json(nullptr);
  out << doc.dump() << '\n';
}

void write(std::ostream& out, const Trajectory& traj, Layout layout, Format format) {
  if (format == Format::kJson) {
    write_json(out, traj, layout);
  } else {
    write_csv(out, traj, layout);
  }
}

void write_observations_csv(std::ostream& out, const std::vector<Observation>& observations) {
  out << "t,dt,dW,x\n";
  for (const Observation& o : observations) {
    out << format_double(o.t) << ',' << format_double(o.dt) << ',' << format_double(o.dw) << ','
        << format_double(o.x) << '\n';
  }
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw InvalidArgument("line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

}  // namespace

std::vector<Observation> read_observations_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("observation file is empty");
  const auto header = split_csv_record(line);
  if (header != std::vector<std::string>{"t", "dt", "dW", "x"})
    throw InvalidArgument("observation header must be t,dt,dW,x");
  std::vector<Observation> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_record(line);
    if (f.size() != 4)
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected 4 fields");
    out.push_back({parse_double(f[0], line_no), parse_double(f[1], line_no),
                   parse_double(f[2], line_no), parse_double(f[3], line_no)});
  }
  return out;
}

}  // namespace natsel::io
