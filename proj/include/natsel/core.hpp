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

#ifndef NATSEL_CORE_HPP_
#define NATSEL_CORE_HPP_

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Dense>

namespace natsel {

/// Parameter vector theta of a distribution family.
using ParamVector = Eigen::VectorXd;

/// Symmetric positive semi-definite n x n Fisher information matrix.
using FisherMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}
inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;

/// Raised for dimension mismatches, out-of-range indices and violated
/// preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A loss oracle or update produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters left the region where the Euler discretization is trusted.
class DivergenceError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

/// Bayes update with zero total evidence.
class UndefinedPosterior : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A point in hypothesis space: either an index into a finite support or a
/// real vector.
class Hypothesis {
 public:
  static Hypothesis discrete(std::size_t index) { return Hypothesis(index); }
  static Hypothesis continuous(Eigen::VectorXd point) {
    return Hypothesis(std::move(point));
  }
  static Hypothesis scalar(double x) {
    return Hypothesis(Eigen::VectorXd::Constant(1, x));
  }

  bool is_discrete() const { return value_.index() == 0; }

  std::size_t index() const {
    if (!is_discrete()) throw InvalidArgument("hypothesis is continuous");
    return std::get<0>(value_);
  }
  const Eigen::VectorXd& point() const {
    if (is_discrete()) throw InvalidArgument("hypothesis is discrete");
    return std::get<1>(value_);
  }
  /// First coordinate of a continuous hypothesis.
  double value() const { return point()(0); }

  std::string to_string() const;

 private:
  explicit Hypothesis(std::size_t index) : value_(index) {}
  explicit Hypothesis(Eigen::VectorXd point) : value_(std::move(point)) {}

  std::variant<std::size_t, Eigen::VectorXd> value_;
};

/// Seeded generator. Child streams are derived with SplitMix64 so that a
/// single user seed fans out into independent, reproducible streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent generator for stream `key`; does not advance this one.
  Rng split(std::uint64_t key) const {
    return Rng(mix(seed_ ^ mix(key + 0x9e3779b97f4a7c15ULL)));
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double exponential(double mean) {
    return std::exponential_distribution<double>(1.0 / mean)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.array().isFinite().all();
}

}  // namespace natsel

#endif  // NATSEL_CORE_HPP_
