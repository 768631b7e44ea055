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

// natsel: run FR-NGD experiments, export trajectories, run property checks.
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "natsel/bench.hpp"
#include "natsel/checks.hpp"
#include "natsel/io.hpp"

namespace {

using namespace natsel;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct OutputFlags {
  std::string path;
  std::string format;
};

struct OptimizeArgs {
  std::string problem = "rastrigin";
  std::size_t steps = 100;
  double learning_rate = 1e-3;
  std::size_t samples = 40;
  std::uint64_t seed = 0;
  std::string fisher = "analytic";
  std::string baseline = "on";
  double pinv_threshold = 1e-10;
  OutputFlags out;
};

struct InferArgs {
  double learning_rate = 1e-2;
  std::size_t samples = 40;
  std::uint64_t seed = 0;
  std::string baseline = "on";
  double pinv_threshold = 1e-10;
  std::size_t observations = 2000;
  double horizon = 1.0;
  double sigma_before = 0.5;
  double sigma_after = 2.0;
  std::string observations_in;
  std::string observations_out;
  OutputFlags out;
};

struct VerifyArgs {
  std::vector<std::string> only;
  std::size_t perturbations = 100;
  std::uint64_t seed = checks::Options{}.seed;
  bool list = false;
};

// Raised for argument combinations CLI11 cannot reject on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::map<std::string, bool> kOnOff = {{"on", true}, {"off", false}};

void add_output_flags(CLI::App* cmd, OutputFlags& out) {
  cmd->add_option("--out,-o", out.path, "Output file (default: standard output)");
  cmd->add_option("--format", out.format, "Output format (default: from extension, else csv)")
      ->check(CLI::IsMember({"csv", "json"}));
}

io::Format resolve_format(const OutputFlags& out) {
  if (!out.format.empty()) return io::parse_format(out.format);
  return out.path.empty() ? io::Format::kCsv : io::format_for_path(out.path);
}

// Writes the trajectory and returns the stream summary lines should go to.
std::ostream& emit(const Trajectory& traj, io::Layout layout, const OutputFlags& out) {
  const io::Format format = resolve_format(out);
  if (out.path.empty()) {
    io::write(std::cout, traj, layout, format);
    std::cout.flush();
    return std::cerr;
  }
  std::ofstream file(out.path);
  if (!file) throw EvaluationError("cannot open '" + out.path + "' for writing");
  io::write(file, traj, layout, format);
  if (!file) throw EvaluationError("failed writing '" + out.path + "'");
  return std::cout;
}

int cmd_optimize(const OptimizeArgs& a) {
  OptimizeOptions opts;
  opts.problem = a.problem;
  opts.steps = a.steps;
  opts.step.learning_rate = a.learning_rate;
  opts.step.mc_samples = a.samples;
  opts.step.fisher_mode = a.fisher == "empirical" ? FisherMode::kEmpirical : FisherMode::kAnalytic;
  opts.step.baseline = kOnOff.at(a.baseline);
  opts.step.pinv_threshold = a.pinv_threshold;
  try {
    opts.step.validate();
    make_problem(opts.problem);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const Trajectory traj = optimize_experiment(a.seed, opts);
  std::ostream& log = emit(traj, io::Layout::kOptimize, a.out);
  if (traj.abort_reason()) {
    std::cerr << "natsel optimize: run aborted after " << traj.size()
              << " steps: " << *traj.abort_reason() << '\n';
    return kFailure;
  }
  const Gaussian2DFamily family;
  Rng eval_rng = Rng(a.seed).split(0xe7a1);
  const LossStatistics final_stats = sample_loss_statistics(
      family, traj.final_theta(), make_problem(a.problem).loss, a.samples, eval_rng);
  log << "problem=" << a.problem << " steps=" << traj.size() << " seed=" << a.seed
      << " initial_mean_loss=" << io::format_double(traj[0].losses.mean)
      << " final_mean_loss=" << io::format_double(final_stats.mean) << '\n';
  return kOk;
}

int cmd_infer(const InferArgs& a) {
  WienerOptions opts;
  opts.horizon = a.horizon;
  opts.expected_observations = a.observations;
  opts.sigma_before = a.sigma_before;
  opts.sigma_after = a.sigma_after;
  opts.inference.learning_rate = a.learning_rate;
  opts.inference.mc_samples = a.samples;
  opts.inference.baseline = kOnOff.at(a.baseline);
  opts.inference.pinv_threshold = a.pinv_threshold;

  std::vector<Observation> obs;
  std::optional<SigmaSchedule> truth;
  try {
    opts.inference.validate();
    if (!(opts.horizon > 0.0)) throw InvalidArgument("horizon must be positive");
    if (opts.expected_observations < 1) throw InvalidArgument("need at least one observation");
    if (a.observations_in.empty()) {
      truth = wiener_schedule(opts);
    }
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  if (a.observations_in.empty()) {
    obs = wiener_observations(a.seed, opts);
  } else {
    std::ifstream in(a.observations_in);
    if (!in) throw EvaluationError("cannot open '" + a.observations_in + "'");
    obs = io::read_observations_csv(in);
  }
  if (!a.observations_out.empty()) {
    std::ofstream f(a.observations_out);
    io::write_observations_csv(f, obs);
    if (!f) throw EvaluationError("failed writing '" + a.observations_out + "'");
  }

  // Same stream assignment as wiener_experiment, so both paths agree.
  Rng rng = Rng(a.seed).split(3);
  ConfigSnapshot extra = {{"seed", std::to_string(a.seed)}};
  if (truth) {
    extra = wiener_snapshot(a.seed, opts);
  } else {
    extra.emplace_back("observations_in", a.observations_in);
  }
  const Trajectory traj =
      run_inference(opts.inference, obs, rng, truth ? &*truth : nullptr, std::move(extra));
  std::ostream& log = emit(traj, io::Layout::kInference, a.out);
  if (traj.abort_reason()) {
    std::cerr << "natsel infer: run aborted after " << traj.size()
              << " observations: " << *traj.abort_reason() << '\n';
    return kFailure;
  }
  log << "observations=" << traj.size() << " seed=" << a.seed;
  if (!traj.empty()) {
    log << " final_post_mean=" << io::format_double(traj.back().extras[0])
        << " final_post_std=" << io::format_double(traj.back().extras[1]);
  }
  log << '\n';
  return kOk;
}

int cmd_verify(const VerifyArgs& a) {
  std::vector<const checks::Check*> selected;
  if (a.only.empty()) {
    for (const auto& c : checks::registry()) selected.push_back(&c);
  } else {
    for (const std::string& name : a.only) {
      const checks::Check* c = checks::find(name);
      if (!c) throw UsageError("unknown check '" + name + "' (see verify --list)");
      selected.push_back(c);
    }
  }
  if (a.list) {
    for (const auto* c : selected) std::cout << c->name << "  " << c->summary << '\n';
    return kOk;
  }
  checks::Options options;
  options.perturbations = a.perturbations;
  options.seed = a.seed;
  int failures = 0;
  for (const auto* c : selected) {
    const auto start = std::chrono::steady_clock::now();
    checks::Result r;
    try {
      r = c->run(options);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line.precision(3);
    line << (r.passed ? "PASS " : "FAIL ") << c->name << "  residual=" << r.residual
         << " tol=" << r.tolerance << "  (" << secs << " s)\n    " << r.detail << '\n';
    std::cout << line.str();
    if (!r.passed) ++failures;
  }
  std::cout << (selected.size() - failures) << "/" << selected.size() << " checks passed\n";
  return failures == 0 ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-gradient evolution toolkit"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  CLI::App* optimize = app.add_subcommand("optimize", "FR-NGD over a bivariate Gaussian");
  optimize->add_option("--problem", opt.problem, "Built-in loss")
      ->check(CLI::IsMember(problem_names()))
      ->capture_default_str();
  optimize->add_option("--steps", opt.steps, "Number of updates")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  optimize->add_option("--lr,--eta", opt.learning_rate, "Learning rate")->capture_default_str();
  optimize->add_option("--samples", opt.samples, "Samples per step")->capture_default_str();
  optimize->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
  optimize->add_option("--fisher", opt.fisher, "Fisher estimate")
      ->check(CLI::IsMember({"analytic", "empirical"}))
      ->capture_default_str();
  optimize->add_option("--baseline", opt.baseline, "Subtract the mean loss")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  optimize->add_option("--pinv-threshold", opt.pinv_threshold, "Relative eigenvalue cutoff")
      ->capture_default_str();
  add_output_flags(optimize, opt.out);

  InferArgs inf;
  CLI::App* infer = app.add_subcommand("infer", "Track the volatility of a Wiener process");
  infer->add_option("--eta,--lr", inf.learning_rate, "Learning rate")->capture_default_str();
  infer->add_option("--samples", inf.samples, "Samples per observation")->capture_default_str();
  infer->add_option("--seed", inf.seed, "Random seed")->capture_default_str();
  infer->add_option("--baseline", inf.baseline, "Subtract the mean loss")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  infer->add_option("--pinv-threshold", inf.pinv_threshold, "Relative eigenvalue cutoff")
      ->capture_default_str();
  infer->add_option("--observations", inf.observations, "Expected number of observations")
      ->capture_default_str();
  infer->add_option("--horizon", inf.horizon, "Time horizon")->capture_default_str();
  infer->add_option("--sigma-before", inf.sigma_before, "Volatility before the switch")
      ->capture_default_str();
  infer->add_option("--sigma-after", inf.sigma_after, "Volatility after the switch")
      ->capture_default_str();
  infer->add_option("--observations-in", inf.observations_in, "Read observations (t,dt,dW,x)")
      ->check(CLI::ExistingFile);
  infer->add_option("--observations-out", inf.observations_out, "Write observations used");
  add_output_flags(infer, inf.out);

  VerifyArgs ver;
  CLI::App* verify = app.add_subcommand("verify", "Run the property checks");
  verify->add_option("--only", ver.only, "Run only these checks")->delimiter(',');
  verify->add_option("--perturbations", ver.perturbations, "Directions per minimality case")
      ->capture_default_str();
  verify->add_option("--seed", ver.seed, "Random seed")->capture_default_str();
  verify->add_flag("--list", ver.list, "List check names without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*optimize) return cmd_optimize(opt);
    if (*infer) return cmd_infer(inf);
    return cmd_verify(ver);
  } catch (const UsageError& e) {
    std::cerr << "natsel: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "natsel: " << e.what() << '\n';
    return kFailure;
  }
}
