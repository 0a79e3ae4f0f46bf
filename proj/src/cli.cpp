// Copyright 2026 The isouq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isouq/cli.hpp"

#include "isouq/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <sstream>

namespace isouq::cli {
namespace {

struct CommandInfo {
  Command command;
  const char* name;
  const char* help;
};

constexpr CommandInfo kCommands[] = {
    {Command::Validate, "validate", "classification validation against HMC references"},
    {Command::Regress, "regress", "1D regression validation and Fisher spectrum"},
    {Command::Scaling, "scaling", "estimator quality across model sizes (binary rings)"},
    {Command::ProxyBias, "proxy-bias", "proxy-covariance bias maps and statistics"},
    {Command::Map, "map", "estimator and HMC reference maps on a dense grid"},
    {Command::HmcCheck, "hmc-check", "HMC calibration on a 2D standard normal"},
};

std::vector<std::string> default_problems(Command c) {
  switch (c) {
    case Command::Validate:
    case Command::Map:
      return bench::kClassificationProblems;
    case Command::ProxyBias:
      return bench::kProxyProblems;
    default:
      return {};
  }
}

std::vector<std::string> allowed_problems(Command c) {
  auto out = default_problems(c);
  if (c == Command::Map) {
    out.push_back("reg-linear");
    out.push_back("reg-nonlinear");
  }
  return out;
}

void validate_problems(const CliConfig& config) {
  if (config.problems.empty()) return;
  const auto allowed = allowed_problems(config.command);
  if (allowed.empty()) {
    throw CLI::ValidationError("--problems", "not accepted by " + to_string(config.command));
  }
  for (const auto& p : config.problems) {
    if (std::find(allowed.begin(), allowed.end(), p) == allowed.end()) {
      throw CLI::ValidationError("--problems", "unknown problem '" + p + "' for " +
                                                   to_string(config.command));
    }
  }
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& info : kCommands) {
    if (info.command == c) return info.name;
  }
  return "unknown";
}

bench::BenchConfig CliConfig::bench_config() const {
  bench::BenchConfig b;
  b.seed = seed;
  for (const auto& [key, value] : overrides) bench::apply_override(b, key, value);
  // --seed wins over a seed= override.
  b.seed = seed;
  b.artifact_dir = out_dir / "draws";
  return b;
}

ParseResult parse_args(const std::vector<std::string>& args) {
  CLI::App app{"isouq: delta-method uncertainty estimators and their HMC validation", "isouq"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  CliConfig config;
  std::string out = config.out_dir.string();
  std::vector<std::string> sets;
  bool quiet = false;
  bool debug = false;
  app.add_option("--out", out, "output directory (created if absent)");
  app.add_option("--seed", config.seed, "root seed")->check(CLI::NonNegativeNumber);
  app.add_option("--set", sets, "configuration override key=value (repeatable)")
      ->allow_extra_args(false)
      ->take_all();
  app.add_option("--problems", config.problems, "comma-separated problem list")->delimiter(',');
  auto* q = app.add_flag("--quiet", quiet, "errors only");
  app.add_flag("--debug", debug, "verbose progress")->excludes(q);

  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& info : kCommands) subs.emplace_back(app.add_subcommand(info.name, info.help), info.command);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  std::ostringstream out_stream;
  std::ostringstream err_stream;
  try {
    app.parse(reversed);
    for (const auto& [sub, command] : subs) {
      if (sub->parsed()) config.command = command;
    }
    config.out_dir = out;
    config.verbosity = quiet ? bench::Verbosity::Quiet
                             : (debug ? bench::Verbosity::Debug : bench::Verbosity::Normal);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
      }
      config.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate_problems(config);
    try {
      (void)config.bench_config();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--set", e.what());
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_stream, err_stream);
    ParseResult r;
    if (code == 0) {
      r.exit_code = kExitOk;
      r.output = out_stream.str();
    } else {
      r.exit_code = kExitUsage;
      r.output = err_stream.str();
    }
    return r;
  }
  ParseResult r;
  r.config = std::move(config);
  return r;
}

int run(const CliConfig& config) {
  bench::set_verbosity(config.verbosity);
  bench::BenchConfig bc = config.bench_config();
  std::filesystem::create_directories(config.out_dir);
  const auto problems =
      config.problems.empty() ? default_problems(config.command) : config.problems;
  bench::ExperimentReport report;
  int exit_code = kExitOk;
  switch (config.command) {
    case Command::Validate:
      report = bench::run_validation_classification(problems, bc);
      break;
    case Command::Regress:
      report = bench::run_validation_regression(bc);
      break;
    case Command::Scaling:
      report = bench::run_scaling(bench::scaling_ladder(bc), bc);
      break;
    case Command::ProxyBias: {
      auto outcome = bench::run_proxy_bias(problems, bc);
      if (bc.write_maps) bench::write_proxy_maps(outcome, config.out_dir / "maps");
      report = std::move(outcome.report);
      break;
    }
    case Command::Map: {
      auto outcome = bench::run_maps(problems, bc);
      if (bc.write_maps) bench::write_maps(outcome, config.out_dir / "maps");
      report = std::move(outcome.report);
      break;
    }
    case Command::HmcCheck: {
      auto check = bench::run_hmc_check(bc);
      std::cout << "hmc-check: " << (check.passed ? "PASS" : "FAIL")
                << " mean_err=" << bench::format_value(check.max_mean_error)
                << " cov_err=" << bench::format_value(check.max_cov_error)
                << " accept=" << bench::format_value(check.accept_rate) << '\n';
      report = std::move(check.report);
      break;
    }
  }
  bench::emit_csv(report, config.out_dir / "report.csv");
  if (report.has_errors()) exit_code = kExitFailure;
  return exit_code;
}

int main_entry(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  const ParseResult parsed = parse_args(args);
  if (!parsed.config) {
    (parsed.exit_code == kExitOk ? std::cout : std::cerr) << parsed.output;
    return parsed.exit_code;
  }
  try {
    return run(*parsed.config);
  } catch (const std::exception& e) {
    std::cerr << "isouq: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace isouq::cli
