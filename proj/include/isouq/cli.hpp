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

// Command-line front end. Exit codes: 0 success, 1 when any problem produced
// an error row (or the run could not complete), 2 for usage errors.

#ifndef ISOUQ_CLI_HPP_
#define ISOUQ_CLI_HPP_

#include "isouq/bench.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isouq::cli {

enum class Command { Validate, Regress, Scaling, ProxyBias, Map, HmcCheck };

[[nodiscard]] std::string to_string(Command c);

struct CliConfig {
  Command command = Command::Validate;
  std::filesystem::path out_dir = "results";
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> problems;  // empty: command default
  bench::Verbosity verbosity = bench::Verbosity::Normal;

  /// Defaults with seed and overrides applied.
  [[nodiscard]] bench::BenchConfig bench_config() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct ParseResult {
  std::optional<CliConfig> config;  // empty when the process should exit
  int exit_code = kExitOk;
  std::string output;  // usage text (stdout) or error message (stderr)
};

/// `args` excludes the program name.
[[nodiscard]] ParseResult parse_args(const std::vector<std::string>& args);

/// Runs the command and writes report.csv (plus maps) into out_dir.
int run(const CliConfig& config);

/// parse_args + run with output routed to the standard streams.
int main_entry(int argc, const char* const* argv);

}  // namespace isouq::cli

#endif  // ISOUQ_CLI_HPP_
