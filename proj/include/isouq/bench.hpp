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

// Experiment pipelines: validation against HMC, regression anisotropy,
// model-size scaling and the proxy-covariance bias study.
//
// Every pipeline is a pure function of (BenchConfig, seed). A problem that
// throws contributes a single "error" row and the rest of the run continues.

#ifndef ISOUQ_BENCH_HPP_
#define ISOUQ_BENCH_HPP_

#include "isouq/dataset.hpp"
#include "isouq/nnet.hpp"
#include "isouq/refpost.hpp"
#include "isouq/report.hpp"
#include "isouq/trainmap.hpp"
#include "isouq/uq.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isouq::bench {

enum class Verbosity { Quiet, Normal, Debug };
void set_verbosity(Verbosity v);
[[nodiscard]] Verbosity verbosity();

struct DataConfig {
  int n_per_class = 200;
  int n_regression = 100;
  double linear_margin = 0.25;
  double xor_noise = 0.5;
  double rings_noise = 0.15;
  double clusters_spread = 0.15;
  double spirals_noise = 0.15;
  int classes = 4;
  double regression_noise = 0.1;
};

struct ModelConfig {
  std::vector<int> xor_hidden{8, 8};
  std::vector<int> rings_hidden{8, 8};
  std::vector<int> spirals_hidden{16, 16};
  std::vector<int> rings_multi_hidden{16, 16};
  std::vector<int> regression_hidden{32};
  std::vector<int> proxy_hidden{32, 32};
};

struct EvalConfig {
  int grid_side = 16;        // correlation grid is grid_side x grid_side
  int heldout = 144;         // plus this many fresh draws from the generator
  int regression_grid = 256;
  double expand = 0.2;
  int map_resolution = 100;
};

struct ScalingConfig {
  std::vector<std::vector<int>> ladder{{}, {8, 8}, {16, 16}, {32, 32}, {64, 64}, {128, 128}, {256, 256}};
  // Models above this many parameters run with warmup and draws scaled by
  // large_model_budget.
  long long large_model_params = 5000;
  double large_model_budget = 0.5;
};

struct ProxyConfig {
  int axis = 1;
  double threshold = 0.0;
};

struct BenchConfig {
  std::uint64_t seed = 0;
  TrainConfig train;
  HmcConfig hmc;
  DataConfig data;
  ModelConfig model;
  EvalConfig eval;
  ScalingConfig scaling;
  ProxyConfig proxy;
  int laplace_draws = 512;
  bool write_maps = true;
  bool write_draws = false;
  // Artifacts (maps, draw dumps) go here when set.
  std::optional<std::filesystem::path> artifact_dir;
};

/// Applies one "key=value" override; throws std::invalid_argument for an
/// unknown key or an unparsable value.
void apply_override(BenchConfig& config, std::string_view key, std::string_view value);

/// Every override key with its current value, sorted by key.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> config_echo(const BenchConfig& config);

/// "logreg" / "" -> {}, "8x8" -> {8, 8}.
[[nodiscard]] std::vector<int> parse_widths(std::string_view text);
[[nodiscard]] std::string format_widths(const std::vector<int>& widths);

inline const std::vector<std::string> kClassificationProblems{"linear",   "xor",     "rings-binary",
                                                              "clusters", "spirals", "rings-multi"};
inline const std::vector<std::string> kProxyProblems{"linear", "xor", "rings"};

/// Training data for a named problem under `config`.
[[nodiscard]] LabeledDataset make_problem(std::string_view problem, const BenchConfig& config,
                                          std::uint64_t seed);
/// Default model for a named problem.
[[nodiscard]] MlpSpec problem_model(std::string_view problem, const BenchConfig& config);

/// 16 x 16 grid over the widened data box followed by held-out draws.
[[nodiscard]] Eigen::MatrixXd evaluation_points(std::string_view problem, const LabeledDataset& data,
                                                const BenchConfig& config);

ExperimentReport run_validation_classification(const std::vector<std::string>& problems,
                                               const BenchConfig& config);

ExperimentReport run_validation_regression(const BenchConfig& config);

ExperimentReport run_scaling(const std::vector<MlpSpec>& ladder, const BenchConfig& config);

/// The configured ladder as binary specs on 2D inputs.
[[nodiscard]] std::vector<MlpSpec> scaling_ladder(const BenchConfig& config);

struct ProxyBiasStats {
  double r_id = 0.0;
  double r_a = 0.0;
  double r_b = 0.0;
  double welch_t = 0.0;
  double welch_p = 1.0;
  double cohens_d = 0.0;
  Eigen::MatrixXd log_ratio;  // log U_A - log U_B per grid cell
};

/// Ratios and top-versus-bottom tests from raw maps. Cells with coordinate
/// `axis` above `threshold` form the top group.
[[nodiscard]] ProxyBiasStats proxy_bias_statistics(const UncertaintyMap& u_id,
                                                   const UncertaintyMap& u_a,
                                                   const UncertaintyMap& u_b, int axis,
                                                   double threshold);

struct ProxyBiasMaps {
  std::string problem;
  UncertaintyMap u_id;  // normalised
  UncertaintyMap u_a;
  UncertaintyMap u_b;
  UncertaintyMap log_ratio_image;  // min-max scaled log ratio
  Eigen::MatrixXd log_ratio;
};

struct ProxyBiasOutcome {
  ExperimentReport report;
  std::vector<ProxyBiasMaps> maps;
};

ProxyBiasOutcome run_proxy_bias(const std::vector<std::string>& problems, const BenchConfig& config);

/// Writes <dir>/<problem>_{identity,proxy_a,proxy_b,log_ratio}.{pgm,csv}.
void write_proxy_maps(const ProxyBiasOutcome& outcome, const std::filesystem::path& dir);

/// Estimator and reference maps on the configured grid for each problem.
struct MapBundle {
  std::string problem;
  std::vector<UncertaintyMap> maps;  // raw
};
struct MapOutcome {
  ExperimentReport report;
  std::vector<MapBundle> bundles;
};
MapOutcome run_maps(const std::vector<std::string>& problems, const BenchConfig& config);
void write_maps(const MapOutcome& outcome, const std::filesystem::path& dir);

struct HessianSpectrum {
  double eig_min = 0.0;
  double eig_max = 0.0;
  double ratio = 0.0;
};

/// Extreme eigenvalues of F + lambda I. Throws std::invalid_argument when F
/// is not symmetric (relative 1e-10) or larger than kMaxDenseParams.
[[nodiscard]] HessianSpectrum hessian_spectrum(const Eigen::MatrixXd& fisher, double lambda);

struct HmcCheckResult {
  ExperimentReport report;
  double max_mean_error = 0.0;
  double max_cov_error = 0.0;
  double accept_rate = 0.0;
  bool passed = false;
};

/// HMC on a 2D standard normal: mean error < 0.05, covariance error < 0.1,
/// acceptance in [0.7, 0.9].
HmcCheckResult run_hmc_check(const BenchConfig& config);

}  // namespace isouq::bench

#endif  // ISOUQ_BENCH_HPP_
