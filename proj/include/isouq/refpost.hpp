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

// Reference posterior by Hamiltonian Monte Carlo.
//
// Leapfrog integration with an identity mass matrix and a Metropolis
// correction. During warmup the step size is adapted by dual averaging
// toward `target_accept`; afterwards it is frozen at the averaged iterate.
// Chain k draws from substream k of the configured seed, so results do not
// depend on the order in which chains are run.

#ifndef ISOUQ_REFPOST_HPP_
#define ISOUQ_REFPOST_HPP_

#include "isouq/dataset.hpp"
#include "isouq/nnet.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

namespace isouq {

/// Returns log density at theta and writes its gradient into `grad`.
using LogDensityFn = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd& grad)>;

/// log p(D | theta) - (n lambda / 2) |theta|^2, i.e. -n times the training
/// loss, so that the MAP estimate of train_map is the posterior mode.
class PosteriorLogDensity {
 public:
  PosteriorLogDensity(MlpSpec spec, LabeledDataset data, double prior_precision);

  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;

  [[nodiscard]] const MlpSpec& spec() const { return spec_; }
  [[nodiscard]] const LabeledDataset& data() const { return data_; }
  [[nodiscard]] double prior_precision() const { return prior_precision_; }

 private:
  MlpSpec spec_;
  LabeledDataset data_;
  double prior_precision_;
};

struct HmcConfig {
  int warmup_iters = 1000;
  int sample_iters = 1000;
  int chains = 4;
  int leapfrog_steps = 32;
  double target_accept = 0.8;
  // Trajectory length is drawn uniformly from leapfrog_steps * (1 +- jitter).
  double leapfrog_jitter = 0.2;
  // Chains start at init + N(0, init_sd^2 I).
  double init_sd = 0.1;
  // Keep every thin-th post-warmup draw.
  int thin = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PosteriorSamples {
  Eigen::MatrixXd draws;  // S x D, S = chains * kept draws per chain
  double accept_rate = 0.0;  // mean Metropolis acceptance after warmup
  double adapted_step_size = 0.0;  // mean over chains
  std::vector<double> per_chain_step_size;
  std::vector<double> per_chain_mean_log_density;
  std::vector<double> per_chain_accept_rate;
  int warmup_divergences = 0;
  int sampling_divergences = 0;

  [[nodiscard]] Eigen::Index size() const { return draws.rows(); }
};

class HmcDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects a trajectory when the Hamiltonian is non-finite or its error
/// exceeds this bound.
inline constexpr double kMaxEnergyError = 1000.0;

PosteriorSamples hmc_sample(const LogDensityFn& log_density, const ParamVector& init,
                            const HmcConfig& config);

/// Unbiased sample variance of p_c(x; theta_s) across draws.
double ref_epistemic(const PosteriorSamples& samples, const MlpSpec& spec,
                     std::span<const double> x, int c);

/// Sample mean of p_c (1 - p_c) across draws.
double ref_aleatoric(const PosteriorSamples& samples, const MlpSpec& spec,
                     std::span<const double> x, int c);

/// Per-point reference moments for every class at once.
struct ReferenceMoments {
  Eigen::MatrixXd mean;       // classes x n (regression: 1 x n predicted mean)
  Eigen::MatrixXd epistemic;  // unbiased variance of the target across draws
  Eigen::MatrixXd aleatoric;  // mean of p (1 - p); empty for regression
};

ReferenceMoments reference_moments(const PosteriorSamples& samples, const MlpSpec& spec,
                                   const Eigen::MatrixXd& inputs);

/// Writes "HMC1 S D seed\n" followed by S x D little-endian float64 values,
/// row-major.
void write_draws(const PosteriorSamples& samples, std::uint64_t seed,
                 const std::filesystem::path& path);

struct DrawDump {
  Eigen::MatrixXd draws;
  std::uint64_t seed = 0;
};
DrawDump read_draws(const std::filesystem::path& path);

}  // namespace isouq

#endif  // ISOUQ_REFPOST_HPP_
