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

// Delta-method uncertainty estimators.
//
// A first-order expansion of the target around theta* gives
// Var[target] ~= g^T Cov[theta] g with g the target gradient at theta*.
// Under an isotropic covariance this is |g|^2 up to a global factor; with
// the damped empirical Fisher it is g^T (F + lambda I)^-1 g. The aleatoric
// point estimate is the Bernoulli variance p (1 - p) at theta*.

#ifndef ISOUQ_UQ_HPP_
#define ISOUQ_UQ_HPP_

#include "isouq/dataset.hpp"
#include "isouq/nnet.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isouq {

/// Largest parameter count for which a dense D x D Fisher is formed.
inline constexpr Eigen::Index kMaxDenseParams = 4096;

class CovarianceModel {
 public:
  enum class Variant { Isotropic, DampedFisher };

  /// sigma^2 I. The scale only multiplies every estimate.
  static CovarianceModel isotropic(double scale = 1.0);
  /// (F + damping I)^-1. Checks symmetry (1e-10) and numerical PSD (min
  /// eigenvalue >= -1e-8); throws std::invalid_argument otherwise.
  static CovarianceModel damped_fisher(Eigen::MatrixXd fisher, double damping);

  [[nodiscard]] Variant variant() const { return variant_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] double damping() const { return damping_; }
  [[nodiscard]] const Eigen::MatrixXd& fisher() const { return fisher_; }
  [[nodiscard]] Eigen::Index dim() const { return fisher_.rows(); }

  /// g^T Cov g.
  [[nodiscard]] double quad_form(const Eigen::VectorXd& g) const;
  /// g_i^T Cov g_i for every column.
  [[nodiscard]] Eigen::VectorXd quad_forms(const Eigen::MatrixXd& gradients) const;
  /// The Cholesky factor L of F + damping I (DampedFisher only).
  [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& factor() const;

 private:
  Variant variant_ = Variant::Isotropic;
  double scale_ = 1.0;
  double damping_ = 0.0;
  Eigen::MatrixXd fisher_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

[[nodiscard]] double epistemic_gradient_norm(const GradientVector& g);

/// p (1 - p); throws std::invalid_argument outside [0, 1].
[[nodiscard]] double aleatoric_point(double p);

/// Delta-method variance g^T Cov g under either covariance model.
[[nodiscard]] double delta_method_variance(const GradientVector& g, const CovarianceModel& cov);

enum class FisherLabels { Observed, ModelSampled };

/// F = (1/n) sum_i grad(l_i) grad(l_i)^T with l_i the per-sample NLL.
/// ModelSampled draws each label from the model's predictive distribution
/// (Gaussian with the head's noise_sd for regression).
[[nodiscard]] Eigen::MatrixXd empirical_fisher(const MlpSpec& spec, const ParamVector& params,
                                               const LabeledDataset& data, FisherLabels mode,
                                               std::uint64_t seed);

/// g^T (F + lambda I)^-1 g via a Cholesky solve.
[[nodiscard]] double laplace_epistemic(const GradientVector& g, const Eigen::MatrixXd& fisher,
                                       double lambda);

/// Monte Carlo mean of p (1 - p) under theta ~ N(theta*, (F + lambda I)^-1).
/// Draw s uses D standard normals z_s taken in order from the kLaplace
/// substream of `seed`, mapped through theta* + L^-T z_s.
[[nodiscard]] double laplace_aleatoric(const MlpSpec& spec, const ParamVector& map,
                                       const Eigen::MatrixXd& fisher, double lambda,
                                       std::span<const double> x, int c, int n_draws,
                                       std::uint64_t seed);

/// Batched form: same draws shared across every row of `inputs`. Returns
/// class_count x n (mean p_c (1 - p_c) for every class).
[[nodiscard]] Eigen::MatrixXd laplace_aleatoric_batch(const MlpSpec& spec, const ParamVector& map,
                                                      const CovarianceModel& cov,
                                                      const Eigen::MatrixXd& inputs, int n_draws,
                                                      std::uint64_t seed);

struct SequenceGradients {
  std::vector<GradientVector> per_token_grads;
  std::vector<double> per_token_probs;

  void validate() const;
};

/// Per-token probabilities and gradients for tokens[t] given contexts.row(t).
[[nodiscard]] SequenceGradients sequence_gradients(const MlpSpec& spec, const ParamVector& params,
                                                   const Eigen::MatrixXd& contexts,
                                                   std::span<const int> tokens);

/// |(1/T) sum_t g_t|^2.
[[nodiscard]] double sequence_epistemic(const SequenceGradients& sg);

/// (1/T) sum_t p_t (1 - p_t).
[[nodiscard]] double sequence_aleatoric(const SequenceGradients& sg);

/// Regular grid over [x1_min, x1_max] (x [x2_min, x2_max] when 2D).
struct EvalGrid {
  double x1_min = -3.0;
  double x1_max = 3.0;
  std::optional<std::pair<double, double>> x2;
  int resolution = 100;

  void validate() const;
  [[nodiscard]] bool is_2d() const { return x2.has_value(); }
  [[nodiscard]] std::vector<double> xs() const;
  [[nodiscard]] std::vector<double> ys() const;
  /// Every grid point, x1 varying fastest (row-major over (x2, x1)).
  [[nodiscard]] Eigen::MatrixXd points() const;

  /// Bounding box of the inputs with each side widened by `expand` / 2 of
  /// its extent.
  static EvalGrid around(const Eigen::MatrixXd& inputs, double expand, int resolution);
};

struct UncertaintyMap {
  std::vector<double> grid_xs;
  std::vector<double> grid_ys;  // empty for 1D maps
  Eigen::MatrixXd values;       // rows index grid_ys (one row when 1D), columns grid_xs
  std::string estimator_name;
  bool normalized = false;
  // Set by normalize_map when the raw map had no spread.
  bool was_constant = false;

  void validate() const;
};

enum class MapEstimator { GradientNorm, Laplace, AleatoricPoint };

[[nodiscard]] std::string to_string(MapEstimator e);

/// Raw estimator values on every grid point for class c. Laplace requires a
/// DampedFisher covariance; the gradient norm honours an isotropic scale.
[[nodiscard]] UncertaintyMap uncertainty_map(const MlpSpec& spec, const ParamVector& map,
                                             const EvalGrid& grid, MapEstimator estimator, int c,
                                             const std::optional<CovarianceModel>& cov = {});

/// Min-max normalisation to [0, 1]; a constant map becomes all zeros.
[[nodiscard]] UncertaintyMap normalize_map(const UncertaintyMap& map);

}  // namespace isouq

#endif  // ISOUQ_UQ_HPP_
