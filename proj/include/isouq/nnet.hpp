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

// Fixed-architecture feedforward models with exact reverse-mode gradients.
//
// Parameters live in one flat vector. Layers are stored in order; each layer
// contributes its weight matrix (fan_out x fan_in, column-major) followed by
// its bias vector. A 2->1 logistic model is therefore laid out as
// [w1, w2, b].
//
// The "target" of a model is the scalar whose uncertainty is studied: the
// class probability p(y_c | x, theta) for classification heads and the
// predicted mean for the regression head.

#ifndef ISOUQ_NNET_HPP_
#define ISOUQ_NNET_HPP_

#include "isouq/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace isouq {

enum class Activation { Tanh };

enum class Head { BinarySigmoid, MulticlassSoftmax, RegressionIdentity };

struct MlpSpec {
  int input_dim = 2;
  std::vector<int> hidden_widths;
  int output_dim = 1;
  Activation activation = Activation::Tanh;
  Head head = Head::BinarySigmoid;
  // Standard deviation of the Gaussian likelihood (regression head only).
  double noise_sd = 1.0;

  static MlpSpec binary(int input_dim, std::vector<int> hidden);
  static MlpSpec softmax(int input_dim, std::vector<int> hidden, int classes);
  static MlpSpec regression(int input_dim, std::vector<int> hidden, double noise_sd);

  /// Throws std::invalid_argument on an inconsistent descriptor.
  void validate() const;

  /// Number of valid class indices; 0 for regression.
  [[nodiscard]] int class_count() const;

  /// Short model name used in reports, e.g. "logreg", "mlp(8,8)".
  [[nodiscard]] std::string name() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// Sum over consecutive layer pairs of (fan_in + 1) * fan_out.
[[nodiscard]] std::size_t param_count(const MlpSpec& spec);

struct ParamVector {
  Eigen::VectorXd values;
};

struct GradientVector {
  Eigen::VectorXd values;
};

/// Weights ~ N(0, 1/fan_in), biases zero.
[[nodiscard]] ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

/// Head output (logits, or the regression mean) for one input.
[[nodiscard]] Eigen::VectorXd forward(const MlpSpec& spec, const ParamVector& params,
                                      std::span<const double> x);

/// Head outputs for every row of `inputs`; result is output_dim x n.
[[nodiscard]] Eigen::MatrixXd forward_batch(const MlpSpec& spec, const ParamVector& params,
                                            const Eigen::MatrixXd& inputs);

[[nodiscard]] double predict_prob(const MlpSpec& spec, const ParamVector& params,
                                  std::span<const double> x, int c);

/// Class probabilities for every row of `inputs`, class_count x n. Binary
/// heads yield two rows (p0, p1).
[[nodiscard]] Eigen::MatrixXd predict_probs_batch(const MlpSpec& spec, const ParamVector& params,
                                                  const Eigen::MatrixXd& inputs);

/// Exact gradient of predict_prob with respect to every parameter.
[[nodiscard]] GradientVector grad_prob(const MlpSpec& spec, const ParamVector& params,
                                       std::span<const double> x, int c);

/// Target value per row: p_c for classification heads, the mean for regression
/// (c ignored).
[[nodiscard]] Eigen::VectorXd target_batch(const MlpSpec& spec, const ParamVector& params,
                                           const Eigen::MatrixXd& inputs, int c);

/// Gradient of the target for every row, stored as columns (D x n).
[[nodiscard]] Eigen::MatrixXd target_jacobian(const MlpSpec& spec, const ParamVector& params,
                                              const Eigen::MatrixXd& inputs, int c);

/// Squared gradient norm of the target for every row, computed without
/// materialising the gradients (per layer, |dW|^2 = |delta|^2 |a|^2).
[[nodiscard]] Eigen::VectorXd target_grad_sqnorms(const MlpSpec& spec, const ParamVector& params,
                                                  const Eigen::MatrixXd& inputs, int c);

/// Gradient of (1/T) sum_t target(x_t, c_t) in one backward pass.
[[nodiscard]] GradientVector grad_mean_target(const MlpSpec& spec, const ParamVector& params,
                                              const Eigen::MatrixXd& inputs,
                                              std::span<const int> classes);

struct LossAndGradient {
  double loss = 0.0;
  GradientVector grad;
};

/// Mean negative log-likelihood plus (lambda / 2) |theta|^2, with its exact
/// gradient. The regression NLL is (y - f)^2 / (2 sd^2), without the
/// normalising constant.
[[nodiscard]] LossAndGradient grad_loss(const MlpSpec& spec, const ParamVector& params,
                                        const LabeledDataset& data, double prior_precision);

/// Per-sample NLL gradients as columns (D x n). `labels` / `targets`
/// override the dataset's own when non-empty.
[[nodiscard]] Eigen::MatrixXd per_sample_loss_jacobian(const MlpSpec& spec,
                                                       const ParamVector& params,
                                                       const LabeledDataset& data,
                                                       std::span<const int> labels = {},
                                                       const Eigen::VectorXd* targets = nullptr);

/// Fraction of correctly classified rows.
[[nodiscard]] double accuracy(const MlpSpec& spec, const ParamVector& params,
                              const LabeledDataset& data);

/// Root mean squared error of the regression head.
[[nodiscard]] double rmse(const MlpSpec& spec, const ParamVector& params,
                          const LabeledDataset& data);

/// Throws std::invalid_argument unless the dataset's labels fit the head.
void check_compatible(const MlpSpec& spec, const LabeledDataset& data);

}  // namespace isouq

#endif  // ISOUQ_NNET_HPP_
