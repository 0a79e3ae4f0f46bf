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

#ifndef ISOUQ_TRAINMAP_HPP_
#define ISOUQ_TRAINMAP_HPP_

#include "isouq/dataset.hpp"
#include "isouq/nnet.hpp"

#include <cstdint>
#include <stdexcept>
#include <utility>

namespace isouq {

enum class Optimizer { FullBatchAdam };

struct TrainConfig {
  double prior_precision = 1e-2;
  int max_iters = 5000;
  double grad_tol = 1e-5;
  double step_size = 1e-2;
  Optimizer optimizer = Optimizer::FullBatchAdam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainReport {
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  int iters_used = 0;
  // Training accuracy for classification heads, RMSE for regression.
  double train_accuracy = 0.0;
  double train_rmse = 0.0;
};

/// Thrown when the loss becomes non-finite or exceeds the divergence
/// threshold. Carries the last iterate with a finite loss.
class TrainDivergedError : public std::runtime_error {
 public:
  TrainDivergedError(const std::string& what, ParamVector last_finite, int iteration)
      : std::runtime_error(what), last_finite_(std::move(last_finite)), iteration_(iteration) {}

  [[nodiscard]] const ParamVector& last_finite() const { return last_finite_; }
  [[nodiscard]] int iteration() const { return iteration_; }

 private:
  ParamVector last_finite_;
  int iteration_;
};

inline constexpr double kDivergenceLoss = 1e6;

/// Minimises mean NLL + (lambda / 2) |theta|^2 with full-batch Adam
/// (beta1 = 0.9, beta2 = 0.999, eps = 1e-8) from init_params(spec, seed).
/// Stops once the gradient norm drops to grad_tol; otherwise returns the
/// iterate with the lowest loss seen.
std::pair<ParamVector, TrainReport> train_map(const MlpSpec& spec, const LabeledDataset& data,
                                              const TrainConfig& config);

}  // namespace isouq

#endif  // ISOUQ_TRAINMAP_HPP_
