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

#include "isouq/trainmap.hpp"

#include <cmath>
#include <string>

namespace isouq {

void TrainConfig::validate() const {
  if (!(prior_precision >= 0.0)) throw std::invalid_argument("prior_precision must be >= 0");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be > 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
}

std::pair<ParamVector, TrainReport> train_map(const MlpSpec& spec, const LabeledDataset& data,
                                              const TrainConfig& config) {
  config.validate();
  check_compatible(spec, data);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  ParamVector theta = init_params(spec, config.seed);
  LossAndGradient cur = grad_loss(spec, theta, data, config.prior_precision);
  if (!std::isfinite(cur.loss) || cur.loss > kDivergenceLoss) {
    throw TrainDivergedError("initial loss is not finite", theta, 0);
  }

  ParamVector best = theta;
  double best_loss = cur.loss;
  double best_grad_norm = cur.grad.values.norm();

  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.values.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.values.size());
  double b1t = 1.0;
  double b2t = 1.0;
  int iter = 0;
  double grad_norm = best_grad_norm;
  while (iter < config.max_iters && grad_norm > config.grad_tol) {
    ++iter;
    b1t *= kBeta1;
    b2t *= kBeta2;
    m = kBeta1 * m + (1.0 - kBeta1) * cur.grad.values;
    v = kBeta2 * v + (1.0 - kBeta2) * cur.grad.values.cwiseAbs2();
    const double lr = config.step_size * std::sqrt(1.0 - b2t) / (1.0 - b1t);
    ParamVector last = theta;
    theta.values.array() -= lr * m.array() / (v.array().sqrt() + kEps);

    cur = grad_loss(spec, theta, data, config.prior_precision);
    if (!std::isfinite(cur.loss) || cur.loss > kDivergenceLoss || !theta.values.allFinite()) {
      throw TrainDivergedError("training diverged at iteration " + std::to_string(iter),
                               std::move(last), iter);
    }
    grad_norm = cur.grad.values.norm();
    if (cur.loss < best_loss) {
      best_loss = cur.loss;
      best_grad_norm = grad_norm;
      best = theta;
    }
  }
  // A converged iterate is returned as is even if an earlier one had a
  // marginally lower loss.
  if (grad_norm <= config.grad_tol) {
    best = theta;
    best_loss = cur.loss;
    best_grad_norm = grad_norm;
  }

  TrainReport report;
  report.final_loss = best_loss;
  report.final_grad_norm = best_grad_norm;
  report.iters_used = iter;
  if (spec.head == Head::RegressionIdentity) {
    report.train_rmse = rmse(spec, best, data);
  } else {
    report.train_accuracy = accuracy(spec, best, data);
  }
  return {std::move(best), report};
}

}  // namespace isouq
