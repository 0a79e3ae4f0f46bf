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

#ifndef ISOUQ_DATASET_HPP_
#define ISOUQ_DATASET_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace isouq {

/// n labelled points. Classification problems fill `labels` and leave
/// `targets` empty; regression problems do the opposite and use
/// class_count == 0.
struct LabeledDataset {
  Eigen::MatrixXd inputs;  // n x d, one sample per row
  std::vector<int> labels;
  Eigen::VectorXd targets;
  std::string problem_name;
  std::uint64_t seed = 0;
  int class_count = 0;

  [[nodiscard]] Eigen::Index size() const { return inputs.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return inputs.cols(); }
  [[nodiscard]] bool is_regression() const { return class_count == 0; }

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  /// Rows `idx` in the given order.
  [[nodiscard]] LabeledDataset subset(const std::vector<Eigen::Index>& idx) const;
};

}  // namespace isouq

#endif  // ISOUQ_DATASET_HPP_
