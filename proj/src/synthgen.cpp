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

#include "isouq/synthgen.hpp"

#include "isouq/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isouq {

void LabeledDataset::validate() const {
  if (inputs.rows() < 1) throw std::invalid_argument("dataset must hold at least one sample");
  if (!inputs.allFinite()) throw std::invalid_argument("dataset inputs must be finite");
  if (class_count == 0) {
    if (targets.size() != inputs.rows() || !targets.allFinite()) {
      throw std::invalid_argument("regression dataset needs one finite target per sample");
    }
    return;
  }
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw std::invalid_argument("classification dataset needs one label per sample");
  }
  for (int y : labels) {
    if (y < 0 || y >= class_count) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, class_count)");
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<Eigen::Index>& idx) const {
  LabeledDataset out;
  out.problem_name = problem_name;
  out.seed = seed;
  out.class_count = class_count;
  out.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
  if (is_regression()) out.targets.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    out.inputs.row(i) = inputs.row(idx[r]);
    if (is_regression()) {
      out.targets(i) = targets(idx[r]);
    } else {
      out.labels.push_back(labels[static_cast<std::size_t>(idx[r])]);
    }
  }
  return out;
}

namespace synth {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSpiralTurnRate = 2.0;

int class_share(int n, int k, int j) { return n / k + (j < n % k ? 1 : 0); }

LabeledDataset start(std::string name, int n, int dim, int classes, std::uint64_t seed) {
  LabeledDataset d;
  d.problem_name = std::move(name);
  d.seed = seed;
  d.class_count = classes;
  d.inputs.resize(n, dim);
  if (classes > 0) d.labels.reserve(static_cast<std::size_t>(n));
  return d;
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Eigen::Vector2d xor_center(int quadrant) {
  static constexpr double kC = 1.5;
  switch (quadrant & 3) {
    case 0:
      return {kC, kC};
    case 1:
      return {-kC, kC};
    case 2:
      return {-kC, -kC};
    default:
      return {kC, -kC};
  }
}

int xor_label(const Eigen::Vector2d& center) { return (center.x() > 0) == (center.y() > 0) ? 0 : 1; }

double ring_radius(int ring, int k) { return 2.5 * (ring + 1) / static_cast<double>(k); }

int ring_label(const Eigen::Vector2d& x, int k) {
  const double r = x.norm();
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (std::abs(r - ring_radius(i, k)) < std::abs(r - ring_radius(best, k))) best = i;
  }
  return best;
}

Eigen::Vector2d cluster_center(int j, int k) {
  const double a = 2.0 * kPi * j / k + kPi / 4.0;
  return {2.0 * std::cos(a), 2.0 * std::sin(a)};
}

Eigen::Vector2d spiral_point(double t, int arm, int k) {
  const double a = kSpiralTurnRate * t + 2.0 * kPi * arm / k;
  return {t * std::cos(a), t * std::sin(a)};
}

double regression_function(RegressionKind kind, double x) {
  if (kind == RegressionKind::Linear) return 0.8 * x + 0.3;
  return std::sin(1.5 * x) + 0.5 * std::sin(3.0 * x);
}

LabeledDataset make_linear2d(int n, double margin, std::uint64_t seed) {
  require(n >= 2, "make_linear2d: n must be at least 2");
  require(margin >= 0.0, "make_linear2d: margin must be nonnegative");
  auto d = start("linear", n, 2, 2, seed);
  Rng rng = make_rng(seed, stream::kData);
  std::uniform_real_distribution<double> along(-3.0, 3.0);
  std::normal_distribution<double> scatter(0.0, 0.5);
  int row = 0;
  for (int cls = 0; cls < 2; ++cls) {
    const double side = cls == 1 ? 1.0 : -1.0;
    for (int i = 0; i < class_share(n, 2, cls); ++i, ++row) {
      const double offset = margin + std::abs(scatter(rng));
      d.inputs(row, 0) = side * offset;
      d.inputs(row, 1) = along(rng);
      d.labels.push_back(cls);
    }
  }
  return d;
}

LabeledDataset make_xor2d(int n, double noise, std::uint64_t seed) {
  require(n >= 4, "make_xor2d: n must be at least 4");
  require(noise >= 0.0, "make_xor2d: noise must be nonnegative");
  auto d = start("xor", n, 2, 2, seed);
  Rng rng = make_rng(seed, stream::kData);
  std::normal_distribution<double> jitter(0.0, 1.0);
  int row = 0;
  for (int q = 0; q < 4; ++q) {
    const Eigen::Vector2d c = xor_center(q);
    for (int i = 0; i < class_share(n, 4, q); ++i, ++row) {
      d.inputs(row, 0) = c.x() + noise * jitter(rng);
      d.inputs(row, 1) = c.y() + noise * jitter(rng);
      d.labels.push_back(xor_label(c));
    }
  }
  return d;
}

LabeledDataset make_rings2d(int n, int k, double noise, std::uint64_t seed) {
  require(k >= 2, "make_rings2d: need at least two rings");
  require(n >= 2 * k, "make_rings2d: n must be at least 2k");
  require(noise >= 0.0, "make_rings2d: noise must be nonnegative");
  auto d = start(k == 2 ? "rings-binary" : "rings-multi", n, 2, k, seed);
  Rng rng = make_rng(seed, stream::kData);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::normal_distribution<double> jitter(0.0, 1.0);
  int row = 0;
  for (int ring = 0; ring < k; ++ring) {
    for (int i = 0; i < class_share(n, k, ring); ++i, ++row) {
      const double a = angle(rng);
      const double r = ring_radius(ring, k) + noise * jitter(rng);
      d.inputs(row, 0) = r * std::cos(a);
      d.inputs(row, 1) = r * std::sin(a);
      d.labels.push_back(ring);
    }
  }
  return d;
}

LabeledDataset make_clusters2d(int n, int k, double spread, std::uint64_t seed) {
  require(k >= 2, "make_clusters2d: need at least two clusters");
  require(n >= k, "make_clusters2d: n must be at least k");
  require(spread >= 0.0, "make_clusters2d: spread must be nonnegative");
  auto d = start("clusters", n, 2, k, seed);
  Rng rng = make_rng(seed, stream::kData);
  std::normal_distribution<double> jitter(0.0, 1.0);
  int row = 0;
  for (int j = 0; j < k; ++j) {
    const Eigen::Vector2d c = cluster_center(j, k);
    for (int i = 0; i < class_share(n, k, j); ++i, ++row) {
      d.inputs(row, 0) = c.x() + spread * jitter(rng);
      d.inputs(row, 1) = c.y() + spread * jitter(rng);
      d.labels.push_back(j);
    }
  }
  return d;
}

LabeledDataset make_spirals2d(int n, int k, double noise, std::uint64_t seed) {
  require(k >= 2, "make_spirals2d: need at least two arms");
  require(n >= k, "make_spirals2d: n must be at least k");
  require(noise >= 0.0, "make_spirals2d: noise must be nonnegative");
  auto d = start("spirals", n, 2, k, seed);
  Rng rng = make_rng(seed, stream::kData);
  std::uniform_real_distribution<double> param(kSpiralTMin, kSpiralTMax);
  std::normal_distribution<double> jitter(0.0, 1.0);
  int row = 0;
  for (int arm = 0; arm < k; ++arm) {
    for (int i = 0; i < class_share(n, k, arm); ++i, ++row) {
      const Eigen::Vector2d p = spiral_point(param(rng), arm, k);
      d.inputs(row, 0) = p.x() + noise * jitter(rng);
      d.inputs(row, 1) = p.y() + noise * jitter(rng);
      d.labels.push_back(arm);
    }
  }
  return d;
}

LabeledDataset make_regression1d(RegressionKind kind, int n, double noise_sd, std::uint64_t seed) {
  require(n >= 2, "make_regression1d: n must be at least 2");
  require(noise_sd >= 0.0, "make_regression1d: noise_sd must be nonnegative");
  auto d = start(kind == RegressionKind::Linear ? "reg-linear" : "reg-nonlinear", n, 1, 0, seed);
  d.targets.resize(n);
  Rng rng = make_rng(seed, stream::kData);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> eps(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double x = 0.0;
    if (kind == RegressionKind::Linear) {
      x = -3.0 + 6.0 * unit(rng);
    } else {
      // Two equal-width intervals on either side of the gap.
      const double width = 3.0 - kRegressionGapHi;
      const double u = 2.0 * width * unit(rng);
      x = u < width ? -3.0 + u : kRegressionGapHi + (u - width);
    }
    d.inputs(i, 0) = x;
    d.targets(i) = regression_function(kind, x) + noise_sd * eps(rng);
  }
  return d;
}

std::pair<LabeledDataset, LabeledDataset> split_by_halfplane(const LabeledDataset& data, int axis,
                                                             double threshold) {
  require(data.dim() == 2, "split_by_halfplane: 2D inputs required");
  require(axis == 0 || axis == 1, "split_by_halfplane: axis must be 0 or 1");
  std::vector<Eigen::Index> top;
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    (data.inputs(i, axis) > threshold ? top : rest).push_back(i);
  }
  if (top.empty() || rest.empty()) {
    throw std::invalid_argument("split_by_halfplane: degenerate split (one half is empty)");
  }
  return {data.subset(top), data.subset(rest)};
}

}  // namespace synth
}  // namespace isouq
