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

// Deterministic synthetic problems. Every 2D problem lives roughly in
// [-3, 3]^2. Each generator also exposes the noise-free construction it
// samples from so that symmetry properties can be checked exactly.

#ifndef ISOUQ_SYNTHGEN_HPP_
#define ISOUQ_SYNTHGEN_HPP_

#include "isouq/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace isouq::synth {

/// Two classes on either side of the vertical line x1 = 0. Points sit at a
/// uniform position along the boundary and at distance margin + |N(0, 0.5^2)|
/// from it; class 1 is the positive side.
LabeledDataset make_linear2d(int n, double margin, std::uint64_t seed);

/// Four Gaussian clusters at (+-1.5, +-1.5). Label is the quadrant parity of
/// the noise-free center: 0 for (+,+) and (-,-), 1 for (+,-) and (-,+).
LabeledDataset make_xor2d(int n, double noise, std::uint64_t seed);

/// k concentric rings with radii 2.5 (i + 1) / k and radial noise; label = ring.
LabeledDataset make_rings2d(int n, int k, double noise, std::uint64_t seed);

/// k isotropic Gaussian blobs centered on a circle of radius 2.
LabeledDataset make_clusters2d(int n, int k, double spread, std::uint64_t seed);

/// k Archimedean arms r = t, angle = 2 t + 2 pi j / k for t in [0.3, 3.3].
LabeledDataset make_spirals2d(int n, int k, double noise, std::uint64_t seed);

enum class RegressionKind { Linear, Nonlinear };

/// Linear: y = 0.8 x + 0.3, x ~ U(-3, 3).
/// Nonlinear: y = sin(1.5 x) + 0.5 sin(3 x), x ~ U([-3, -1] u [1, 3]), so no
/// training input falls inside the gap (-1, 1).
LabeledDataset make_regression1d(RegressionKind kind, int n, double noise_sd, std::uint64_t seed);

/// Points with input[axis] > threshold first ("top"), the rest second.
/// Throws std::invalid_argument when either half is empty.
std::pair<LabeledDataset, LabeledDataset> split_by_halfplane(const LabeledDataset& data, int axis,
                                                             double threshold);

// Noise-free constructions.
Eigen::Vector2d xor_center(int quadrant);  // quadrants 0..3 counter-clockwise from (+,+)
int xor_label(const Eigen::Vector2d& center);
double ring_radius(int ring, int k);
int ring_label(const Eigen::Vector2d& x, int k);  // nearest ring by radius
Eigen::Vector2d cluster_center(int j, int k);
Eigen::Vector2d spiral_point(double t, int arm, int k);
inline constexpr double kSpiralTMin = 0.3;
inline constexpr double kSpiralTMax = 3.3;
double regression_function(RegressionKind kind, double x);
inline constexpr double kRegressionGapLo = -1.0;
inline constexpr double kRegressionGapHi = 1.0;

}  // namespace isouq::synth

#endif  // ISOUQ_SYNTHGEN_HPP_
