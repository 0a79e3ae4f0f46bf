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

#include "isouq/uq.hpp"

#include "isouq/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace isouq {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr Index kJacobianChunk = 512;

MatrixXd row_of(std::span<const double> x) {
  MatrixXd m(1, static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) m(0, static_cast<Index>(j)) = x[j];
  return m;
}

}  // namespace

CovarianceModel CovarianceModel::isotropic(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("isotropic covariance scale must be positive");
  }
  CovarianceModel m;
  m.variant_ = Variant::Isotropic;
  m.scale_ = scale;
  return m;
}

CovarianceModel CovarianceModel::damped_fisher(Eigen::MatrixXd fisher, double damping) {
  if (!(damping > 0.0)) throw std::invalid_argument("damping must be positive");
  if (fisher.rows() != fisher.cols() || fisher.rows() == 0) {
    throw std::invalid_argument("Fisher matrix must be square and nonempty");
  }
  if (!fisher.allFinite()) throw std::invalid_argument("Fisher matrix must be finite");
  const double asym = (fisher - fisher.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, fisher.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("Fisher matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(fisher, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-8) {
    throw std::invalid_argument("Fisher matrix is not positive semidefinite");
  }
  CovarianceModel m;
  m.variant_ = Variant::DampedFisher;
  m.damping_ = damping;
  m.fisher_ = std::move(fisher);
  MatrixXd a = m.fisher_;
  a.diagonal().array() += damping;
  m.llt_.compute(a);
  if (m.llt_.info() != Eigen::Success) {
    throw std::runtime_error("Cholesky factorisation of the damped Fisher failed");
  }
  return m;
}

const Eigen::LLT<Eigen::MatrixXd>& CovarianceModel::factor() const {
  if (variant_ != Variant::DampedFisher) {
    throw std::logic_error("isotropic covariance has no Cholesky factor");
  }
  return llt_;
}

double CovarianceModel::quad_form(const Eigen::VectorXd& g) const {
  if (variant_ == Variant::Isotropic) return scale_ * g.squaredNorm();
  if (g.size() != dim()) throw std::invalid_argument("gradient length does not match Fisher");
  const VectorXd y = llt_.matrixL().solve(g);
  const double q = y.squaredNorm();
  if (!std::isfinite(q)) throw std::runtime_error("damped Fisher solve produced a non-finite value");
  return q;
}

Eigen::VectorXd CovarianceModel::quad_forms(const Eigen::MatrixXd& gradients) const {
  if (variant_ == Variant::Isotropic) {
    return scale_ * gradients.colwise().squaredNorm().transpose();
  }
  if (gradients.rows() != dim()) {
    throw std::invalid_argument("gradient length does not match Fisher");
  }
  const MatrixXd y = llt_.matrixL().solve(gradients);
  VectorXd q = y.colwise().squaredNorm().transpose();
  if (!q.allFinite()) throw std::runtime_error("damped Fisher solve produced a non-finite value");
  return q;
}

double epistemic_gradient_norm(const GradientVector& g) { return g.values.squaredNorm(); }

double aleatoric_point(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
  return p * (1.0 - p);
}

double delta_method_variance(const GradientVector& g, const CovarianceModel& cov) {
  return cov.quad_form(g.values);
}

Eigen::MatrixXd empirical_fisher(const MlpSpec& spec, const ParamVector& params,
                                 const LabeledDataset& data, FisherLabels mode,
                                 std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("empirical_fisher: empty dataset");
  const auto dim = static_cast<Index>(param_count(spec));
  if (dim > kMaxDenseParams) {
    throw std::invalid_argument("empirical_fisher: D = " + std::to_string(dim) +
                                " exceeds the dense limit of " + std::to_string(kMaxDenseParams));
  }
  check_compatible(spec, data);

  MatrixXd G;
  if (mode == FisherLabels::Observed) {
    G = per_sample_loss_jacobian(spec, params, data);
  } else {
    Rng rng = make_rng(seed, stream::kFisherLabels);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (spec.head == Head::RegressionIdentity) {
      std::normal_distribution<double> normal(0.0, 1.0);
      const MatrixXd out = forward_batch(spec, params, data.inputs);
      VectorXd sampled(data.size());
      for (Index i = 0; i < data.size(); ++i) sampled(i) = out(0, i) + spec.noise_sd * normal(rng);
      G = per_sample_loss_jacobian(spec, params, data, {}, &sampled);
    } else {
      const MatrixXd probs = predict_probs_batch(spec, params, data.inputs);
      std::vector<int> sampled(static_cast<std::size_t>(data.size()));
      for (Index i = 0; i < data.size(); ++i) {
        const double u = unit(rng);
        double acc = 0.0;
        int y = static_cast<int>(probs.rows()) - 1;
        for (Index c = 0; c < probs.rows(); ++c) {
          acc += probs(c, i);
          if (u < acc) {
            y = static_cast<int>(c);
            break;
          }
        }
        sampled[static_cast<std::size_t>(i)] = y;
      }
      G = per_sample_loss_jacobian(spec, params, data, sampled);
    }
  }
  MatrixXd F = MatrixXd::Zero(dim, dim);
  F.selfadjointView<Eigen::Lower>().rankUpdate(G, 1.0 / static_cast<double>(data.size()));
  F.triangularView<Eigen::StrictlyUpper>() = F.transpose();
  return F;
}

double laplace_epistemic(const GradientVector& g, const Eigen::MatrixXd& fisher, double lambda) {
  if (g.values.size() != fisher.rows()) {
    throw std::invalid_argument("laplace_epistemic: gradient and Fisher dimensions differ");
  }
  return CovarianceModel::damped_fisher(fisher, lambda).quad_form(g.values);
}

Eigen::MatrixXd laplace_aleatoric_batch(const MlpSpec& spec, const ParamVector& map,
                                        const CovarianceModel& cov, const Eigen::MatrixXd& inputs,
                                        int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw std::invalid_argument("laplace_aleatoric: n_draws must be >= 1");
  if (spec.head == Head::RegressionIdentity) {
    throw std::invalid_argument("laplace_aleatoric: classification head required");
  }
  const Index dim = map.values.size();
  if (cov.variant() != CovarianceModel::Variant::DampedFisher || cov.dim() != dim) {
    throw std::invalid_argument("laplace_aleatoric: damped Fisher of matching size required");
  }
  Rng rng = make_rng(seed, stream::kLaplace);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(dim, n_draws);
  for (Index s = 0; s < n_draws; ++s) {
    for (Index j = 0; j < dim; ++j) z(j, s) = normal(rng);
  }
  cov.factor().matrixU().solveInPlace(z);

  MatrixXd acc = MatrixXd::Zero(spec.class_count(), inputs.rows());
  ParamVector theta{map.values};
  for (Index s = 0; s < n_draws; ++s) {
    theta.values = map.values + z.col(s);
    const MatrixXd p = predict_probs_batch(spec, theta, inputs);
    acc.array() += p.array() * (1.0 - p.array());
  }
  return acc / static_cast<double>(n_draws);
}

double laplace_aleatoric(const MlpSpec& spec, const ParamVector& map, const Eigen::MatrixXd& fisher,
                         double lambda, std::span<const double> x, int c, int n_draws,
                         std::uint64_t seed) {
  if (c < 0 || c >= spec.class_count()) throw std::invalid_argument("class index out of range");
  const CovarianceModel cov = CovarianceModel::damped_fisher(fisher, lambda);
  return laplace_aleatoric_batch(spec, map, cov, row_of(x), n_draws, seed)(c, 0);
}

void SequenceGradients::validate() const {
  if (per_token_grads.empty()) throw std::invalid_argument("sequence must hold at least one token");
  if (per_token_probs.size() != per_token_grads.size()) {
    throw std::invalid_argument("one probability per token gradient required");
  }
  const Index dim = per_token_grads.front().values.size();
  for (const auto& g : per_token_grads) {
    if (g.values.size() != dim) throw std::invalid_argument("token gradients differ in length");
  }
  for (double p : per_token_probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("token probability outside [0, 1]");
  }
}

SequenceGradients sequence_gradients(const MlpSpec& spec, const ParamVector& params,
                                     const Eigen::MatrixXd& contexts, std::span<const int> tokens) {
  if (static_cast<Index>(tokens.size()) != contexts.rows() || tokens.empty()) {
    throw std::invalid_argument("sequence_gradients: one context row per token required");
  }
  SequenceGradients sg;
  for (Index t = 0; t < contexts.rows(); ++t) {
    const VectorXd row = contexts.row(t).transpose();
    const std::span<const double> x(row.data(), static_cast<std::size_t>(row.size()));
    const int c = tokens[static_cast<std::size_t>(t)];
    sg.per_token_probs.push_back(predict_prob(spec, params, x, c));
    sg.per_token_grads.push_back(grad_prob(spec, params, x, c));
  }
  return sg;
}

double sequence_epistemic(const SequenceGradients& sg) {
  sg.validate();
  VectorXd mean = VectorXd::Zero(sg.per_token_grads.front().values.size());
  for (const auto& g : sg.per_token_grads) mean += g.values;
  mean /= static_cast<double>(sg.per_token_grads.size());
  return mean.squaredNorm();
}

double sequence_aleatoric(const SequenceGradients& sg) {
  sg.validate();
  double acc = 0.0;
  for (double p : sg.per_token_probs) acc += aleatoric_point(p);
  return acc / static_cast<double>(sg.per_token_probs.size());
}

void EvalGrid::validate() const {
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  if (!(std::isfinite(x1_min) && std::isfinite(x1_max) && x1_max > x1_min)) {
    throw std::invalid_argument("grid x1 range must be finite and nondegenerate");
  }
  if (x2 && !(std::isfinite(x2->first) && std::isfinite(x2->second) && x2->second > x2->first)) {
    throw std::invalid_argument("grid x2 range must be finite and nondegenerate");
  }
}

namespace {
std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}
}  // namespace

std::vector<double> EvalGrid::xs() const { return linspace(x1_min, x1_max, resolution); }

std::vector<double> EvalGrid::ys() const {
  if (!x2) return {};
  return linspace(x2->first, x2->second, resolution);
}

Eigen::MatrixXd EvalGrid::points() const {
  validate();
  const auto gx = xs();
  if (!x2) {
    MatrixXd p(resolution, 1);
    for (int i = 0; i < resolution; ++i) p(i, 0) = gx[static_cast<std::size_t>(i)];
    return p;
  }
  const auto gy = ys();
  MatrixXd p(static_cast<Index>(resolution) * resolution, 2);
  Index r = 0;
  for (double y : gy) {
    for (double x : gx) {
      p(r, 0) = x;
      p(r, 1) = y;
      ++r;
    }
  }
  return p;
}

EvalGrid EvalGrid::around(const Eigen::MatrixXd& inputs, double expand, int resolution) {
  if (inputs.rows() == 0 || inputs.cols() < 1 || inputs.cols() > 2) {
    throw std::invalid_argument("EvalGrid::around needs 1D or 2D inputs");
  }
  auto widen = [&](Index col) {
    const double lo = inputs.col(col).minCoeff();
    const double hi = inputs.col(col).maxCoeff();
    const double pad = 0.5 * expand * (hi - lo);
    return std::pair{lo - pad, hi + pad};
  };
  EvalGrid g;
  g.resolution = resolution;
  std::tie(g.x1_min, g.x1_max) = widen(0);
  if (inputs.cols() == 2) g.x2 = widen(1);
  g.validate();
  return g;
}

void UncertaintyMap::validate() const {
  const Index rows = grid_ys.empty() ? 1 : static_cast<Index>(grid_ys.size());
  if (values.rows() != rows || values.cols() != static_cast<Index>(grid_xs.size())) {
    throw std::invalid_argument("map values do not match the grid");
  }
  if (!values.allFinite() || (values.size() > 0 && values.minCoeff() < 0.0)) {
    throw std::invalid_argument("map values must be finite and nonnegative");
  }
}

std::string to_string(MapEstimator e) {
  switch (e) {
    case MapEstimator::GradientNorm:
      return "gn";
    case MapEstimator::Laplace:
      return "la";
    case MapEstimator::AleatoricPoint:
      return "aleatoric";
  }
  return "unknown";
}

UncertaintyMap uncertainty_map(const MlpSpec& spec, const ParamVector& map, const EvalGrid& grid,
                               MapEstimator estimator, int c,
                               const std::optional<CovarianceModel>& cov) {
  const bool damped = cov && cov->variant() == CovarianceModel::Variant::DampedFisher;
  if (estimator == MapEstimator::Laplace && !damped) {
    throw std::invalid_argument("laplace map requires a damped Fisher covariance");
  }
  if (estimator == MapEstimator::GradientNorm && damped) {
    throw std::invalid_argument("gradient-norm map takes an isotropic covariance only");
  }
  if (estimator == MapEstimator::AleatoricPoint && spec.head == Head::RegressionIdentity) {
    throw std::invalid_argument("aleatoric point map requires a classification head");
  }
  if (spec.input_dim != (grid.is_2d() ? 2 : 1)) {
    throw std::invalid_argument("grid dimension does not match the model input");
  }

  const MatrixXd pts = grid.points();
  VectorXd v(pts.rows());
  switch (estimator) {
    case MapEstimator::GradientNorm:
      v = (cov ? cov->scale() : 1.0) * target_grad_sqnorms(spec, map, pts, c);
      break;
    case MapEstimator::Laplace:
      for (Index start = 0; start < pts.rows(); start += kJacobianChunk) {
        const Index len = std::min(kJacobianChunk, pts.rows() - start);
        const MatrixXd J = target_jacobian(spec, map, pts.middleRows(start, len), c);
        v.segment(start, len) = cov->quad_forms(J);
      }
      break;
    case MapEstimator::AleatoricPoint: {
      const VectorXd p = target_batch(spec, map, pts, c);
      v = p.array() * (1.0 - p.array());
      break;
    }
  }

  UncertaintyMap out;
  out.grid_xs = grid.xs();
  out.grid_ys = grid.ys();
  out.estimator_name = to_string(estimator);
  const Index nx = static_cast<Index>(out.grid_xs.size());
  const Index ny = out.grid_ys.empty() ? 1 : static_cast<Index>(out.grid_ys.size());
  out.values.resize(ny, nx);
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) out.values(iy, ix) = std::max(0.0, v(iy * nx + ix));
  }
  return out;
}

UncertaintyMap normalize_map(const UncertaintyMap& map) {
  map.validate();
  UncertaintyMap out = map;
  out.normalized = true;
  if (map.values.size() == 0) return out;
  const double lo = map.values.minCoeff();
  const double hi = map.values.maxCoeff();
  if (!(hi > lo)) {
    out.values.setZero();
    out.was_constant = true;
    return out;
  }
  out.values = (map.values.array() - lo) / (hi - lo);
  return out;
}

}  // namespace isouq
