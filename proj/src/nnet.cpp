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

#include "isouq/nnet.hpp"

#include "isouq/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace isouq {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Layer {
  Index fan_in;
  Index fan_out;
  Index offset;  // start of the weight block; bias follows at offset + fan_in * fan_out
};

std::vector<Layer> layers_of(const MlpSpec& spec) {
  std::vector<Layer> out;
  Index fan_in = spec.input_dim;
  Index offset = 0;
  auto add = [&](Index fan_out) {
    out.push_back({fan_in, fan_out, offset});
    offset += (fan_in + 1) * fan_out;
    fan_in = fan_out;
  };
  for (int w : spec.hidden_widths) add(w);
  add(spec.output_dim);
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z))
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void softmax_inplace(Eigen::Ref<VectorXd> z) {
  const double m = z.maxCoeff();
  z = (z.array() - m).exp();
  z /= z.sum();
}

struct Trace {
  std::vector<Layer> layers;
  // acts[l] is the input to layer l (fan_in x n); acts[0] holds the raw inputs.
  std::vector<MatrixXd> acts;
  MatrixXd out;
};

void check_params(const MlpSpec& spec, const ParamVector& params) {
  if (static_cast<std::size_t>(params.values.size()) != param_count(spec)) {
    throw std::invalid_argument("parameter vector length " + std::to_string(params.values.size()) +
                                " does not match spec (" + std::to_string(param_count(spec)) + ")");
  }
}

void check_inputs(const MlpSpec& spec, const MatrixXd& inputs) {
  if (inputs.cols() != spec.input_dim) {
    throw std::invalid_argument("input dimension " + std::to_string(inputs.cols()) +
                                " does not match spec input_dim " + std::to_string(spec.input_dim));
  }
}

void check_class(const MlpSpec& spec, int c) {
  if (spec.head == Head::RegressionIdentity) {
    throw std::invalid_argument("class probabilities are undefined for a regression head");
  }
  if (c < 0 || c >= spec.class_count()) {
    throw std::invalid_argument("class index " + std::to_string(c) + " out of range");
  }
}

Trace run_forward(const MlpSpec& spec, const VectorXd& theta, const MatrixXd& inputs) {
  Trace t;
  t.layers = layers_of(spec);
  t.acts.reserve(t.layers.size());
  t.acts.push_back(inputs.transpose());
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const Layer& L = t.layers[l];
    Eigen::Map<const MatrixXd> W(theta.data() + L.offset, L.fan_out, L.fan_in);
    Eigen::Map<const VectorXd> b(theta.data() + L.offset + L.fan_in * L.fan_out, L.fan_out);
    MatrixXd z = W * t.acts[l];
    z.colwise() += b;
    if (l + 1 < t.layers.size()) {
      t.acts.push_back(z.array().tanh().matrix());
    } else {
      t.out = std::move(z);
    }
  }
  return t;
}

// dL/dz for every layer's pre-activation, given dL/d(out).
std::vector<MatrixXd> run_backward(const VectorXd& theta, const Trace& t, MatrixXd d_out) {
  const std::size_t n_layers = t.layers.size();
  std::vector<MatrixXd> deltas(n_layers);
  deltas[n_layers - 1] = std::move(d_out);
  for (std::size_t l = n_layers - 1; l > 0; --l) {
    const Layer& L = t.layers[l];
    Eigen::Map<const MatrixXd> W(theta.data() + L.offset, L.fan_out, L.fan_in);
    MatrixXd d_act = W.transpose() * deltas[l];
    deltas[l - 1] = (d_act.array() * (1.0 - t.acts[l].array().square())).matrix();
  }
  return deltas;
}

VectorXd accumulate_gradient(const Trace& t, const std::vector<MatrixXd>& deltas, Index dim) {
  VectorXd g(dim);
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const Layer& L = t.layers[l];
    Eigen::Map<MatrixXd> dW(g.data() + L.offset, L.fan_out, L.fan_in);
    dW.noalias() = deltas[l] * t.acts[l].transpose();
    g.segment(L.offset + L.fan_in * L.fan_out, L.fan_out) = deltas[l].rowwise().sum();
  }
  return g;
}

MatrixXd per_column_gradients(const Trace& t, const std::vector<MatrixXd>& deltas, Index dim) {
  const Index n = t.acts[0].cols();
  MatrixXd G(dim, n);
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const Layer& L = t.layers[l];
    for (Index i = 0; i < n; ++i) {
      Eigen::Map<MatrixXd> dW(G.col(i).data() + L.offset, L.fan_out, L.fan_in);
      dW.noalias() = deltas[l].col(i) * t.acts[l].col(i).transpose();
      G.col(i).segment(L.offset + L.fan_in * L.fan_out, L.fan_out) = deltas[l].col(i);
    }
  }
  return G;
}

// d target / d out for every column; classes[i] selects the class of column i.
MatrixXd target_seed(const MlpSpec& spec, const MatrixXd& out, std::span<const int> classes) {
  MatrixXd d(out.rows(), out.cols());
  for (Index i = 0; i < out.cols(); ++i) {
    const int c = classes.size() == 1 ? classes[0] : classes[static_cast<std::size_t>(i)];
    switch (spec.head) {
      case Head::BinarySigmoid: {
        const double z = out(0, i);
        const double s = sigmoid(z) * sigmoid(-z);
        d(0, i) = c == 1 ? s : -s;
        break;
      }
      case Head::MulticlassSoftmax: {
        VectorXd p = out.col(i);
        softmax_inplace(p);
        d.col(i) = -p(c) * p;
        d(c, i) += p(c);
        break;
      }
      case Head::RegressionIdentity:
        d(0, i) = 1.0;
        break;
    }
  }
  return d;
}

// Per-sample NLL and its derivative with respect to the head output.
void loss_seed(const MlpSpec& spec, const MatrixXd& out, std::span<const int> labels,
               const VectorXd* targets, VectorXd& nll, MatrixXd& d) {
  const Index n = out.cols();
  nll.resize(n);
  d.resize(out.rows(), n);
  for (Index i = 0; i < n; ++i) {
    switch (spec.head) {
      case Head::BinarySigmoid: {
        const double z = out(0, i);
        const int y = labels[static_cast<std::size_t>(i)];
        nll(i) = softplus(z) - (y == 1 ? z : 0.0);
        d(0, i) = sigmoid(z) - y;
        break;
      }
      case Head::MulticlassSoftmax: {
        const int y = labels[static_cast<std::size_t>(i)];
        const double m = out.col(i).maxCoeff();
        const double lse = m + std::log((out.col(i).array() - m).exp().sum());
        nll(i) = lse - out(y, i);
        VectorXd p = out.col(i);
        softmax_inplace(p);
        d.col(i) = p;
        d(y, i) -= 1.0;
        break;
      }
      case Head::RegressionIdentity: {
        const double var = spec.noise_sd * spec.noise_sd;
        const double r = out(0, i) - (*targets)(i);
        nll(i) = 0.5 * r * r / var;
        d(0, i) = r / var;
        break;
      }
    }
  }
}

MatrixXd as_row(std::span<const double> x) {
  MatrixXd m(1, static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) m(0, static_cast<Index>(j)) = x[j];
  return m;
}

}  // namespace

MlpSpec MlpSpec::binary(int input_dim, std::vector<int> hidden) {
  MlpSpec s;
  s.input_dim = input_dim;
  s.hidden_widths = std::move(hidden);
  s.output_dim = 1;
  s.head = Head::BinarySigmoid;
  return s;
}

MlpSpec MlpSpec::softmax(int input_dim, std::vector<int> hidden, int classes) {
  MlpSpec s;
  s.input_dim = input_dim;
  s.hidden_widths = std::move(hidden);
  s.output_dim = classes;
  s.head = Head::MulticlassSoftmax;
  return s;
}

MlpSpec MlpSpec::regression(int input_dim, std::vector<int> hidden, double noise_sd) {
  MlpSpec s;
  s.input_dim = input_dim;
  s.hidden_widths = std::move(hidden);
  s.output_dim = 1;
  s.head = Head::RegressionIdentity;
  s.noise_sd = noise_sd;
  return s;
}

void MlpSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("MlpSpec: dimensions must be positive");
  }
  for (int w : hidden_widths) {
    if (w <= 0) throw std::invalid_argument("MlpSpec: hidden widths must be positive");
  }
  if (head == Head::BinarySigmoid && output_dim != 1) {
    throw std::invalid_argument("MlpSpec: binary-sigmoid head requires output_dim == 1");
  }
  if (head == Head::MulticlassSoftmax && output_dim < 2) {
    throw std::invalid_argument("MlpSpec: multiclass-softmax head requires output_dim >= 2");
  }
  if (head == Head::RegressionIdentity && !(noise_sd > 0.0 && std::isfinite(noise_sd))) {
    throw std::invalid_argument("MlpSpec: regression noise_sd must be positive");
  }
}

int MlpSpec::class_count() const {
  switch (head) {
    case Head::BinarySigmoid:
      return 2;
    case Head::MulticlassSoftmax:
      return output_dim;
    case Head::RegressionIdentity:
      return 0;
  }
  return 0;
}

std::string MlpSpec::name() const {
  if (hidden_widths.empty()) {
    switch (head) {
      case Head::BinarySigmoid:
        return "logreg";
      case Head::MulticlassSoftmax:
        return "softmax";
      case Head::RegressionIdentity:
        return "linreg";
    }
  }
  std::string s = "mlp(";
  for (std::size_t i = 0; i < hidden_widths.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(hidden_widths[i]);
  }
  s += ')';
  if (head == Head::MulticlassSoftmax) s += "/k" + std::to_string(output_dim);
  return s;
}

std::size_t param_count(const MlpSpec& spec) {
  std::size_t total = 0;
  std::size_t fan_in = static_cast<std::size_t>(spec.input_dim);
  for (int w : spec.hidden_widths) {
    total += (fan_in + 1) * static_cast<std::size_t>(w);
    fan_in = static_cast<std::size_t>(w);
  }
  total += (fan_in + 1) * static_cast<std::size_t>(spec.output_dim);
  return total;
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p{VectorXd::Zero(static_cast<Index>(param_count(spec)))};
  Rng rng = make_rng(seed, stream::kInit);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const Layer& L : layers_of(spec)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(L.fan_in));
    for (Index k = 0; k < L.fan_in * L.fan_out; ++k) p.values(L.offset + k) = scale * normal(rng);
  }
  return p;
}

Eigen::MatrixXd forward_batch(const MlpSpec& spec, const ParamVector& params,
                              const Eigen::MatrixXd& inputs) {
  check_params(spec, params);
  check_inputs(spec, inputs);
  return run_forward(spec, params.values, inputs).out;
}

Eigen::VectorXd forward(const MlpSpec& spec, const ParamVector& params,
                        std::span<const double> x) {
  return forward_batch(spec, params, as_row(x)).col(0);
}

Eigen::MatrixXd predict_probs_batch(const MlpSpec& spec, const ParamVector& params,
                                    const Eigen::MatrixXd& inputs) {
  if (spec.head == Head::RegressionIdentity) {
    throw std::invalid_argument("class probabilities are undefined for a regression head");
  }
  const MatrixXd out = forward_batch(spec, params, inputs);
  if (spec.head == Head::BinarySigmoid) {
    MatrixXd p(2, out.cols());
    for (Index i = 0; i < out.cols(); ++i) {
      p(0, i) = sigmoid(-out(0, i));
      p(1, i) = sigmoid(out(0, i));
    }
    return p;
  }
  MatrixXd p = out;
  for (Index i = 0; i < p.cols(); ++i) softmax_inplace(p.col(i));
  return p;
}

double predict_prob(const MlpSpec& spec, const ParamVector& params, std::span<const double> x,
                    int c) {
  check_class(spec, c);
  return predict_probs_batch(spec, params, as_row(x))(c, 0);
}

Eigen::VectorXd target_batch(const MlpSpec& spec, const ParamVector& params,
                             const Eigen::MatrixXd& inputs, int c) {
  if (spec.head == Head::RegressionIdentity) return forward_batch(spec, params, inputs).row(0);
  check_class(spec, c);
  return predict_probs_batch(spec, params, inputs).row(c).transpose();
}

Eigen::MatrixXd target_jacobian(const MlpSpec& spec, const ParamVector& params,
                                const Eigen::MatrixXd& inputs, int c) {
  check_params(spec, params);
  check_inputs(spec, inputs);
  if (spec.head != Head::RegressionIdentity) check_class(spec, c);
  const Trace t = run_forward(spec, params.values, inputs);
  const int cls[] = {c};
  const auto deltas = run_backward(params.values, t, target_seed(spec, t.out, cls));
  return per_column_gradients(t, deltas, params.values.size());
}

GradientVector grad_prob(const MlpSpec& spec, const ParamVector& params,
                         std::span<const double> x, int c) {
  check_class(spec, c);
  return GradientVector{target_jacobian(spec, params, as_row(x), c).col(0)};
}

Eigen::VectorXd target_grad_sqnorms(const MlpSpec& spec, const ParamVector& params,
                                    const Eigen::MatrixXd& inputs, int c) {
  check_params(spec, params);
  check_inputs(spec, inputs);
  if (spec.head != Head::RegressionIdentity) check_class(spec, c);
  const Trace t = run_forward(spec, params.values, inputs);
  const int cls[] = {c};
  const auto deltas = run_backward(params.values, t, target_seed(spec, t.out, cls));
  VectorXd sq = VectorXd::Zero(inputs.rows());
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    const VectorXd a2 = t.acts[l].colwise().squaredNorm().transpose();
    const VectorXd d2 = deltas[l].colwise().squaredNorm().transpose();
    sq.array() += d2.array() * (a2.array() + 1.0);
  }
  return sq;
}

GradientVector grad_mean_target(const MlpSpec& spec, const ParamVector& params,
                                const Eigen::MatrixXd& inputs, std::span<const int> classes) {
  check_params(spec, params);
  check_inputs(spec, inputs);
  if (static_cast<Index>(classes.size()) != inputs.rows() || inputs.rows() == 0) {
    throw std::invalid_argument("grad_mean_target: one class per input row required");
  }
  if (spec.head != Head::RegressionIdentity) {
    for (int c : classes) check_class(spec, c);
  }
  const Trace t = run_forward(spec, params.values, inputs);
  MatrixXd seed = target_seed(spec, t.out, classes) / static_cast<double>(inputs.rows());
  const auto deltas = run_backward(params.values, t, std::move(seed));
  return GradientVector{accumulate_gradient(t, deltas, params.values.size())};
}

void check_compatible(const MlpSpec& spec, const LabeledDataset& data) {
  spec.validate();
  data.validate();
  if (data.dim() != spec.input_dim) {
    throw std::invalid_argument("dataset dimension does not match spec input_dim");
  }
  if (spec.head == Head::RegressionIdentity) {
    if (!data.is_regression()) throw std::invalid_argument("regression head needs real targets");
    return;
  }
  if (data.is_regression()) throw std::invalid_argument("classification head needs labels");
  for (int y : data.labels) {
    if (y < 0 || y >= spec.class_count()) {
      throw std::invalid_argument("label " + std::to_string(y) + " invalid for model head");
    }
  }
}

LossAndGradient grad_loss(const MlpSpec& spec, const ParamVector& params,
                          const LabeledDataset& data, double prior_precision) {
  if (data.size() == 0) throw std::invalid_argument("grad_loss: empty dataset");
  if (!(prior_precision >= 0.0)) throw std::invalid_argument("grad_loss: negative precision");
  check_params(spec, params);
  check_inputs(spec, data.inputs);
  const Trace t = run_forward(spec, params.values, data.inputs);
  VectorXd nll;
  MatrixXd d;
  loss_seed(spec, t.out, data.labels, &data.targets, nll, d);
  const double n = static_cast<double>(data.size());
  d /= n;
  const auto deltas = run_backward(params.values, t, std::move(d));
  LossAndGradient r;
  r.grad.values = accumulate_gradient(t, deltas, params.values.size());
  r.loss = nll.sum() / n;
  if (prior_precision > 0.0) {
    r.loss += 0.5 * prior_precision * params.values.squaredNorm();
    r.grad.values += prior_precision * params.values;
  }
  return r;
}

Eigen::MatrixXd per_sample_loss_jacobian(const MlpSpec& spec, const ParamVector& params,
                                         const LabeledDataset& data, std::span<const int> labels,
                                         const Eigen::VectorXd* targets) {
  check_params(spec, params);
  check_inputs(spec, data.inputs);
  const Trace t = run_forward(spec, params.values, data.inputs);
  VectorXd nll;
  MatrixXd d;
  loss_seed(spec, t.out, labels.empty() ? std::span<const int>(data.labels) : labels,
            targets ? targets : &data.targets, nll, d);
  const auto deltas = run_backward(params.values, t, std::move(d));
  return per_column_gradients(t, deltas, params.values.size());
}

double accuracy(const MlpSpec& spec, const ParamVector& params, const LabeledDataset& data) {
  const MatrixXd p = predict_probs_batch(spec, params, data.inputs);
  Index correct = 0;
  for (Index i = 0; i < p.cols(); ++i) {
    Index arg = 0;
    p.col(i).maxCoeff(&arg);
    if (arg == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.cols());
}

double rmse(const MlpSpec& spec, const ParamVector& params, const LabeledDataset& data) {
  const MatrixXd out = forward_batch(spec, params, data.inputs);
  return std::sqrt((out.row(0).transpose() - data.targets).squaredNorm() /
                   static_cast<double>(data.size()));
}

}  // namespace isouq
