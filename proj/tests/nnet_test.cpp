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

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

namespace isouq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::central_difference;
using testing::random_dataset;
using testing::random_params;
using testing::random_spec;
using testing::relative_error;

std::vector<double> as_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TEST_CASE("param_count follows the per-layer (fan_in + 1) * fan_out sum") {
  CHECK(param_count(MlpSpec::binary(2, {})) == 3);
  CHECK(param_count(MlpSpec::binary(2, {8, 8})) == 3 * 8 + 9 * 8 + 9 * 1);
  // 1185 solves w^2 + 5w + 1 = 1185 at w = 32 for the single-logit head.
  CHECK(param_count(MlpSpec::binary(2, {32, 32})) == 1185);
  CHECK(param_count(MlpSpec::regression(1, {32}, 1.0)) == 97);
  CHECK(param_count(MlpSpec::regression(1, {}, 1.0)) == 2);
  // A four-logit head gives the larger counts.
  CHECK(param_count(MlpSpec::softmax(2, {}, 4)) == 12);
  CHECK(param_count(MlpSpec::softmax(2, {8, 8}, 4)) == 132);
  CHECK(param_count(MlpSpec::softmax(2, {1028, 1028}, 4)) == 1065012);
}

TEST_CASE("MlpSpec validation") {
  MlpSpec s = MlpSpec::binary(2, {});
  s.output_dim = 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  MlpSpec m = MlpSpec::softmax(2, {}, 3);
  m.output_dim = 1;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  CHECK_THROWS_AS(MlpSpec::binary(2, {0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MlpSpec::regression(1, {}, 0.0).validate(), std::invalid_argument);
  CHECK(MlpSpec::binary(2, {8, 8}).name() == "mlp(8,8)");
  CHECK(MlpSpec::binary(2, {}).name() == "logreg");
}

TEST_CASE("init_params: zero biases, N(0, 1/fan_in) weights, deterministic") {
  const auto spec = MlpSpec::binary(2, {});
  const ParamVector p = init_params(spec, 0);
  REQUIRE(p.values.size() == 3);
  CHECK(p.values(2) == 0.0);
  CHECK(init_params(spec, 0).values == p.values);
  CHECK(init_params(spec, 1).values != p.values);

  const auto wide = MlpSpec::binary(50, {400});
  const ParamVector w = init_params(wide, 3);
  // First layer: 400 x 50 weights then 400 biases.
  const VectorXd weights = w.values.head(400 * 50);
  CHECK(weights.squaredNorm() / weights.size() == doctest::Approx(1.0 / 50).epsilon(0.05));
  CHECK(w.values.segment(400 * 50, 400).isZero(0.0));
}

TEST_CASE("zero parameters give uniform predictions") {
  const std::vector<double> x{0.3, -1.2};
  const auto bin = MlpSpec::binary(2, {4});
  const ParamVector zb{VectorXd::Zero(static_cast<Eigen::Index>(param_count(bin)))};
  CHECK(forward(bin, zb, x)(0) == 0.0);
  CHECK(predict_prob(bin, zb, x, 1) == 0.5);

  const auto soft = MlpSpec::softmax(2, {3}, 4);
  const ParamVector zs{VectorXd::Zero(static_cast<Eigen::Index>(param_count(soft)))};
  CHECK(forward(soft, zs, x).isZero(0.0));
  for (int c = 0; c < 4; ++c) CHECK(predict_prob(soft, zs, x, c) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax probabilities sum to one and stay inside (0, 1)") {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = MlpSpec::softmax(2, {5}, 3);
    const ParamVector p = random_params(spec, rng, 2.0);
    const std::vector<double> x{std::normal_distribution<double>(0, 2)(rng), 0.5};
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double pc = predict_prob(spec, p, x, c);
      CHECK(pc > 0.0);
      CHECK(pc < 1.0);
      sum += pc;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
  // Extreme logits stay finite.
  const auto spec = MlpSpec::binary(1, {});
  const ParamVector big{VectorXd::Constant(2, 800.0)};
  const double hi = predict_prob(spec, big, std::vector<double>{1.0}, 1);
  const double lo = predict_prob(spec, big, std::vector<double>{-2.0}, 1);
  CHECK(std::isfinite(hi));
  CHECK(std::isfinite(lo));
  CHECK(hi == 1.0);
  CHECK(lo == 0.0);
}

TEST_CASE("forward is pure") {
  Rng rng = make_rng(5);
  const auto spec = MlpSpec::softmax(3, {4, 3}, 3);
  const ParamVector p = random_params(spec, rng);
  const std::vector<double> x{0.1, 0.2, -0.3};
  CHECK(forward(spec, p, x) == forward(spec, p, x));
}

TEST_CASE("grad_prob matches central differences on 100 random configurations") {
  Rng rng = make_rng(2024);
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const MlpSpec spec = random_spec(rng);
    if (spec.head == Head::RegressionIdentity) continue;
    const ParamVector p = random_params(spec, rng);
    const VectorXd xv = testing::random_vector(spec.input_dim, rng);
    const auto x = as_vec(xv);
    const int c = std::uniform_int_distribution<int>(0, spec.class_count() - 1)(rng);
    const VectorXd fd = central_difference(
        [&](const VectorXd& t) { return predict_prob(spec, ParamVector{t}, x, c); }, p.values);
    const double err = relative_error(grad_prob(spec, p, x, c).values, fd);
    worst = std::max(worst, err);
    CHECK_MESSAGE(err < 1e-5, spec.name() << " c=" << c);
    ++checked;
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("regression target gradient matches central differences") {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = MlpSpec::regression(2, {std::uniform_int_distribution<int>(1, 6)(rng)}, 0.3);
    const ParamVector p = random_params(spec, rng);
    MatrixXd x(1, 2);
    x << 0.4 * trial - 3.0, 0.7;
    const VectorXd fd = central_difference(
        [&](const VectorXd& t) { return forward_batch(spec, ParamVector{t}, x)(0, 0); }, p.values);
    CHECK(relative_error(target_jacobian(spec, p, x, 0).col(0), fd) < 1e-5);
  }
}

TEST_CASE("grad_loss matches central differences for every head") {
  Rng rng = make_rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const MlpSpec spec = random_spec(rng);
    const ParamVector p = random_params(spec, rng);
    const LabeledDataset data = random_dataset(spec, 7, rng);
    const double lambda = trial % 2 == 0 ? 0.0 : 0.3;
    const VectorXd fd = central_difference(
        [&](const VectorXd& t) { return grad_loss(spec, ParamVector{t}, data, lambda).loss; },
        p.values);
    CHECK_MESSAGE(relative_error(grad_loss(spec, p, data, lambda).grad.values, fd) < 1e-5,
                  spec.name());
  }
}

TEST_CASE("grad_loss at zero parameters") {
  const auto spec = MlpSpec::binary(2, {3});
  const ParamVector zero{VectorXd::Zero(static_cast<Eigen::Index>(param_count(spec)))};
  LabeledDataset d;
  d.inputs = MatrixXd::Random(4, 2);
  d.labels = {0, 1, 0, 1};
  d.class_count = 2;
  const auto plain = grad_loss(spec, zero, d, 0.0);
  CHECK(plain.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const auto reg = grad_loss(spec, zero, d, 5.0);
  CHECK(reg.loss == plain.loss);
  CHECK(reg.grad.values == plain.grad.values);
}

TEST_CASE("softmax gradient closure: sum over classes vanishes") {
  Rng rng = make_rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const auto spec = MlpSpec::softmax(2, {4, 4}, 2 + trial % 4);
    const ParamVector p = random_params(spec, rng, 1.5);
    const auto x = as_vec(testing::random_vector(2, rng, 2.0));
    VectorXd sum = VectorXd::Zero(p.values.size());
    for (int c = 0; c < spec.class_count(); ++c) sum += grad_prob(spec, p, x, c).values;
    CHECK(sum.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("binary head: grad(c=0) is exactly -grad(c=1)") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto spec = MlpSpec::binary(2, {5});
    const ParamVector p = random_params(spec, rng, 1.5);
    const auto x = as_vec(testing::random_vector(2, rng));
    CHECK(grad_prob(spec, p, x, 0).values == -grad_prob(spec, p, x, 1).values);
  }
}

TEST_CASE("batched gradients agree with the single-point forms") {
  Rng rng = make_rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const MlpSpec spec = random_spec(rng);
    const ParamVector p = random_params(spec, rng);
    const MatrixXd x = MatrixXd::Random(9, spec.input_dim) * 2.0;
    const int c = spec.head == Head::RegressionIdentity ? 0 : spec.class_count() - 1;
    const MatrixXd jac = target_jacobian(spec, p, x, c);
    const VectorXd norms = target_grad_sqnorms(spec, p, x, c);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      CHECK(norms(i) == doctest::Approx(jac.col(i).squaredNorm()).epsilon(1e-12));
      if (spec.head != Head::RegressionIdentity) {
        const VectorXd row = x.row(i).transpose();
        const VectorXd single = grad_prob(spec, p, as_vec(row), c).values;
        CHECK((jac.col(i) - single).cwiseAbs().maxCoeff() <= 1e-14);
      }
    }
    std::vector<int> classes(static_cast<std::size_t>(x.rows()), c);
    const VectorXd mean_grad = grad_mean_target(spec, p, x, classes).values;
    CHECK((mean_grad - jac.rowwise().mean()).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("per-sample loss gradients average to the loss gradient") {
  Rng rng = make_rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const MlpSpec spec = random_spec(rng);
    const ParamVector p = random_params(spec, rng);
    const LabeledDataset data = random_dataset(spec, 11, rng);
    const MatrixXd per = per_sample_loss_jacobian(spec, p, data);
    const double lambda = 0.2;
    const VectorXd want = grad_loss(spec, p, data, lambda).grad.values;
    const VectorXd got = per.rowwise().mean() + lambda * p.values;
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("mismatched inputs are rejected") {
  const auto spec = MlpSpec::binary(2, {3});
  const ParamVector p = init_params(spec, 0);
  CHECK_THROWS_AS((void)forward(spec, ParamVector{VectorXd::Zero(2)}, std::vector<double>{0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)forward(spec, p, std::vector<double>{0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS((void)predict_prob(spec, p, std::vector<double>{0, 0}, 2), std::invalid_argument);
  const auto reg = MlpSpec::regression(2, {}, 1.0);
  CHECK_THROWS_AS((void)predict_prob(reg, init_params(reg, 0), std::vector<double>{0, 0}, 0),
                  std::invalid_argument);
}

}  // namespace
}  // namespace isouq
