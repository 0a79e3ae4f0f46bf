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

#include "isouq/refpost.hpp"

#include "isouq/synthgen.hpp"
#include "isouq/trainmap.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

namespace isouq {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double logit(double p) { return std::log(p / (1.0 - p)); }

// Logistic model on a 1D input; at x = 0 the probability is sigmoid(bias).
const MlpSpec kLogit1d = MlpSpec::binary(1, {});
const std::vector<double> kOrigin{0.0};

PosteriorSamples draws_with_biases(const std::vector<double>& biases) {
  PosteriorSamples s;
  s.draws = MatrixXd::Zero(static_cast<Eigen::Index>(biases.size()), 2);
  for (std::size_t i = 0; i < biases.size(); ++i) s.draws(static_cast<Eigen::Index>(i), 1) = biases[i];
  return s;
}

TEST_CASE("HMC recovers a 2D standard normal") {
  const LogDensityFn target = [](const VectorXd& t, VectorXd& g) {
    g = -t;
    return -0.5 * t.squaredNorm();
  };
  HmcConfig cfg;
  cfg.seed = 0;
  const PosteriorSamples s = hmc_sample(target, ParamVector{VectorXd::Zero(2)}, cfg);
  REQUIRE(s.size() == 4000);
  const VectorXd mean = s.draws.colwise().mean().transpose();
  const MatrixXd c = s.draws.rowwise() - mean.transpose();
  const MatrixXd cov = c.transpose() * c / (s.size() - 1.0);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
  CHECK((cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
  CHECK(std::abs(s.accept_rate - 0.8) <= 0.1);
  for (double a : s.per_chain_accept_rate) CHECK(std::abs(a - 0.8) <= 0.1);
  CHECK(s.sampling_divergences == 0);
}

TEST_CASE("HMC recovers a correlated anisotropic Gaussian") {
  MatrixXd sigma(2, 2);
  sigma << 4.0, 1.2, 1.2, 0.5;
  const MatrixXd prec = sigma.inverse();
  const VectorXd mu = Eigen::Vector2d(1.0, -2.0);
  const LogDensityFn target = [&](const VectorXd& t, VectorXd& g) {
    const VectorXd d = t - mu;
    g = -prec * d;
    return -0.5 * d.dot(prec * d);
  };
  HmcConfig cfg;
  cfg.seed = 7;
  const PosteriorSamples s = hmc_sample(target, ParamVector{mu}, cfg);
  const VectorXd mean = s.draws.colwise().mean().transpose();
  const MatrixXd c = s.draws.rowwise() - mean.transpose();
  const MatrixXd cov = c.transpose() * c / (s.size() - 1.0);
  CHECK((mean - mu).cwiseAbs().maxCoeff() < 0.15);
  CHECK((cov - sigma).cwiseAbs().maxCoeff() < 0.3);
}

TEST_CASE("chain k uses substream k regardless of the chain count") {
  const LogDensityFn target = [](const VectorXd& t, VectorXd& g) {
    g = -t;
    return -0.5 * t.squaredNorm();
  };
  HmcConfig cfg;
  cfg.warmup_iters = 50;
  cfg.sample_iters = 30;
  cfg.seed = 3;
  const PosteriorSamples four = hmc_sample(target, ParamVector{VectorXd::Zero(3)}, cfg);
  cfg.chains = 2;
  const PosteriorSamples two = hmc_sample(target, ParamVector{VectorXd::Zero(3)}, cfg);
  CHECK(two.draws == four.draws.topRows(60));
  CHECK(two.per_chain_step_size[1] == four.per_chain_step_size[1]);
  cfg.chains = 4;
  CHECK(hmc_sample(target, ParamVector{VectorXd::Zero(3)}, cfg).draws == four.draws);
  cfg.thin = 3;
  CHECK(hmc_sample(target, ParamVector{VectorXd::Zero(3)}, cfg).size() == 4 * 10);
}

TEST_CASE("configuration preconditions") {
  HmcConfig cfg;
  cfg.sample_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = HmcConfig{};
  cfg.target_accept = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = HmcConfig{};
  cfg.chains = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("a target that rejects every move aborts during warmup") {
  const LogDensityFn pinned = [](const VectorXd& t, VectorXd& g) {
    g = VectorXd::Zero(t.size());
    return t.isZero(0.0) ? 0.0 : std::nan("");
  };
  HmcConfig cfg;
  cfg.warmup_iters = 20;
  cfg.sample_iters = 5;
  cfg.init_sd = 0.0;
  CHECK_THROWS_AS((void)hmc_sample(pinned, ParamVector{VectorXd::Zero(2)}, cfg), HmcDivergenceError);
}

TEST_CASE("posterior log density is -n times the training loss") {
  const auto data = synth::make_linear2d(30, 0.25, 2);
  const auto spec = MlpSpec::binary(2, {3});
  const PosteriorLogDensity f(spec, data, 0.1);
  Rng rng = make_rng(1);
  const ParamVector theta = testing::random_params(spec, rng);
  VectorXd g;
  const double lp = f(theta.values, g);
  const auto lg = grad_loss(spec, theta, data, 0.1);
  CHECK(lp == doctest::Approx(-30.0 * lg.loss).epsilon(1e-14));
  CHECK((g + 30.0 * lg.grad.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(PosteriorLogDensity(spec, data, 0.0), std::invalid_argument);
}

TEST_CASE("draws stay near the posterior mode") {
  const auto data = synth::make_linear2d(100, 0.25, 0);
  const auto spec = MlpSpec::binary(2, {});
  const TrainConfig tc;
  const auto theta = train_map(spec, data, tc).first;
  const PosteriorLogDensity f(spec, data, tc.prior_precision);
  HmcConfig cfg;
  cfg.sample_iters = 300;
  const PosteriorSamples s = hmc_sample(std::cref(f), theta, cfg);
  VectorXd g;
  const double at_mode = f(theta.values, g);
  for (double m : s.per_chain_mean_log_density) CHECK(m <= at_mode + 1e-6);
  CHECK(std::abs(s.accept_rate - cfg.target_accept) <= 0.1);
}

TEST_CASE("ref_epistemic and ref_aleatoric special values") {
  const auto same = draws_with_biases({0.4, 0.4, 0.4});
  CHECK(ref_epistemic(same, kLogit1d, kOrigin, 1) == 0.0);

  const auto pair = draws_with_biases({logit(0.2), logit(0.8)});
  CHECK(ref_epistemic(pair, kLogit1d, kOrigin, 1) == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(ref_epistemic(pair, kLogit1d, kOrigin, 0) == doctest::Approx(0.18).epsilon(1e-12));

  const auto half = draws_with_biases({0.0, 0.0, 0.0, 0.0});
  CHECK(ref_aleatoric(half, kLogit1d, kOrigin, 1) == 0.25);
  const auto certain = draws_with_biases({1000.0, -1000.0, 1000.0});
  CHECK(ref_aleatoric(certain, kLogit1d, kOrigin, 1) == 0.0);

  CHECK_THROWS_AS((void)ref_epistemic(draws_with_biases({0.1}), kLogit1d, kOrigin, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)ref_epistemic(pair, kLogit1d, kOrigin, 2), std::invalid_argument);
}

TEST_CASE("reference moments match a two-pass recomputation") {
  Rng rng = make_rng(17);
  const auto spec = MlpSpec::softmax(2, {4}, 3);
  PosteriorSamples s;
  s.draws = MatrixXd(257, static_cast<Eigen::Index>(param_count(spec)));
  for (Eigen::Index i = 0; i < s.draws.rows(); ++i) {
    s.draws.row(i) = testing::random_params(spec, rng).values.transpose();
  }
  const std::vector<double> x{0.3, -0.8};
  for (int c = 0; c < 3; ++c) {
    std::vector<double> ps;
    for (Eigen::Index i = 0; i < s.draws.rows(); ++i) {
      ps.push_back(predict_prob(spec, ParamVector{s.draws.row(i).transpose()}, x, c));
    }
    double mean = 0.0;
    for (double p : ps) mean += p;
    mean /= ps.size();
    double ss = 0.0;
    double alea = 0.0;
    for (double p : ps) {
      ss += (p - mean) * (p - mean);
      alea += p * (1.0 - p);
    }
    CHECK(ref_epistemic(s, spec, x, c) == doctest::Approx(ss / (ps.size() - 1.0)).epsilon(1e-12));
    CHECK(ref_aleatoric(s, spec, x, c) == doctest::Approx(alea / ps.size()).epsilon(1e-12));
  }
}

TEST_CASE("epistemic plus aleatoric reproduces the outcome variance") {
  Rng rng = make_rng(23);
  const auto spec = MlpSpec::binary(2, {3});
  PosteriorSamples s;
  const int n_draws = 4000;
  s.draws = MatrixXd(n_draws, static_cast<Eigen::Index>(param_count(spec)));
  for (int i = 0; i < n_draws; ++i) s.draws.row(i) = testing::random_params(spec, rng, 1.2).values.transpose();
  const std::vector<double> x{0.5, 1.0};
  const double epi = ref_epistemic(s, spec, x, 1);
  const double ale = ref_aleatoric(s, spec, x, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n_draws; ++i) {
      const double p = predict_prob(spec, ParamVector{s.draws.row(i).transpose()}, x, 1);
      const double y = unit(rng) < p ? 1.0 : 0.0;
      sum += y;
      sum_sq += y * y;
    }
    const double var = (sum_sq - sum * sum / n_draws) / (n_draws - 1.0);
    CHECK(std::abs(var - (epi + ale)) <= 3.0 / std::sqrt(static_cast<double>(n_draws)));
  }
}

TEST_CASE("draw dumps round-trip exactly") {
  Rng rng = make_rng(2);
  PosteriorSamples s;
  s.draws = MatrixXd::Random(13, 5) * 1e3;
  s.draws(0, 0) = -0.0;
  s.draws(1, 1) = 1e-310;
  const auto dir = testing::scratch_dir("draws");
  write_draws(s, 99, dir / "d.hmc");
  const std::string bytes = testing::slurp(dir / "d.hmc");
  const std::string header = "HMC1 13 5 99\n";
  CHECK(bytes.substr(0, header.size()) == header);
  CHECK(bytes.size() == header.size() + 13 * 5 * 8);
  const DrawDump back = read_draws(dir / "d.hmc");
  CHECK(back.seed == 99);
  CHECK(back.draws == s.draws);
  CHECK(std::signbit(back.draws(0, 0)));
}

}  // namespace
}  // namespace isouq
