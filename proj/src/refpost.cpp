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

#include "isouq/rng.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace isouq {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dual-averaging constants.
constexpr double kGamma = 0.05;
constexpr double kT0 = 10.0;
constexpr double kKappa = 0.75;

struct State {
  VectorXd theta;
  VectorXd grad;
  double log_density = 0.0;
};

struct Step {
  double accept_prob = 0.0;
  bool accepted = false;
  bool divergent = false;
};

class Chain {
 public:
  Chain(const LogDensityFn& f, Rng rng) : f_(f), rng_(std::move(rng)) {}

  void reset(VectorXd theta) {
    cur_.theta = std::move(theta);
    cur_.grad.resize(cur_.theta.size());
    cur_.log_density = f_(cur_.theta, cur_.grad);
    if (!std::isfinite(cur_.log_density) || !cur_.grad.allFinite()) {
      throw HmcDivergenceError("HMC: log density is not finite at the initial point");
    }
  }

  const State& state() const { return cur_; }

  VectorXd draw_momentum() {
    VectorXd p(cur_.theta.size());
    for (Index i = 0; i < p.size(); ++i) p(i) = normal_(rng_);
    return p;
  }

  // Integrates `steps` leapfrog steps from the current state; returns the
  // proposal and its Hamiltonian (infinite on a non-finite trajectory).
  double integrate(const VectorXd& p0, double eps, int steps, State& prop) {
    prop.theta = cur_.theta;
    prop.grad = cur_.grad;
    VectorXd p = p0 + 0.5 * eps * cur_.grad;
    for (int l = 0; l < steps; ++l) {
      prop.theta += eps * p;
      prop.log_density = f_(prop.theta, prop.grad);
      if (!std::isfinite(prop.log_density) || !prop.grad.allFinite()) {
        return std::numeric_limits<double>::infinity();
      }
      p += (l + 1 < steps ? eps : 0.5 * eps) * prop.grad;
    }
    return -prop.log_density + 0.5 * p.squaredNorm();
  }

  Step transition(double eps, int steps) {
    const VectorXd p0 = draw_momentum();
    const double h0 = -cur_.log_density + 0.5 * p0.squaredNorm();
    const double h1 = integrate(p0, eps, steps, prop_);
    Step s;
    const double u = uniform_(rng_);
    if (!std::isfinite(h1) || h1 - h0 > kMaxEnergyError) {
      s.divergent = true;
      return s;
    }
    s.accept_prob = std::min(1.0, std::exp(h0 - h1));
    if (u < s.accept_prob) {
      std::swap(cur_, prop_);
      s.accepted = true;
    }
    return s;
  }

  // Doubles or halves a unit step until one leapfrog step crosses an
  // acceptance ratio of 1/2.
  double initial_step_size() {
    double eps = 1.0;
    const VectorXd p0 = draw_momentum();
    const double h0 = -cur_.log_density + 0.5 * p0.squaredNorm();
    auto log_ratio = [&](double e) {
      const double h1 = integrate(p0, e, 1, prop_);
      return std::isfinite(h1) ? h0 - h1 : -std::numeric_limits<double>::infinity();
    };
    double lr = log_ratio(eps);
    const double dir = lr > std::log(0.5) ? 1.0 : -1.0;
    for (int it = 0; it < 100; ++it) {
      if (!(dir * lr > -dir * std::log(2.0))) break;
      eps *= std::pow(2.0, dir);
      lr = log_ratio(eps);
    }
    return eps;
  }

  int jittered_steps(int base, double jitter) {
    const int lo = std::max(1, static_cast<int>(std::lround(base * (1.0 - jitter))));
    const int hi = std::max(lo, static_cast<int>(std::lround(base * (1.0 + jitter))));
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }

  double init_noise() { return normal_(rng_); }

 private:
  const LogDensityFn& f_;
  Rng rng_;
  State cur_;
  State prop_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

void put_le64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double get_le64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

PosteriorLogDensity::PosteriorLogDensity(MlpSpec spec, LabeledDataset data, double prior_precision)
    : spec_(std::move(spec)), data_(std::move(data)), prior_precision_(prior_precision) {
  if (!(prior_precision_ > 0.0)) throw std::invalid_argument("prior precision must be positive");
  check_compatible(spec_, data_);
}

double PosteriorLogDensity::operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
  const double n = static_cast<double>(data_.size());
  LossAndGradient lg = grad_loss(spec_, ParamVector{theta}, data_, prior_precision_);
  grad = -n * lg.grad.values;
  return -n * lg.loss;
}

void HmcConfig::validate() const {
  if (warmup_iters < 1 || sample_iters < 1 || chains < 1 || leapfrog_steps < 1 || thin < 1) {
    throw std::invalid_argument("HMC iteration counts must all be >= 1");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw std::invalid_argument("target_accept must lie in (0, 1)");
  }
  if (!(leapfrog_jitter >= 0.0 && leapfrog_jitter < 1.0)) {
    throw std::invalid_argument("leapfrog_jitter must lie in [0, 1)");
  }
  if (!(init_sd >= 0.0)) throw std::invalid_argument("init_sd must be >= 0");
}

PosteriorSamples hmc_sample(const LogDensityFn& log_density, const ParamVector& init,
                            const HmcConfig& config) {
  config.validate();
  if (!init.values.allFinite()) throw std::invalid_argument("HMC: initial point must be finite");
  const Index dim = init.values.size();
  const int kept = (config.sample_iters + config.thin - 1) / config.thin;

  PosteriorSamples out;
  out.draws.resize(static_cast<Index>(config.chains) * kept, dim);
  double accepted_total = 0.0;

  for (int c = 0; c < config.chains; ++c) {
    Chain chain(log_density, make_rng(splitmix64(config.seed) + static_cast<std::uint64_t>(c),
                                      stream::kHmc));
    VectorXd start = init.values;
    for (Index i = 0; i < dim; ++i) start(i) += config.init_sd * chain.init_noise();
    chain.reset(std::move(start));

    const double eps0 = chain.initial_step_size();
    const double mu = std::log(10.0 * eps0);
    double h_bar = 0.0;
    double log_eps = std::log(eps0);
    double log_eps_bar = 0.0;
    int divergences = 0;
    for (int m = 1; m <= config.warmup_iters; ++m) {
      const Step s = chain.transition(std::exp(log_eps),
                                      chain.jittered_steps(config.leapfrog_steps,
                                                           config.leapfrog_jitter));
      if (s.divergent) ++divergences;
      const double w = 1.0 / (m + kT0);
      h_bar = (1.0 - w) * h_bar + w * (config.target_accept - s.accept_prob);
      log_eps = mu - std::sqrt(static_cast<double>(m)) / kGamma * h_bar;
      const double eta = std::pow(static_cast<double>(m), -kKappa);
      log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
    }
    out.warmup_divergences += divergences;
    if (2 * divergences > config.warmup_iters) {
      throw HmcDivergenceError("HMC: chain " + std::to_string(c) + " diverged in " +
                               std::to_string(divergences) + " of " +
                               std::to_string(config.warmup_iters) + " warmup iterations");
    }

    const double eps = std::exp(log_eps_bar);
    double accept_sum = 0.0;
    double logp_sum = 0.0;
    Index row = static_cast<Index>(c) * kept;
    for (int i = 0; i < config.sample_iters; ++i) {
      const Step s = chain.transition(
          eps, chain.jittered_steps(config.leapfrog_steps, config.leapfrog_jitter));
      if (s.divergent) ++out.sampling_divergences;
      accept_sum += s.accept_prob;
      if (i % config.thin == 0) {
        out.draws.row(row++) = chain.state().theta.transpose();
        logp_sum += chain.state().log_density;
      }
    }
    out.per_chain_step_size.push_back(eps);
    out.per_chain_accept_rate.push_back(accept_sum / config.sample_iters);
    out.per_chain_mean_log_density.push_back(logp_sum / kept);
    accepted_total += accept_sum;
  }
  out.accept_rate = accepted_total / (static_cast<double>(config.chains) * config.sample_iters);
  double eps_sum = 0.0;
  for (double e : out.per_chain_step_size) eps_sum += e;
  out.adapted_step_size = eps_sum / config.chains;
  return out;
}

ReferenceMoments reference_moments(const PosteriorSamples& samples, const MlpSpec& spec,
                                   const Eigen::MatrixXd& inputs) {
  if (samples.size() < 1) throw std::invalid_argument("reference_moments: no draws");
  const bool regression = spec.head == Head::RegressionIdentity;
  const Index rows = regression ? 1 : spec.class_count();
  MatrixXd mean = MatrixXd::Zero(rows, inputs.rows());
  MatrixXd m2 = MatrixXd::Zero(rows, inputs.rows());
  MatrixXd alea = MatrixXd::Zero(rows, inputs.rows());
  ParamVector theta;
  for (Index s = 0; s < samples.size(); ++s) {
    theta.values = samples.draws.row(s).transpose();
    const MatrixXd v = regression ? forward_batch(spec, theta, inputs)
                                  : predict_probs_batch(spec, theta, inputs);
    // Welford update.
    const MatrixXd delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2.array() += delta.array() * (v - mean).array();
    if (!regression) alea.array() += v.array() * (1.0 - v.array());
  }
  ReferenceMoments r;
  r.mean = std::move(mean);
  if (samples.size() >= 2) {
    r.epistemic = (m2 / static_cast<double>(samples.size() - 1)).cwiseMax(0.0);
  } else {
    r.epistemic = MatrixXd::Zero(rows, inputs.rows());
  }
  if (!regression) r.aleatoric = alea / static_cast<double>(samples.size());
  return r;
}

double ref_epistemic(const PosteriorSamples& samples, const MlpSpec& spec,
                     std::span<const double> x, int c) {
  if (samples.size() < 2) throw std::invalid_argument("ref_epistemic: at least two draws required");
  if (c < 0 || c >= std::max(1, spec.class_count())) {
    throw std::invalid_argument("class index out of range");
  }
  MatrixXd row(1, static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Index>(j)) = x[j];
  return reference_moments(samples, spec, row).epistemic(c, 0);
}

double ref_aleatoric(const PosteriorSamples& samples, const MlpSpec& spec,
                     std::span<const double> x, int c) {
  if (samples.size() < 1) throw std::invalid_argument("ref_aleatoric: no draws");
  if (spec.head == Head::RegressionIdentity) {
    throw std::invalid_argument("ref_aleatoric: classification head required");
  }
  if (c < 0 || c >= spec.class_count()) throw std::invalid_argument("class index out of range");
  MatrixXd row(1, static_cast<Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Index>(j)) = x[j];
  return reference_moments(samples, spec, row).aleatoric(c, 0);
}

void write_draws(const PosteriorSamples& samples, std::uint64_t seed,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "HMC1 " << samples.draws.rows() << ' ' << samples.draws.cols() << ' ' << seed << '\n';
  for (Index s = 0; s < samples.draws.rows(); ++s) {
    for (Index j = 0; j < samples.draws.cols(); ++j) put_le64(out, samples.draws(s, j));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

DrawDump read_draws(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  Index s = 0;
  Index d = 0;
  DrawDump dump;
  if (!(hs >> magic >> s >> d >> dump.seed) || magic != "HMC1" || s < 0 || d < 0) {
    throw std::runtime_error("malformed HMC draw header in " + path.string());
  }
  dump.draws.resize(s, d);
  for (Index i = 0; i < s; ++i) {
    for (Index j = 0; j < d; ++j) dump.draws(i, j) = get_le64(in);
  }
  if (!in) throw std::runtime_error("truncated HMC draw file " + path.string());
  return dump;
}

}  // namespace isouq
