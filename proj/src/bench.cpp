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

#include "isouq/bench.hpp"

#include "isouq/rng.hpp"
#include "isouq/stats.hpp"
#include "isouq/synthgen.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace isouq::bench {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Verbosity g_verbosity = Verbosity::Normal;

void info(const std::string& msg) {
  if (g_verbosity != Verbosity::Quiet) std::clog << "[isouq] " << msg << '\n';
}

void debug(const std::string& msg) {
  if (g_verbosity == Verbosity::Debug) std::clog << "[isouq:debug] " << msg << '\n';
}

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- override parsing -------------------------------------------------------

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

// from_chars for double is missing in older libstdc++ builds; stod with a full
// consumption check is equivalent here.
template <>
double parse_number<double>(std::string_view key, std::string_view text) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("bad value '" + s + "' for " + std::string(key));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument("bad boolean '" + std::string(text) + "' for " + std::string(key));
}

struct OverrideKey {
  std::string name;
  std::function<void(BenchConfig&, std::string_view)> set;
  std::function<std::string(const BenchConfig&)> get;
};

template <typename T>
OverrideKey number_key(std::string name, T BenchConfig::*outer) {
  return {name,
          [outer, name](BenchConfig& c, std::string_view v) { c.*outer = parse_number<T>(name, v); },
          [outer](const BenchConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_value(c.*outer);
            } else {
              return std::to_string(c.*outer);
            }
          }};
}

template <typename S, typename T>
OverrideKey nested_key(std::string name, S BenchConfig::*group, T S::*field) {
  return {name,
          [group, field, name](BenchConfig& c, std::string_view v) {
            (c.*group).*field = parse_number<T>(name, v);
          },
          [group, field](const BenchConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_value((c.*group).*field);
            } else {
              return std::to_string((c.*group).*field);
            }
          }};
}

OverrideKey widths_key(std::string name, std::vector<int> ModelConfig::*field) {
  return {name,
          [field](BenchConfig& c, std::string_view v) { c.model.*field = parse_widths(v); },
          [field](const BenchConfig& c) { return format_widths(c.model.*field); }};
}

OverrideKey bool_key(std::string name, bool BenchConfig::*field) {
  return {name,
          [field, name](BenchConfig& c, std::string_view v) { c.*field = parse_bool(name, v); },
          [field](const BenchConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

const std::vector<OverrideKey>& override_keys() {
  static const std::vector<OverrideKey> keys = [] {
    std::vector<OverrideKey> k;
    k.push_back(number_key("seed", &BenchConfig::seed));
    k.push_back(nested_key("train.lambda", &BenchConfig::train, &TrainConfig::prior_precision));
    k.push_back(nested_key("train.max_iters", &BenchConfig::train, &TrainConfig::max_iters));
    k.push_back(nested_key("train.grad_tol", &BenchConfig::train, &TrainConfig::grad_tol));
    k.push_back(nested_key("train.step_size", &BenchConfig::train, &TrainConfig::step_size));
    k.push_back(nested_key("hmc.warmup", &BenchConfig::hmc, &HmcConfig::warmup_iters));
    k.push_back(nested_key("hmc.samples", &BenchConfig::hmc, &HmcConfig::sample_iters));
    k.push_back(nested_key("hmc.chains", &BenchConfig::hmc, &HmcConfig::chains));
    k.push_back(nested_key("hmc.leapfrog", &BenchConfig::hmc, &HmcConfig::leapfrog_steps));
    k.push_back(nested_key("hmc.target_accept", &BenchConfig::hmc, &HmcConfig::target_accept));
    k.push_back(nested_key("hmc.jitter", &BenchConfig::hmc, &HmcConfig::leapfrog_jitter));
    k.push_back(nested_key("hmc.init_sd", &BenchConfig::hmc, &HmcConfig::init_sd));
    k.push_back(nested_key("hmc.thin", &BenchConfig::hmc, &HmcConfig::thin));
    k.push_back(nested_key("data.n_per_class", &BenchConfig::data, &DataConfig::n_per_class));
    k.push_back(nested_key("data.n_regression", &BenchConfig::data, &DataConfig::n_regression));
    k.push_back(nested_key("data.linear_margin", &BenchConfig::data, &DataConfig::linear_margin));
    k.push_back(nested_key("data.xor_noise", &BenchConfig::data, &DataConfig::xor_noise));
    k.push_back(nested_key("data.rings_noise", &BenchConfig::data, &DataConfig::rings_noise));
    k.push_back(nested_key("data.clusters_spread", &BenchConfig::data, &DataConfig::clusters_spread));
    k.push_back(nested_key("data.spirals_noise", &BenchConfig::data, &DataConfig::spirals_noise));
    k.push_back(nested_key("data.classes", &BenchConfig::data, &DataConfig::classes));
    k.push_back(nested_key("data.regression_noise", &BenchConfig::data, &DataConfig::regression_noise));
    k.push_back(widths_key("model.xor", &ModelConfig::xor_hidden));
    k.push_back(widths_key("model.rings", &ModelConfig::rings_hidden));
    k.push_back(widths_key("model.spirals", &ModelConfig::spirals_hidden));
    k.push_back(widths_key("model.rings_multi", &ModelConfig::rings_multi_hidden));
    k.push_back(widths_key("model.regression", &ModelConfig::regression_hidden));
    k.push_back(widths_key("model.proxy", &ModelConfig::proxy_hidden));
    k.push_back(nested_key("eval.grid_side", &BenchConfig::eval, &EvalConfig::grid_side));
    k.push_back(nested_key("eval.heldout", &BenchConfig::eval, &EvalConfig::heldout));
    k.push_back(nested_key("eval.regression_grid", &BenchConfig::eval, &EvalConfig::regression_grid));
    k.push_back(nested_key("eval.expand", &BenchConfig::eval, &EvalConfig::expand));
    k.push_back(nested_key("eval.map_resolution", &BenchConfig::eval, &EvalConfig::map_resolution));
    k.push_back({"scaling.ladder",
                 [](BenchConfig& c, std::string_view v) {
                   std::vector<std::vector<int>> ladder;
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     const auto comma = v.find(',', start);
                     const auto end = comma == std::string_view::npos ? v.size() : comma;
                     ladder.push_back(parse_widths(v.substr(start, end - start)));
                     if (comma == std::string_view::npos) break;
                     start = comma + 1;
                   }
                   c.scaling.ladder = std::move(ladder);
                 },
                 [](const BenchConfig& c) {
                   std::string s;
                   for (const auto& w : c.scaling.ladder) {
                     if (!s.empty()) s += ',';
                     s += format_widths(w);
                   }
                   return s;
                 }});
    k.push_back(nested_key("scaling.large_model_params", &BenchConfig::scaling,
                           &ScalingConfig::large_model_params));
    k.push_back(nested_key("scaling.large_model_budget", &BenchConfig::scaling,
                           &ScalingConfig::large_model_budget));
    k.push_back(nested_key("proxy.axis", &BenchConfig::proxy, &ProxyConfig::axis));
    k.push_back(nested_key("proxy.threshold", &BenchConfig::proxy, &ProxyConfig::threshold));
    k.push_back(number_key("laplace.draws", &BenchConfig::laplace_draws));
    k.push_back(bool_key("output.maps", &BenchConfig::write_maps));
    k.push_back(bool_key("output.draws", &BenchConfig::write_draws));
    std::sort(k.begin(), k.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

// ---- shared pipeline pieces -------------------------------------------------

std::uint64_t heldout_seed(std::uint64_t seed) { return make_rng(seed, stream::kHeldOut)(); }

bool is_multiclass_problem(std::string_view p) {
  return p == "clusters" || p == "spirals" || p == "rings-multi";
}

std::vector<double> to_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void add_correlations(ExperimentReport& r, const std::string& problem, const std::string& model,
                      const std::string& estimator, const VectorXd& est, const VectorXd& ref) {
  try {
    const stats::PairedSeries s(to_vector(est), to_vector(ref));
    r.add(problem, model, estimator, "pearson", stats::pearson(s));
    r.add(problem, model, estimator, "spearman", stats::spearman(s));
  } catch (const std::exception& e) {
    info(problem + "/" + model + "/" + estimator + ": correlation failed: " + e.what());
    r.add(problem, model, estimator, "error", 1.0);
  }
}

VectorXd concat(const std::vector<VectorXd>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  VectorXd out(n);
  Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

HmcConfig hmc_config(const BenchConfig& config, double budget = 1.0) {
  HmcConfig h = config.hmc;
  h.seed = config.seed;
  if (budget != 1.0) {
    h.warmup_iters = std::max(1, static_cast<int>(std::lround(h.warmup_iters * budget)));
    h.sample_iters = std::max(2, static_cast<int>(std::lround(h.sample_iters * budget)));
  }
  h.validate();
  return h;
}

TrainConfig train_config(const BenchConfig& config) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  t.validate();
  return t;
}

std::string file_stem(const std::string& problem, const std::string& model) {
  std::string s = problem + "_" + model;
  for (char& ch : s) {
    if (ch == '(' || ch == ')' || ch == ',' || ch == '/') ch = '_';
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

struct Fitted {
  LabeledDataset data;
  MlpSpec spec;
  ParamVector theta;
  TrainReport train;
};

Fitted fit(std::string_view problem, const MlpSpec& spec, const BenchConfig& config) {
  Fitted f{make_problem(problem, config, config.seed), spec, {}, {}};
  const Stopwatch sw;
  std::tie(f.theta, f.train) = train_map(spec, f.data, train_config(config));
  debug(std::string(problem) + "/" + spec.name() + ": MAP loss " + format_value(f.train.final_loss) +
        " |grad| " + format_value(f.train.final_grad_norm) + " after " +
        std::to_string(f.train.iters_used) + " iters (" + format_value(sw.seconds()) + " s)");
  return f;
}

PosteriorSamples posterior(const Fitted& f, const std::string& problem, const BenchConfig& config,
                           double budget = 1.0) {
  const Stopwatch sw;
  const PosteriorLogDensity density(f.spec, f.data, config.train.prior_precision);
  auto samples = hmc_sample(std::cref(density), f.theta, hmc_config(config, budget));
  info(problem + "/" + f.spec.name() + ": HMC " + std::to_string(samples.size()) + " draws, accept " +
       format_value(samples.accept_rate) + ", step " + format_value(samples.adapted_step_size) + " (" +
       format_value(sw.seconds()) + " s)");
  if (config.write_draws && config.artifact_dir) {
    std::filesystem::create_directories(*config.artifact_dir);
    write_draws(samples, config.seed,
                *config.artifact_dir / (file_stem(problem, f.spec.name()) + ".hmc"));
  }
  return samples;
}

void add_fit_rows(ExperimentReport& r, const std::string& problem, const Fitted& f,
                  const PosteriorSamples& samples) {
  const std::string model = f.spec.name();
  r.add(problem, model, "model", "param_count", static_cast<double>(param_count(f.spec)));
  if (f.spec.head == Head::RegressionIdentity) {
    r.add(problem, model, "map", "rmse", f.train.train_rmse);
  } else {
    r.add(problem, model, "map", "accuracy", f.train.train_accuracy);
  }
  r.add(problem, model, "hmc", "accept_rate", samples.accept_rate);
  r.add(problem, model, "hmc", "hmc_draws", static_cast<double>(samples.size()));
}

// Runs `body` for one problem; on failure the problem contributes only an
// error row.
void isolated(ExperimentReport& report, const std::string& problem, const std::string& model,
              const std::function<void(ExperimentReport&)>& body) {
  ExperimentReport local;
  const Stopwatch sw;
  try {
    body(local);
    report.merge(local);
    info(problem + (model.empty() ? "" : "/" + model) + " done in " + format_value(sw.seconds()) +
         " s");
  } catch (const std::exception& e) {
    std::clog << "[isouq] " << problem << (model.empty() ? "" : "/" + model)
              << " failed: " << e.what() << '\n';
    report.add(problem, model.empty() ? "-" : model, "pipeline", "error", 1.0);
  }
}

ExperimentReport new_report(const BenchConfig& config) {
  ExperimentReport r;
  r.seed = config.seed;
  r.config_echo = config_echo(config);
  return r;
}

}  // namespace

void set_verbosity(Verbosity v) { g_verbosity = v; }
Verbosity verbosity() { return g_verbosity; }

void apply_override(BenchConfig& config, std::string_view key, std::string_view value) {
  for (const auto& k : override_keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw std::invalid_argument("unknown configuration key: " + std::string(key));
}

std::vector<std::pair<std::string, std::string>> config_echo(const BenchConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : override_keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::vector<int> parse_widths(std::string_view text) {
  std::vector<int> widths;
  if (text.empty() || text == "logreg" || text == "linear") return widths;
  std::size_t start = 0;
  while (true) {
    const auto x = text.find('x', start);
    const auto part = text.substr(start, x == std::string_view::npos ? text.npos : x - start);
    const int w = parse_number<int>("widths", part);
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
    widths.push_back(w);
    if (x == std::string_view::npos) break;
    start = x + 1;
  }
  return widths;
}

std::string format_widths(const std::vector<int>& widths) {
  if (widths.empty()) return "logreg";
  std::string s;
  for (int w : widths) {
    if (!s.empty()) s += 'x';
    s += std::to_string(w);
  }
  return s;
}

LabeledDataset make_problem(std::string_view problem, const BenchConfig& config, std::uint64_t seed) {
  const DataConfig& d = config.data;
  const int n2 = 2 * d.n_per_class;
  const int nk = d.classes * d.n_per_class;
  if (problem == "linear") return synth::make_linear2d(n2, d.linear_margin, seed);
  if (problem == "xor") return synth::make_xor2d(n2, d.xor_noise, seed);
  if (problem == "rings-binary" || problem == "rings") {
    return synth::make_rings2d(n2, 2, d.rings_noise, seed);
  }
  if (problem == "clusters") return synth::make_clusters2d(nk, d.classes, d.clusters_spread, seed);
  if (problem == "spirals") return synth::make_spirals2d(nk, d.classes, d.spirals_noise, seed);
  if (problem == "rings-multi") return synth::make_rings2d(nk, d.classes, d.rings_noise, seed);
  if (problem == "reg-linear") {
    return synth::make_regression1d(synth::RegressionKind::Linear, d.n_regression, d.regression_noise,
                                    seed);
  }
  if (problem == "reg-nonlinear") {
    return synth::make_regression1d(synth::RegressionKind::Nonlinear, d.n_regression,
                                    d.regression_noise, seed);
  }
  throw std::invalid_argument("unknown problem: " + std::string(problem));
}

MlpSpec problem_model(std::string_view problem, const BenchConfig& config) {
  const ModelConfig& m = config.model;
  const int k = config.data.classes;
  if (problem == "linear") return MlpSpec::binary(2, {});
  if (problem == "xor") return MlpSpec::binary(2, m.xor_hidden);
  if (problem == "rings-binary" || problem == "rings") return MlpSpec::binary(2, m.rings_hidden);
  if (problem == "clusters") return MlpSpec::softmax(2, {}, k);
  if (problem == "spirals") return MlpSpec::softmax(2, m.spirals_hidden, k);
  if (problem == "rings-multi") return MlpSpec::softmax(2, m.rings_multi_hidden, k);
  if (problem == "reg-linear") return MlpSpec::regression(1, {}, config.data.regression_noise);
  if (problem == "reg-nonlinear") {
    return MlpSpec::regression(1, m.regression_hidden, config.data.regression_noise);
  }
  throw std::invalid_argument("unknown problem: " + std::string(problem));
}

Eigen::MatrixXd evaluation_points(std::string_view problem, const LabeledDataset& data,
                                  const BenchConfig& config) {
  const bool regression = data.is_regression();
  const int side = regression ? config.eval.regression_grid : config.eval.grid_side;
  const MatrixXd grid = EvalGrid::around(data.inputs, config.eval.expand, side).points();
  if (config.eval.heldout < 0) throw std::invalid_argument("eval.heldout must be nonnegative");
  if (config.eval.heldout == 0) return grid;
  BenchConfig held = config;
  if (regression) {
    held.data.n_regression = config.eval.heldout;
  } else {
    // Generators take a total count; ask for enough and keep the first rows.
    const int k = data.class_count;
    held.data.n_per_class = (config.eval.heldout + k - 1) / k;
  }
  const LabeledDataset extra = make_problem(problem, held, heldout_seed(config.seed));
  MatrixXd out(grid.rows() + config.eval.heldout, grid.cols());
  out.topRows(grid.rows()) = grid;
  out.bottomRows(config.eval.heldout) = extra.inputs.topRows(config.eval.heldout);
  return out;
}

// ---- validation -------------------------------------------------------------

ExperimentReport run_validation_classification(const std::vector<std::string>& problems,
                                               const BenchConfig& config) {
  ExperimentReport report = new_report(config);
  for (const auto& problem : problems) {
    isolated(report, problem, {}, [&](ExperimentReport& r) {
      if (std::find(kClassificationProblems.begin(), kClassificationProblems.end(), problem) ==
          kClassificationProblems.end()) {
        throw std::invalid_argument("not a classification problem: " + problem);
      }
      const Fitted f = fit(problem, problem_model(problem, config), config);
      const PosteriorSamples samples = posterior(f, problem, config);
      add_fit_rows(r, problem, f, samples);
      const std::string model = f.spec.name();
      const MatrixXd x = evaluation_points(problem, f.data, config);
      const ReferenceMoments ref = reference_moments(samples, f.spec, x);
      const MatrixXd probs = predict_probs_batch(f.spec, f.theta, x);

      const bool dense = param_count(f.spec) <= kMaxDenseParams;
      std::optional<CovarianceModel> la_cov;
      std::optional<CovarianceModel> post_cov;
      if (dense) {
        const MatrixXd fisher =
            empirical_fisher(f.spec, f.theta, f.data, FisherLabels::Observed, config.seed);
        const double n = static_cast<double>(f.data.size());
        la_cov = CovarianceModel::damped_fisher(fisher, config.train.prior_precision);
        post_cov = CovarianceModel::damped_fisher(n * fisher, n * config.train.prior_precision);
      }
      MatrixXd alea_la;
      if (post_cov) {
        alea_la = laplace_aleatoric_batch(f.spec, f.theta, *post_cov, x, config.laplace_draws,
                                          config.seed);
      }

      const bool multi = is_multiclass_problem(problem);
      std::vector<int> classes;
      if (multi) {
        for (int c = 0; c < f.spec.class_count(); ++c) classes.push_back(c);
      } else {
        classes.push_back(1);
      }
      std::vector<VectorXd> gn_all, la_all, ale_all, ale_la_all, ref_epi_all, ref_ale_all;
      for (int c : classes) {
        const VectorXd gn = target_grad_sqnorms(f.spec, f.theta, x, c);
        const VectorXd p = probs.row(c).transpose();
        const VectorXd ale = p.array() * (1.0 - p.array());
        const VectorXd ref_epi = ref.epistemic.row(c).transpose();
        const VectorXd ref_ale = ref.aleatoric.row(c).transpose();
        gn_all.push_back(gn);
        ale_all.push_back(ale);
        ref_epi_all.push_back(ref_epi);
        ref_ale_all.push_back(ref_ale);
        VectorXd la;
        VectorXd ale_la;
        if (la_cov) {
          la = la_cov->quad_forms(target_jacobian(f.spec, f.theta, x, c));
          ale_la = alea_la.row(c).transpose();
          la_all.push_back(la);
          ale_la_all.push_back(ale_la);
        }
        if (!multi) continue;
        const std::string tag = "[c=" + std::to_string(c) + "]";
        add_correlations(r, problem, model, "gn" + tag, gn, ref_epi);
        add_correlations(r, problem, model, "aleatoric" + tag, ale, ref_ale);
        if (la_cov) {
          add_correlations(r, problem, model, "la" + tag, la, ref_epi);
          add_correlations(r, problem, model, "aleatoric_la" + tag, ale_la, ref_ale);
          add_correlations(r, problem, model, "gn_vs_la" + tag, gn, la);
        }
      }
      const VectorXd ref_epi = concat(ref_epi_all);
      const VectorXd ref_ale = concat(ref_ale_all);
      add_correlations(r, problem, model, "gn", concat(gn_all), ref_epi);
      add_correlations(r, problem, model, "aleatoric", concat(ale_all), ref_ale);
      if (la_cov) {
        add_correlations(r, problem, model, "la", concat(la_all), ref_epi);
        add_correlations(r, problem, model, "aleatoric_la", concat(ale_la_all), ref_ale);
        add_correlations(r, problem, model, "gn_vs_la", concat(gn_all), concat(la_all));
      }
    });
  }
  return report;
}

ExperimentReport run_validation_regression(const BenchConfig& config) {
  ExperimentReport report = new_report(config);
  for (const std::string problem : {"reg-linear", "reg-nonlinear"}) {
    isolated(report, problem, {}, [&](ExperimentReport& r) {
      const Fitted f = fit(problem, problem_model(problem, config), config);
      const PosteriorSamples samples = posterior(f, problem, config);
      add_fit_rows(r, problem, f, samples);
      const std::string model = f.spec.name();
      const MatrixXd x = evaluation_points(problem, f.data, config);
      const ReferenceMoments ref = reference_moments(samples, f.spec, x);
      const VectorXd ref_epi = ref.epistemic.row(0).transpose();
      const VectorXd gn = target_grad_sqnorms(f.spec, f.theta, x, 0);
      add_correlations(r, problem, model, "gn", gn, ref_epi);

      const MatrixXd fisher =
          empirical_fisher(f.spec, f.theta, f.data, FisherLabels::Observed, config.seed);
      const auto cov = CovarianceModel::damped_fisher(fisher, config.train.prior_precision);
      const VectorXd la = cov.quad_forms(target_jacobian(f.spec, f.theta, x, 0));
      add_correlations(r, problem, model, "la", la, ref_epi);
      add_correlations(r, problem, model, "gn_vs_la", gn, la);

      const HessianSpectrum spec = hessian_spectrum(fisher, config.train.prior_precision);
      r.add(problem, model, "fisher", "eig_min", spec.eig_min);
      r.add(problem, model, "fisher", "eig_max", spec.eig_max);
      r.add(problem, model, "fisher", "eig_ratio", spec.ratio);
    });
  }
  return report;
}

// ---- scaling ----------------------------------------------------------------

std::vector<MlpSpec> scaling_ladder(const BenchConfig& config) {
  std::vector<MlpSpec> ladder;
  for (const auto& widths : config.scaling.ladder) ladder.push_back(MlpSpec::binary(2, widths));
  return ladder;
}

ExperimentReport run_scaling(const std::vector<MlpSpec>& ladder, const BenchConfig& config) {
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (param_count(ladder[i]) < param_count(ladder[i - 1])) {
      throw std::invalid_argument("scaling ladder must be ordered by parameter count");
    }
  }
  ExperimentReport report = new_report(config);
  const std::string problem = "rings-binary";
  for (const auto& spec : ladder) {
    isolated(report, problem, spec.name(), [&](ExperimentReport& r) {
      spec.validate();
      if (spec.head != Head::BinarySigmoid || spec.input_dim != 2) {
        throw std::invalid_argument("scaling ladder needs binary models on 2D inputs");
      }
      const double budget = static_cast<long long>(param_count(spec)) > config.scaling.large_model_params
                                ? config.scaling.large_model_budget
                                : 1.0;
      const Fitted f = fit(problem, spec, config);
      const PosteriorSamples samples = posterior(f, problem, config, budget);
      add_fit_rows(r, problem, f, samples);
      const std::string model = spec.name();
      const MatrixXd x = evaluation_points(problem, f.data, config);
      const ReferenceMoments ref = reference_moments(samples, spec, x);
      const VectorXd p = predict_probs_batch(spec, f.theta, x).row(1).transpose();
      add_correlations(r, problem, model, "gn", target_grad_sqnorms(spec, f.theta, x, 1),
                       ref.epistemic.row(1).transpose());
      add_correlations(r, problem, model, "aleatoric", p.array() * (1.0 - p.array()),
                       ref.aleatoric.row(1).transpose());
    });
  }
  return report;
}

// ---- proxy-covariance bias --------------------------------------------------

ProxyBiasStats proxy_bias_statistics(const UncertaintyMap& u_id, const UncertaintyMap& u_a,
                                     const UncertaintyMap& u_b, int axis, double threshold) {
  for (const auto* m : {&u_id, &u_a, &u_b}) {
    m->validate();
    if (m->grid_ys.empty()) throw std::invalid_argument("proxy bias needs 2D maps");
    if (m->grid_xs != u_id.grid_xs || m->grid_ys != u_id.grid_ys) {
      throw std::invalid_argument("proxy bias maps must share a grid");
    }
  }
  if (axis != 0 && axis != 1) throw std::invalid_argument("proxy bias axis must be 0 or 1");
  const Index rows = u_id.values.rows();
  const Index cols = u_id.values.cols();
  auto is_top = [&](Index iy, Index ix) {
    const double coord = axis == 0 ? u_id.grid_xs[static_cast<std::size_t>(ix)]
                                   : u_id.grid_ys[static_cast<std::size_t>(iy)];
    return coord > threshold;
  };
  auto ratio = [&](const UncertaintyMap& raw) {
    const UncertaintyMap m = normalize_map(raw);
    double top = 0.0, bottom = 0.0;
    Index n_top = 0, n_bottom = 0;
    for (Index iy = 0; iy < rows; ++iy) {
      for (Index ix = 0; ix < cols; ++ix) {
        if (is_top(iy, ix)) {
          top += m.values(iy, ix);
          ++n_top;
        } else {
          bottom += m.values(iy, ix);
          ++n_bottom;
        }
      }
    }
    if (n_top == 0 || n_bottom == 0) {
      throw stats::DegenerateDataError("split leaves one side of the grid empty");
    }
    return (top / static_cast<double>(n_top)) / (bottom / static_cast<double>(n_bottom));
  };
  ProxyBiasStats s;
  s.r_id = ratio(u_id);
  s.r_a = ratio(u_a);
  s.r_b = ratio(u_b);
  constexpr double kFloor = std::numeric_limits<double>::min();
  s.log_ratio = u_a.values.cwiseMax(kFloor).array().log() - u_b.values.cwiseMax(kFloor).array().log();
  std::vector<double> top, bottom;
  for (Index iy = 0; iy < rows; ++iy) {
    for (Index ix = 0; ix < cols; ++ix) {
      (is_top(iy, ix) ? top : bottom).push_back(s.log_ratio(iy, ix));
    }
  }
  const auto w = stats::welch_t(top, bottom);
  s.welch_t = w.t;
  s.welch_p = w.p;
  s.cohens_d = stats::cohens_d(top, bottom);
  return s;
}

ProxyBiasOutcome run_proxy_bias(const std::vector<std::string>& problems, const BenchConfig& config) {
  ProxyBiasOutcome outcome;
  outcome.report = new_report(config);
  for (const auto& problem : problems) {
    isolated(outcome.report, problem, {}, [&](ExperimentReport& r) {
      if (std::find(kProxyProblems.begin(), kProxyProblems.end(), problem) == kProxyProblems.end()) {
        throw std::invalid_argument("proxy bias runs on linear, xor or rings, not " + problem);
      }
      const MlpSpec spec = MlpSpec::binary(2, config.model.proxy_hidden);
      const Fitted f = fit(problem, spec, config);
      const std::string model = spec.name();
      r.add(problem, model, "model", "param_count", static_cast<double>(param_count(spec)));
      r.add(problem, model, "map", "accuracy", f.train.train_accuracy);

      const auto [half_a, half_b] =
          synth::split_by_halfplane(f.data, config.proxy.axis, config.proxy.threshold);
      const double lambda = config.train.prior_precision;
      const auto cov_a = CovarianceModel::damped_fisher(
          empirical_fisher(spec, f.theta, half_a, FisherLabels::Observed, config.seed), lambda);
      const auto cov_b = CovarianceModel::damped_fisher(
          empirical_fisher(spec, f.theta, half_b, FisherLabels::Observed, config.seed), lambda);
      const EvalGrid grid = EvalGrid::around(f.data.inputs, config.eval.expand,
                                             config.eval.map_resolution);
      const UncertaintyMap u_id = uncertainty_map(spec, f.theta, grid, MapEstimator::GradientNorm, 1);
      const UncertaintyMap u_a = uncertainty_map(spec, f.theta, grid, MapEstimator::Laplace, 1, cov_a);
      const UncertaintyMap u_b = uncertainty_map(spec, f.theta, grid, MapEstimator::Laplace, 1, cov_b);
      const ProxyBiasStats s =
          proxy_bias_statistics(u_id, u_a, u_b, config.proxy.axis, config.proxy.threshold);
      r.add(problem, model, "identity", "ratio_top_bottom", s.r_id);
      r.add(problem, model, "proxy_a", "ratio_top_bottom", s.r_a);
      r.add(problem, model, "proxy_b", "ratio_top_bottom", s.r_b);
      r.add(problem, model, "log_ratio", "welch_t", s.welch_t);
      r.add(problem, model, "log_ratio", "welch_p", s.welch_p);
      r.add(problem, model, "log_ratio", "cohens_d", s.cohens_d);

      ProxyBiasMaps maps{problem, normalize_map(u_id), normalize_map(u_a), normalize_map(u_b), {},
                         s.log_ratio};
      maps.u_id.estimator_name = "identity";
      maps.u_a.estimator_name = "proxy_a";
      maps.u_b.estimator_name = "proxy_b";
      UncertaintyMap lr = u_id;
      lr.estimator_name = "log_ratio";
      lr.values = s.log_ratio.array() - s.log_ratio.minCoeff();
      maps.log_ratio_image = normalize_map(lr);
      outcome.maps.push_back(std::move(maps));
    });
  }
  return outcome;
}

void write_proxy_maps(const ProxyBiasOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& m : outcome.maps) {
    for (const auto* u : {&m.u_id, &m.u_a, &m.u_b, &m.log_ratio_image}) {
      emit_map_image(*u, dir / (m.problem + "_" + u->estimator_name + ".pgm"));
    }
    for (const auto* u : {&m.u_id, &m.u_a, &m.u_b}) {
      emit_map_csv(*u, dir / (m.problem + "_" + u->estimator_name + ".csv"));
    }
    emit_grid_csv(m.u_id.grid_xs, m.u_id.grid_ys, m.log_ratio, dir / (m.problem + "_log_ratio.csv"));
  }
}

// ---- maps -------------------------------------------------------------------

MapOutcome run_maps(const std::vector<std::string>& problems, const BenchConfig& config) {
  MapOutcome outcome;
  outcome.report = new_report(config);
  for (const auto& problem : problems) {
    isolated(outcome.report, problem, {}, [&](ExperimentReport& r) {
      const Fitted f = fit(problem, problem_model(problem, config), config);
      const PosteriorSamples samples = posterior(f, problem, config);
      add_fit_rows(r, problem, f, samples);
      const std::string model = f.spec.name();
      const EvalGrid grid = EvalGrid::around(f.data.inputs, config.eval.expand,
                                             f.data.is_regression() ? config.eval.regression_grid
                                                                    : config.eval.map_resolution);
      const MatrixXd pts = grid.points();
      const ReferenceMoments ref = reference_moments(samples, f.spec, pts);
      std::optional<CovarianceModel> cov;
      if (param_count(f.spec) <= kMaxDenseParams) {
        cov = CovarianceModel::damped_fisher(
            empirical_fisher(f.spec, f.theta, f.data, FisherLabels::Observed, config.seed),
            config.train.prior_precision);
      }
      std::vector<int> classes;
      if (f.spec.head == Head::BinarySigmoid) {
        classes = {1};
      } else if (f.spec.head == Head::RegressionIdentity) {
        classes = {0};
      } else {
        for (int c = 0; c < f.spec.class_count(); ++c) classes.push_back(c);
      }
      MapBundle bundle{problem, {}};
      for (int c : classes) {
        const std::string suffix =
            f.spec.head == Head::MulticlassSoftmax ? "_c" + std::to_string(c) : "";
        auto shaped = [&](const VectorXd& v, const std::string& name) {
          UncertaintyMap m;
          m.grid_xs = grid.xs();
          if (grid.is_2d()) m.grid_ys = grid.ys();
          m.values = Eigen::Map<const MatrixXd>(v.data(), grid.resolution, grid.is_2d() ? grid.resolution : 1)
                         .transpose();
          m.estimator_name = name + suffix;
          return m;
        };
        UncertaintyMap gn = uncertainty_map(f.spec, f.theta, grid, MapEstimator::GradientNorm, c);
        gn.estimator_name = "gn" + suffix;
        const UncertaintyMap ref_epi = shaped(ref.epistemic.row(c).transpose(), "mcmc_epistemic");
        const auto flat = [](const UncertaintyMap& m) {
          return VectorXd(Eigen::Map<const VectorXd>(m.values.data(), m.values.size()));
        };
        add_correlations(r, problem, model, "gn_grid" + suffix, flat(gn), flat(ref_epi));
        bundle.maps.push_back(gn);
        bundle.maps.push_back(ref_epi);
        if (cov) {
          UncertaintyMap la = uncertainty_map(f.spec, f.theta, grid, MapEstimator::Laplace, c, cov);
          la.estimator_name = "la" + suffix;
          add_correlations(r, problem, model, "la_grid" + suffix, flat(la), flat(ref_epi));
          bundle.maps.push_back(std::move(la));
        }
        if (f.spec.head != Head::RegressionIdentity) {
          UncertaintyMap ale = uncertainty_map(f.spec, f.theta, grid, MapEstimator::AleatoricPoint, c);
          ale.estimator_name = "aleatoric" + suffix;
          const UncertaintyMap ref_ale = shaped(ref.aleatoric.row(c).transpose(), "mcmc_aleatoric");
          add_correlations(r, problem, model, "aleatoric_grid" + suffix, flat(ale), flat(ref_ale));
          bundle.maps.push_back(std::move(ale));
          bundle.maps.push_back(ref_ale);
        }
      }
      outcome.bundles.push_back(std::move(bundle));
    });
  }
  return outcome;
}

void write_maps(const MapOutcome& outcome, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& b : outcome.bundles) {
    for (const auto& m : b.maps) {
      const std::string stem = b.problem + "_" + m.estimator_name;
      emit_map_csv(m, dir / (stem + ".csv"));
      if (!m.grid_ys.empty()) emit_map_image(normalize_map(m), dir / (stem + ".pgm"));
    }
  }
}

// ---- spectrum and calibration ----------------------------------------------

HessianSpectrum hessian_spectrum(const Eigen::MatrixXd& fisher, double lambda) {
  if (fisher.rows() != fisher.cols() || fisher.rows() == 0) {
    throw std::invalid_argument("hessian_spectrum needs a nonempty square matrix");
  }
  if (fisher.rows() > kMaxDenseParams) {
    throw std::invalid_argument("hessian_spectrum: matrix larger than the dense limit");
  }
  if (!fisher.allFinite() || !std::isfinite(lambda)) {
    throw std::invalid_argument("hessian_spectrum: non-finite input");
  }
  const double scale = std::max(1.0, fisher.cwiseAbs().maxCoeff());
  if ((fisher - fisher.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("hessian_spectrum: matrix is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(fisher, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  HessianSpectrum s;
  s.eig_min = eig.eigenvalues().minCoeff() + lambda;
  s.eig_max = eig.eigenvalues().maxCoeff() + lambda;
  s.ratio = s.eig_max / s.eig_min;
  return s;
}

HmcCheckResult run_hmc_check(const BenchConfig& config) {
  HmcCheckResult result;
  result.report = new_report(config);
  const LogDensityFn standard_normal = [](const VectorXd& theta, VectorXd& grad) {
    grad = -theta;
    return -0.5 * theta.squaredNorm();
  };
  const PosteriorSamples s =
      hmc_sample(standard_normal, ParamVector{VectorXd::Zero(2)}, hmc_config(config));
  const VectorXd mean = s.draws.colwise().mean().transpose();
  const MatrixXd centered = s.draws.rowwise() - mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(s.size() - 1);
  result.max_mean_error = mean.cwiseAbs().maxCoeff();
  result.max_cov_error = (cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff();
  result.accept_rate = s.accept_rate;
  result.passed = result.max_mean_error < 0.05 && result.max_cov_error < 0.1 &&
                  result.accept_rate >= 0.7 && result.accept_rate <= 0.9;
  const std::string problem = "gaussian2d";
  const std::string model = "standard-normal";
  result.report.add(problem, model, "hmc", "accept_rate", s.accept_rate);
  result.report.add(problem, model, "hmc", "hmc_draws", static_cast<double>(s.size()));
  result.report.add(problem, model, "hmc", "max_mean_error", result.max_mean_error);
  result.report.add(problem, model, "hmc", "max_cov_error", result.max_cov_error);
  if (!result.passed) result.report.add(problem, model, "hmc", "error", 1.0);
  return result;
}

}  // namespace isouq::bench
