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

// End-to-end acceptance checks. Each criterion is run by name:
//   isouq_acceptance AC3
// and prints one PASS/FAIL line; the exit code is nonzero on failure.

#include "isouq/bench.hpp"
#include "isouq/cli.hpp"
#include "isouq/stats.hpp"
#include "isouq/uq.hpp"
#include "../test_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace isouq::acceptance {
namespace {

using bench::BenchConfig;
using bench::ExperimentReport;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  // Records one condition; the detail line lists every condition checked.
  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    note(what + (ok ? "" : " [failed]"));
  }

  void note(const std::string& what) { detail << (detail.tellp() > 0 ? "; " : "") << what; }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::vector<double> as_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void ac1(Outcome& o) {
  Rng rng = make_rng(101);
  double worst_prob = 0.0;
  int prob_cases = 0;
  while (prob_cases < 100) {
    const MlpSpec spec = testing::random_spec(rng);
    if (spec.head == Head::RegressionIdentity) continue;
    const ParamVector p = testing::random_params(spec, rng);
    const auto x = as_vec(testing::random_vector(spec.input_dim, rng));
    const int c = std::uniform_int_distribution<int>(0, spec.class_count() - 1)(rng);
    const VectorXd fd = testing::central_difference(
        [&](const VectorXd& t) { return predict_prob(spec, ParamVector{t}, x, c); }, p.values);
    worst_prob = std::max(worst_prob, testing::relative_error(grad_prob(spec, p, x, c).values, fd));
    ++prob_cases;
  }
  double worst_loss = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const MlpSpec spec = testing::random_spec(rng);
    const ParamVector p = testing::random_params(spec, rng);
    const LabeledDataset data = testing::random_dataset(spec, 6, rng);
    const double lambda = trial % 2 == 0 ? 0.0 : 0.25;
    const VectorXd fd = testing::central_difference(
        [&](const VectorXd& t) { return grad_loss(spec, ParamVector{t}, data, lambda).loss; }, p.values);
    worst_loss = std::max(worst_loss, testing::relative_error(grad_loss(spec, p, data, lambda).grad.values, fd));
  }
  o.require(worst_prob < 1e-5, "grad_prob worst rel err " + fmt(worst_prob) + " over 100 cases");
  o.require(worst_loss < 1e-5, "grad_loss worst rel err " + fmt(worst_loss) + " over 100 cases");
}

void ac2(Outcome& o) {
  const auto r = bench::run_hmc_check(BenchConfig{});
  o.require(r.max_mean_error < 0.05, "mean err " + fmt(r.max_mean_error) + " < 0.05");
  o.require(r.max_cov_error < 0.1, "cov err " + fmt(r.max_cov_error) + " < 0.1");
  o.require(r.accept_rate >= 0.7 && r.accept_rate <= 0.9, "accept " + fmt(r.accept_rate) + " in [0.7, 0.9]");
}

// Every HMC run in a report must have settled within 0.1 of the target rate.
void require_accept_rates(Outcome& o, const ExperimentReport& r, const BenchConfig& c) {
  for (const auto& row : r.rows) {
    if (row.metric_name != "accept_rate") continue;
    o.require(std::abs(row.value - c.hmc.target_accept) <= 0.1,
              row.problem + "/" + row.model + " accept " + fmt(row.value));
  }
}

void require_no_errors(Outcome& o, const ExperimentReport& r) {
  o.require(!r.has_errors(), std::string("pipeline ") + (r.has_errors() ? "reported errors" : "clean"));
}

void ac3(Outcome& o) {
  const BenchConfig c;
  const auto r = bench::run_validation_classification({"linear"}, c);
  require_no_errors(o, r);
  if (r.has_errors()) return;
  const double rho = r.value("linear", "gn", "spearman");
  const double pr = r.value("linear", "gn", "pearson");
  const double ale = r.value("linear", "aleatoric", "spearman");
  o.require(rho >= 0.95, "GN spearman " + fmt(rho) + " >= 0.95");
  o.require(pr >= 0.90, "GN pearson " + fmt(pr) + " >= 0.90");
  o.require(ale >= 0.98, "aleatoric spearman " + fmt(ale) + " >= 0.98");
  require_accept_rates(o, r, c);
}

void ac4(Outcome& o) {
  const BenchConfig c;
  const auto r = bench::run_validation_classification({"xor"}, c);
  require_no_errors(o, r);
  if (r.has_errors()) return;
  const double rho = r.value("xor", "gn", "spearman");
  const double gl = r.value("xor", "gn_vs_la", "spearman");
  o.require(rho >= 0.45 && rho <= 0.90, "GN spearman " + fmt(rho) + " in [0.45, 0.90]");
  o.require(gl >= 0.90, "GN vs LA spearman " + fmt(gl) + " >= 0.90");
  require_accept_rates(o, r, c);
}

void ac5(Outcome& o) {
  const BenchConfig c;
  const auto r = bench::run_validation_classification({"clusters"}, c);
  require_no_errors(o, r);
  if (r.has_errors()) return;
  const double rho = r.value("clusters", "gn", "spearman");
  const double ale = r.value("clusters", "aleatoric", "spearman");
  o.require(rho >= 0.90, "pooled GN spearman " + fmt(rho) + " >= 0.90");
  o.require(ale >= 0.95, "pooled aleatoric spearman " + fmt(ale) + " >= 0.95");
  double lo = 1.0;
  double hi = -1.0;
  for (int k = 0; k < c.data.classes; ++k) {
    const double v = r.value("clusters", "gn[c=" + std::to_string(k) + "]", "spearman");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  o.require(hi - lo <= 0.15, "per-class GN spearman spread " + fmt(hi - lo) + " <= 0.15");
  require_accept_rates(o, r, c);
}

void ac6(Outcome& o) {
  const BenchConfig c;
  const auto r = bench::run_validation_regression(c);
  require_no_errors(o, r);
  if (r.has_errors()) return;
  const double la = r.value("reg-nonlinear", "la", "spearman");
  const double gn = r.value("reg-nonlinear", "gn", "spearman");
  const double ratio = r.value("reg-nonlinear", "fisher", "eig_ratio") / r.value("reg-linear", "fisher", "eig_ratio");
  o.require(la - gn >= 0.05, "nonlinear LA - GN spearman " + fmt(la) + " - " + fmt(gn) + " >= 0.05");
  o.require(ratio >= 100.0, "eig_ratio nonlinear / linear " + fmt(ratio) + " >= 100");
  require_accept_rates(o, r, c);
}

void ac7(Outcome& o) {
  const BenchConfig c;
  const auto out = bench::run_proxy_bias({"xor", "linear"}, c);
  require_no_errors(o, out.report);
  if (out.report.has_errors()) return;
  const auto& r = out.report;
  const double d = r.value("xor", "log_ratio", "cohens_d");
  const double p = r.value("xor", "log_ratio", "welch_p");
  const double ra = r.value("xor", "proxy_a", "ratio_top_bottom");
  const double rid = r.value("xor", "identity", "ratio_top_bottom");
  const double rb = r.value("xor", "proxy_b", "ratio_top_bottom");
  const double d_lin = r.value("linear", "log_ratio", "cohens_d");
  o.require(d <= -1.0, "xor cohens d " + fmt(d) + " <= -1");
  o.require(p < 1e-6, "xor welch p " + fmt(p) + " < 1e-6");
  o.require(ra < rid && rid < rb, "r_A " + fmt(ra) + " < r_id " + fmt(rid) + " < r_B " + fmt(rb));
  o.require(std::abs(d_lin) < std::abs(d), "|d_linear| " + fmt(std::abs(d_lin)) + " < |d_xor|");
  for (const auto& m : out.maps) {
    if (m.problem != "xor") continue;
    const auto ab = bench::proxy_bias_statistics(m.u_id, m.u_a, m.u_b, c.proxy.axis, c.proxy.threshold);
    const auto ba = bench::proxy_bias_statistics(m.u_id, m.u_b, m.u_a, c.proxy.axis, c.proxy.threshold);
    o.require(ba.cohens_d == -ab.cohens_d && ba.welch_t == -ab.welch_t, "half swap negates d exactly");
  }
}

void ac8(Outcome& o) {
  const BenchConfig c;
  const auto ladder = bench::scaling_ladder(c);
  const auto r = bench::run_scaling(ladder, c);
  require_no_errors(o, r);
  if (r.has_errors()) return;
  std::vector<double> rho;
  std::ostringstream trace;
  for (const auto& spec : ladder) {
    rho.push_back(r.value("rings-binary", "gn", "spearman", spec.name()));
    trace << (trace.tellp() > 0 ? " " : "") << spec.name() << "=" << fmt(rho.back());
  }
  o.note(trace.str());
  const auto min_it = std::min_element(rho.begin(), rho.end());
  const auto min_at = static_cast<std::size_t>(min_it - rho.begin());
  o.require(rho.front() >= 0.90, "smallest model spearman " + fmt(rho.front()) + " >= 0.90");
  o.require(min_at > 0 && min_at + 1 < rho.size(), "minimum at interior model " + ladder[min_at].name());
  o.require(rho.back() - *min_it >= 0.05, "largest minus minimum " + fmt(rho.back() - *min_it) + " >= 0.05");
  require_accept_rates(o, r, c);
}

void ac9(Outcome& o) {
  Rng rng = make_rng(909);
  double worst_expansion = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + trial % 8;
    SequenceGradients sg;
    for (int t = 0; t < T; ++t) {
      sg.per_token_grads.push_back(GradientVector{testing::random_vector(13, rng)});
      sg.per_token_probs.push_back(0.4);
    }
    double diag = 0.0;
    double cross = 0.0;
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < T; ++s) {
        (t == s ? diag : cross) += sg.per_token_grads[t].values.dot(sg.per_token_grads[s].values);
      }
    }
    const double want = (diag + cross) / (static_cast<double>(T) * T);
    worst_expansion = std::max(worst_expansion, std::abs(sequence_epistemic(sg) - want) / std::abs(want));
  }
  o.require(worst_expansion <= 1e-12, "cross-term expansion rel err " + fmt(worst_expansion));

  double worst_linearity = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = MlpSpec::softmax(3, {5}, 4);
    const ParamVector p = testing::random_params(spec, rng);
    const int T = 2 + trial % 6;
    const MatrixXd contexts = MatrixXd::Random(T, 3);
    std::vector<int> tokens;
    for (int t = 0; t < T; ++t) tokens.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
    const auto sg = sequence_gradients(spec, p, contexts, tokens);
    VectorXd mean = VectorXd::Zero(p.values.size());
    for (const auto& g : sg.per_token_grads) mean += g.values / T;
    worst_linearity = std::max(
        worst_linearity, (grad_mean_target(spec, p, contexts, tokens).values - mean).cwiseAbs().maxCoeff());
  }
  o.require(worst_linearity <= 1e-10, "sequence linearity max abs err " + fmt(worst_linearity));

  bool scaling_exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    const GradientVector g{testing::random_vector(9, rng)};
    const double base = delta_method_variance(g, CovarianceModel::isotropic());
    for (double s2 : {0.25, 2.0, 8.0}) {
      // Powers of two keep the product exact in floating point.
      scaling_exact = scaling_exact && delta_method_variance(g, CovarianceModel::isotropic(s2)) == s2 * base;
    }
  }
  o.require(scaling_exact, "isotropic sigma^2 scaling exact");

  double worst_closure = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const auto spec = MlpSpec::softmax(2, {4, 4}, 2 + trial % 4);
    const ParamVector p = testing::random_params(spec, rng, 1.5);
    const auto x = as_vec(testing::random_vector(2, rng, 2.0));
    VectorXd sum = VectorXd::Zero(p.values.size());
    for (int k = 0; k < spec.class_count(); ++k) sum += grad_prob(spec, p, x, k).values;
    worst_closure = std::max(worst_closure, sum.cwiseAbs().maxCoeff());
  }
  o.require(worst_closure <= 1e-12, "softmax closure max |sum| " + fmt(worst_closure));
}

void ac10(Outcome& o) {
  const double r = stats::pearson({{1, 2, 3}, {1, 2, 4}});
  o.require(std::abs(r - 0.9820) < 1e-3, "pearson (1,2,3)/(1,2,4) = " + fmt(r));
  const auto w = stats::welch_t(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4});
  o.require(std::abs(w.t + 1.2247) < 1e-3, "welch t = " + fmt(w.t));
  o.require(std::abs(w.dof - 4.0) < 1e-3, "welch dof = " + fmt(w.dof));
  o.require(std::abs(w.p - 0.2879) < 1e-3, "welch p = " + fmt(w.p));
  const double d = stats::cohens_d(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4});
  o.require(std::abs(d + 1.0) < 1e-3, "cohens d = " + fmt(d));
  const double rho = stats::spearman({{1, 2, 2, 3}, {1, 2, 3, 4}});
  o.require(std::abs(rho - 0.9487) < 1e-3, "spearman with ties = " + fmt(rho));

  Rng rng = make_rng(1010);
  std::normal_distribution<double> z;
  int covered = 0;
  const int reps = 1000;
  for (int i = 0; i < reps; ++i) {
    std::vector<double> a(100);
    for (auto& v : a) v = z(rng);
    const auto [lo, hi] = stats::bootstrap_ci(a, {}, stats::BootstrapStatistic::Mean, 1000, 0.95,
                                              static_cast<std::uint64_t>(i));
    if (lo <= 0.0 && 0.0 <= hi) ++covered;
  }
  const double coverage = static_cast<double>(covered) / reps;
  o.require(coverage >= 0.93 && coverage <= 0.97, "bootstrap coverage " + fmt(coverage) + " in [0.93, 0.97]");
}

std::map<std::string, std::string> artifacts(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".pgm") {
      out[std::filesystem::relative(e.path(), dir).string()] = testing::slurp(e.path());
    }
  }
  return out;
}

void ac11(Outcome& o) {
  const std::vector<std::vector<std::string>> runs{
      {"validate", "--problems", "linear"},
      {"proxy-bias", "--problems", "xor,linear"},
      {"map", "--problems", "xor", "--set", "hmc.warmup=200", "--set", "hmc.samples=200"},
  };
  const auto root = testing::scratch_dir("acceptance_determinism");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::map<std::string, std::string> first;
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = root / (std::to_string(i) + "_" + std::to_string(rep));
      auto args = runs[i];
      args.insert(args.end(), {"--quiet", "--seed", "5", "--out", dir.string()});
      const auto parsed = cli::parse_args(args);
      if (!parsed.config || cli::run(*parsed.config) != cli::kExitOk) {
        o.require(false, runs[i][0] + " run " + std::to_string(rep) + " completed");
        return;
      }
      const auto files = artifacts(dir);
      if (rep == 0) {
        first = files;
        continue;
      }
      const auto pgm_count = std::count_if(files.begin(), files.end(),
                                           [](const auto& kv) { return kv.first.ends_with(".pgm"); });
      o.require(files == first, runs[i][0] + ": " + std::to_string(files.size()) + " files (" +
                                    std::to_string(pgm_count) + " PGM) byte-identical");
    }
  }
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;  // stated runtime limit; 0 when none
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"AC1", "gradient correctness", 10, ac1},
      {"AC2", "HMC calibration", 60, ac2},
      {"AC3", "binary linear validation", 600, ac3},
      {"AC4", "binary XOR validation", 900, ac4},
      {"AC5", "multiclass clusters", 1200, ac5},
      {"AC6", "regression anisotropy", 600, ac6},
      {"AC7", "proxy bias", 900, ac7},
      {"AC8", "scaling U-shape", 7200, ac8},
      {"AC9", "algebraic identities", 10, ac9},
      {"AC10", "statistics oracles", 60, ac10},
      {"AC11", "determinism", 0, ac11},
  };
  return all;
}

int run_one(const Criterion& c) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.run(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.budget_s > 0) o.require(secs < c.budget_s, "runtime " + fmt(secs) + " s < " + fmt(c.budget_s) + " s");
  std::cout << c.id << ' ' << c.title << ": " << (o.passed ? "PASS" : "FAIL") << " (" << o.detail.str()
            << ")" << std::endl;
  return o.passed ? 0 : 1;
}

}  // namespace
}  // namespace isouq::acceptance

int main(int argc, char** argv) {
  using isouq::acceptance::criteria;
  isouq::bench::set_verbosity(isouq::bench::Verbosity::Quiet);
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  int matched = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++matched;
    failures += isouq::acceptance::run_one(c);
  }
  if (matched == 0) {
    std::cerr << "usage: isouq_acceptance [AC1 ... AC11]\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
