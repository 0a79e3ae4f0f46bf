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

#include "isouq/stats.hpp"

#include "isouq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace isouq::stats {
namespace {

// Mean as v[0] + mean(v - v[0]): exact on constant data.
double shifted_mean(std::span<const double> v) {
  const double base = v[0];
  double acc = 0.0;
  for (double x : v) acc += x - base;
  return base + acc / static_cast<double>(v.size());
}

double sum_sq_dev(std::span<const double> v, double m) {
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 20000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

PairedSeries::PairedSeries(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size()) throw std::invalid_argument("paired series differ in length");
  if (xs_.size() < 3) throw std::invalid_argument("paired series need at least three points");
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i])) {
      throw std::invalid_argument("paired series must be finite");
    }
  }
}

double mean(std::span<const double> v) {
  if (v.empty()) throw DegenerateDataError("mean of an empty series");
  return shifted_mean(v);
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw DegenerateDataError("variance needs at least two values");
  return sum_sq_dev(v, mean(v)) / static_cast<double>(v.size() - 1);
}

double pearson(const PairedSeries& s) {
  const double mx = mean(s.xs());
  const double my = mean(s.ys());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double dx = s.xs()[i] - mx;
    const double dy = s.ys()[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw DegenerateDataError("Pearson correlation undefined for a zero-variance series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const PairedSeries& s) {
  return pearson(PairedSeries(average_ranks(s.xs()), average_ranks(s.ys())));
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_cf(b, a, 1.0 - x) / b;
}

namespace {
// P(|T| > |t|) without the cancellation of 1 - cdf.
double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  const double x = dof / (dof + t * t);
  return std::clamp(incomplete_beta(0.5 * dof, 0.5, x), 0.0, 1.0);
}
}  // namespace

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_cdf: dof must be positive");
  const double tail = 0.5 * student_t_two_sided(t, dof);
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateDataError("Welch test needs n >= 2 per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = variance(a);
  const double vb = variance(b);
  if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateDataError("Welch test needs positive variances");
  const double sa = va / na;
  const double sb = vb / nb;
  WelchResult r;
  r.t = (mean(a) - mean(b)) / std::sqrt(sa + sb);
  r.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p = student_t_two_sided(r.t, r.dof);
  return r;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateDataError("Cohen's d needs n >= 2 per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled =
      std::sqrt(((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0));
  if (!(pooled > 0.0)) throw DegenerateDataError("Cohen's d undefined for zero pooled sd");
  return (mean(a) - mean(b)) / pooled;
}

std::pair<double, double> bootstrap_ci(std::span<const double> a, std::span<const double> b,
                                       BootstrapStatistic statistic, int n_resamples, double level,
                                       std::uint64_t seed) {
  if (a.empty()) throw std::invalid_argument("bootstrap_ci: empty sample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level in (0, 1)");
  if (n_resamples < 1) throw std::invalid_argument("bootstrap_ci: n_resamples must be >= 1");
  const bool ratio = statistic == BootstrapStatistic::RatioOfMeans;
  if (ratio && b.size() != a.size()) {
    throw std::invalid_argument("bootstrap_ci: ratio of means needs paired samples");
  }
  Rng rng = make_rng(seed, stream::kBootstrap);
  std::uniform_int_distribution<std::size_t> pick(0, a.size() - 1);
  std::vector<double> ra(a.size());
  std::vector<double> rb(ratio ? a.size() : 0);
  std::vector<double> stats_out(static_cast<std::size_t>(n_resamples));
  for (auto& out : stats_out) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::size_t j = pick(rng);
      ra[i] = a[j];
      if (ratio) rb[i] = b[j];
    }
    out = ratio ? shifted_mean(ra) / shifted_mean(rb) : shifted_mean(ra);
  }
  std::sort(stats_out.begin(), stats_out.end());
  const double alpha = 0.5 * (1.0 - level);
  return {quantile_sorted(stats_out, alpha), quantile_sorted(stats_out, 1.0 - alpha)};
}

}  // namespace isouq::stats
