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

#ifndef ISOUQ_STATS_HPP_
#define ISOUQ_STATS_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace isouq::stats {

/// Raised when a statistic is undefined for the given data (zero variance,
/// too few samples).
class DegenerateDataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Two equal-length finite series with at least three points.
class PairedSeries {
 public:
  PairedSeries(std::vector<double> xs, std::vector<double> ys);

  [[nodiscard]] std::span<const double> xs() const { return xs_; }
  [[nodiscard]] std::span<const double> ys() const { return ys_; }
  [[nodiscard]] std::size_t size() const { return xs_.size(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

double mean(std::span<const double> v);
/// Unbiased (n - 1) sample variance.
double variance(std::span<const double> v);

double pearson(const PairedSeries& s);

/// Pearson correlation of average ranks (ties share their mean rank).
double spearman(const PairedSeries& s);

/// 1-based ranks, ties averaged.
std::vector<double> average_ranks(std::span<const double> v);

struct WelchResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  double dof = 0.0;
};

WelchResult welch_t(std::span<const double> a, std::span<const double> b);

/// (mean a - mean b) / pooled sd with n - 1 weights.
double cohens_d(std::span<const double> a, std::span<const double> b);

enum class BootstrapStatistic { Mean, RatioOfMeans };

/// Percentile bootstrap interval. RatioOfMeans resamples (a_i, b_i) pairs
/// and evaluates mean(a) / mean(b); `b` is ignored for Mean.
std::pair<double, double> bootstrap_ci(std::span<const double> a, std::span<const double> b,
                                       BootstrapStatistic statistic, int n_resamples, double level,
                                       std::uint64_t seed);

/// Regularised incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student t cumulative distribution function.
double student_t_cdf(double t, double dof);

}  // namespace isouq::stats

#endif  // ISOUQ_STATS_HPP_
