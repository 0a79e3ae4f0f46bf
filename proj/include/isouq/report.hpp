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

// Experiment reports and their on-disk formats.
//
// report.csv:
//   problem,model,estimator,metric_name,value,seed
//   <one row per metric, sorted lexicographically>
//   # key=value            (configuration echo, one line per key)
// Fields containing a comma or quote are quoted RFC 4180 style. Values are
// printed with 17 significant digits; lines end in LF.
//
// Map images are binary PGM ("P5"), one byte per grid cell, 255 = max, rows
// written top to bottom in decreasing x2.

#ifndef ISOUQ_REPORT_HPP_
#define ISOUQ_REPORT_HPP_

#include "isouq/uq.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isouq::bench {

struct ReportRow {
  std::string problem;
  std::string model;
  std::string estimator;
  std::string metric_name;
  double value = 0.0;

  friend auto operator<=>(const ReportRow&, const ReportRow&) = default;
};

/// Metric names a report may carry.
[[nodiscard]] const std::vector<std::string>& metric_vocabulary();

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for a metric outside the vocabulary.
  void add(std::string problem, std::string model, std::string estimator,
           std::string_view metric, double value);
  void merge(const ExperimentReport& other);

  [[nodiscard]] bool has_errors() const;
  /// First row matching all four keys; throws std::out_of_range if absent.
  [[nodiscard]] double value(std::string_view problem, std::string_view estimator,
                             std::string_view metric, std::string_view model = {}) const;
  [[nodiscard]] bool contains(std::string_view problem, std::string_view estimator,
                              std::string_view metric) const;
};

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);

/// Inverse of emit_csv.
[[nodiscard]] ExperimentReport parse_csv(const std::filesystem::path& path);

/// Binary PGM of a normalised 2D map.
void emit_map_image(const UncertaintyMap& map, const std::filesystem::path& path);

/// "x1,x2,value" (or "x1,value" for 1D maps), one line per grid cell.
void emit_map_csv(const UncertaintyMap& map, const std::filesystem::path& path);

/// Same layout for an arbitrary signed grid field.
void emit_grid_csv(const std::vector<double>& xs, const std::vector<double>& ys,
                   const Eigen::MatrixXd& values, const std::filesystem::path& path);

/// "%.17g" formatting used in every emitted file.
[[nodiscard]] std::string format_value(double v);

/// Dataset dump: "x1[,x2],label" (regression: "x1,y").
void emit_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);

}  // namespace isouq::bench

#endif  // ISOUQ_REPORT_HPP_
