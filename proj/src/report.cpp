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

#include "isouq/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace isouq::bench {
namespace {

constexpr std::string_view kHeader = "problem,model,estimator,metric_name,value,seed";

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string q = "\"";
  for (char ch : field) {
    if (ch == '"') q += '"';
    q += ch;
  }
  q += '"';
  return q;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        in_quotes = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  if (in_quotes) throw std::runtime_error("unterminated quote in CSV line");
  return fields;
}

double parse_value(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::runtime_error("bad numeric field: " + text);
  return v;
}

}  // namespace

const std::vector<std::string>& metric_vocabulary() {
  static const std::vector<std::string> vocab{
      "pearson",     "spearman",  "ratio_top_bottom", "welch_t",        "welch_p",
      "cohens_d",    "eig_min",   "eig_max",          "eig_ratio",      "param_count",
      "accuracy",    "rmse",      "accept_rate",      "hmc_draws",      "max_mean_error",
      "max_cov_error", "error"};
  return vocab;
}

void ExperimentReport::add(std::string problem, std::string model, std::string estimator,
                           std::string_view metric, double value) {
  const auto& vocab = metric_vocabulary();
  if (std::find(vocab.begin(), vocab.end(), metric) == vocab.end()) {
    throw std::invalid_argument("metric outside the report vocabulary: " + std::string(metric));
  }
  rows.push_back(ReportRow{std::move(problem), std::move(model), std::move(estimator),
                           std::string(metric), value});
}

void ExperimentReport::merge(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

bool ExperimentReport::has_errors() const {
  return std::any_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.metric_name == "error"; });
}

double ExperimentReport::value(std::string_view problem, std::string_view estimator,
                               std::string_view metric, std::string_view model) const {
  for (const auto& r : rows) {
    if (r.problem == problem && r.estimator == estimator && r.metric_name == metric &&
        (model.empty() || r.model == model)) {
      return r.value;
    }
  }
  throw std::out_of_range("no report row " + std::string(problem) + "/" + std::string(model) + "/" +
                          std::string(estimator) + "/" + std::string(metric));
}

bool ExperimentReport::contains(std::string_view problem, std::string_view estimator,
                                std::string_view metric) const {
  return std::any_of(rows.begin(), rows.end(), [&](const ReportRow& r) {
    return r.problem == problem && r.estimator == estimator && r.metric_name == metric;
  });
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::vector<ReportRow> rows = report.rows;
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.problem != b.problem) return a.problem < b.problem;
    if (a.model != b.model) return a.model < b.model;
    if (a.estimator != b.estimator) return a.estimator < b.estimator;
    if (a.metric_name != b.metric_name) return a.metric_name < b.metric_name;
    // Total order on values so ties cannot depend on insertion order.
    return format_value(a.value) < format_value(b.value);
  });
  auto out = open_out(path);
  out << kHeader << '\n';
  const std::string seed = std::to_string(report.seed);
  for (const auto& r : rows) {
    out << quote(r.problem) << ',' << quote(r.model) << ',' << quote(r.estimator) << ','
        << quote(r.metric_name) << ',' << format_value(r.value) << ',' << seed << '\n';
  }
  for (const auto& [key, value] : report.config_echo) out << "# " << key << '=' << value << '\n';
  finish(out, path);
}

ExperimentReport parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error(path.string() + ": missing report header");
  }
  ExperimentReport report;
  bool seed_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw std::runtime_error("bad metadata line: " + line);
      report.config_echo.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw std::runtime_error("report row needs 6 fields: " + line);
    report.rows.push_back(ReportRow{f[0], f[1], f[2], f[3], parse_value(f[4])});
    const auto seed = static_cast<std::uint64_t>(std::stoull(f[5]));
    if (seed_seen && seed != report.seed) throw std::runtime_error("mixed seeds in report");
    report.seed = seed;
    seed_seen = true;
  }
  return report;
}

void emit_map_image(const UncertaintyMap& map, const std::filesystem::path& path) {
  map.validate();
  if (!map.normalized) throw std::invalid_argument("emit_map_image needs a normalised map");
  if (map.grid_ys.empty()) throw std::invalid_argument("emit_map_image needs a 2D map");
  if (map.values.maxCoeff() > 1.0) throw std::invalid_argument("normalised map exceeds 1");
  const auto width = map.values.cols();
  const auto height = map.values.rows();
  std::string payload;
  payload.reserve(static_cast<std::size_t>(width * height));
  for (Eigen::Index iy = height - 1; iy >= 0; --iy) {
    for (Eigen::Index ix = 0; ix < width; ++ix) {
      payload += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * map.values(iy, ix))));
    }
  }
  auto out = open_out(path, true);
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  finish(out, path);
}

void emit_grid_csv(const std::vector<double>& xs, const std::vector<double>& ys,
                   const Eigen::MatrixXd& values, const std::filesystem::path& path) {
  const auto rows = ys.empty() ? 1 : static_cast<Eigen::Index>(ys.size());
  if (values.rows() != rows || values.cols() != static_cast<Eigen::Index>(xs.size())) {
    throw std::invalid_argument("grid values do not match the axes");
  }
  auto out = open_out(path);
  out << (ys.empty() ? "x1,value\n" : "x1,x2,value\n");
  for (Eigen::Index iy = 0; iy < rows; ++iy) {
    for (Eigen::Index ix = 0; ix < values.cols(); ++ix) {
      out << format_value(xs[static_cast<std::size_t>(ix)]) << ',';
      if (!ys.empty()) out << format_value(ys[static_cast<std::size_t>(iy)]) << ',';
      out << format_value(values(iy, ix)) << '\n';
    }
  }
  finish(out, path);
}

void emit_map_csv(const UncertaintyMap& map, const std::filesystem::path& path) {
  map.validate();
  emit_grid_csv(map.grid_xs, map.grid_ys, map.values, path);
}

void emit_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  data.validate();
  auto out = open_out(path);
  for (int j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << (data.is_regression() ? "y\n" : "label\n");
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << format_value(data.inputs(i, j)) << ',';
    if (data.is_regression()) {
      out << format_value(data.targets(i)) << '\n';
    } else {
      out << data.labels[static_cast<std::size_t>(i)] << '\n';
    }
  }
  finish(out, path);
}

}  // namespace isouq::bench
