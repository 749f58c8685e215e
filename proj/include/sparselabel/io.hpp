// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats: raw series as CSV or JSON, derived artifacts as JSON with a
// schema field. All text is UTF-8 with LF line endings and '.' decimals.

#ifndef SPARSELABEL_IO_HPP_
#define SPARSELABEL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sparselabel/core_model.hpp"
#include "sparselabel/evaluation.hpp"
#include "sparselabel/label_planner.hpp"
#include "sparselabel/sbl_em.hpp"

namespace sparselabel::io {

using Json = nlohmann::json;

inline constexpr std::string_view kDatasetSchema = "sparselabel.dataset/1";
inline constexpr std::string_view kPriorSchema = "sparselabel.prior/1";
inline constexpr std::string_view kPlanSchema = "sparselabel.plan/1";
inline constexpr std::string_view kLabelsSchema = "sparselabel.labels/1";
inline constexpr std::string_view kPredictionSchema = "sparselabel.prediction/1";
inline constexpr std::string_view kReportSchema = "sparselabel.report/1";
inline constexpr std::string_view kWscSchema = "sparselabel.wsc/1";

std::string_view toolkit_version();

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

// Parses JSON text; syntax errors become ParseError with a line number.
Json parse_json(std::string_view text);

// Pretty-printed with a trailing newline; key order is sorted, so equal
// documents give equal bytes.
std::string dump_json(const Json& doc);

// ---------------------------------------------------------------------------
// Datasets.

enum class DatasetFormat { kCsv, kJson };

// From the file extension (.csv or .json).
DatasetFormat infer_format(const std::filesystem::path& path);

// Header `t` (seconds) or `frame` (integer index, needs frame_rate), then one
// column per slice named by its id. A `t` grid infers the frame rate from its
// spacing when none is given. Rows must be equidistant to 1e-9 relative.
Dataset parse_dataset_csv(std::string_view text,
                          std::optional<double> frame_rate = std::nullopt);

// {"schema", "frame_rate", optional "times", "slices": [{"id", "values"}]}.
// Without "times", t_k = k / frame_rate.
Dataset parse_dataset_json(std::string_view text);

std::string dataset_to_csv(const Dataset& y);
std::string dataset_to_json(const Dataset& y);

Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<DatasetFormat> format = std::nullopt,
                     std::optional<double> frame_rate = std::nullopt);
void write_dataset(const std::filesystem::path& path, const Dataset& y,
                   DatasetFormat format);

// ---------------------------------------------------------------------------
// Prior artifacts: the fitted and pruned hyperparameters plus the grids.

struct PriorArtifact {
  std::vector<double> times;
  double frame_rate = 0.0;
  std::size_t m_max = 0;
  double grid_spacing = 0.0;
  EmConfig em;
  double prune_ratio = 0.01;
  std::string dataset;  // as given on the command line
  // Full-grid fit; absent in hand-written priors.
  std::optional<PriorFit> fit;
  std::vector<std::size_t> kept_frequency_indices;
  std::vector<double> kept_frequencies;  // Hz, DC first
  std::vector<double> alpha;             // pruned, DC first
  double sigma2 = 0.0;
};

PriorArtifact make_prior_artifact(const Dataset& y, std::size_t m_max,
                                  double grid_spacing, const EmConfig& em,
                                  double prune_ratio, std::string dataset);

Json prior_to_json(const PriorArtifact& prior);

// Throws ParseError on schema violations, ValidationError when a pruned
// variance is zero or the grids are inconsistent.
PriorArtifact prior_from_json(const Json& doc);

// Planner model on the prior's own time grid, or on `time_grid` if given.
PlannerModel planner_model(const PriorArtifact& prior,
                           const std::optional<TimeGrid>& time_grid = std::nullopt);

// ---------------------------------------------------------------------------
// Labels: JSON {"labels": [{"index", "value"}]} or CSV `index,value`.

struct Label {
  std::size_t index = 0;
  double value = 0.0;
};

std::vector<Label> parse_labels_json(const Json& doc);
std::vector<Label> parse_labels_csv(std::string_view text);
std::vector<Label> load_labels(const std::filesystem::path& path);
Json labels_to_json(const std::vector<Label>& labels);

// ---------------------------------------------------------------------------
// Derived artifacts. `config` is embedded verbatim.

Json plan_to_json(const LabelPlan& plan, const Json& config);
LabelPlan plan_from_json(const Json& doc);

Json prediction_to_json(const PlannerModel& model,
                        const std::vector<double>& times,
                        const std::vector<Label>& labels, const Json& config);

Json band_to_json(const BandSummary& band);
Json report_to_json(const std::vector<EvalReport>& reports, const Json& config);

Json wsc_estimate_to_json(const WscEstimate& est, std::size_t bins,
                          bool include_samples, const Json& config);
Json wsc_exact_to_json(const ExactWsc& exact, const Json& config);

// Plain columnar exports for plotting.
std::string report_curves_csv(const EvalReport& report);
std::string prediction_csv(const Json& prediction);
std::string alpha_spectrum_csv(const PriorArtifact& prior);

}  // namespace sparselabel::io

#endif  // SPARSELABEL_IO_HPP_
