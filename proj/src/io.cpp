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

#include "sparselabel/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <system_error>

#include "sparselabel/error.hpp"

#ifndef SPARSELABEL_VERSION_STRING
#define SPARSELABEL_VERSION_STRING "0.0.0"
#endif

namespace sparselabel::io {
namespace {

constexpr double kEquidistanceTolerance = 1e-9;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(
    std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    const std::size_t end = pos == std::string_view::npos ? text.size() : pos;
    ++number;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) out.emplace_back(number, line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError("not a number: '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(v)) {
    throw ParseError("non-finite value '" + std::string(field) + "'", line);
  }
  return v;
}

template <typename T>
T get_field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) {
    return fallback;
  }
  return get_field<T>(obj, key);
}

void check_schema(const Json& doc, std::string_view schema) {
  const auto found = get_field<std::string>(doc, "schema");
  if (found != schema) {
    throw ParseError("expected schema '" + std::string(schema) + "', got '" +
                     found + "'");
  }
}

Json header(std::string_view schema, const Json& config) {
  Json doc;
  doc["schema"] = schema;
  doc["toolkit_version"] = toolkit_version();
  doc["config"] = config;
  return doc;
}

// Builds the grid from parsed times; `line_of(k)` maps a row to its file
// line for error messages.
template <typename LineOf>
TimeGrid grid_from_times(std::vector<double> times,
                         std::optional<double> frame_rate, LineOf line_of) {
  const std::size_t n = times.size();
  if (n == 0) throw ParseError("dataset has no rows");
  for (std::size_t k = 1; k < n; ++k) {
    if (times[k] == times[k - 1]) {
      throw ParseError("duplicate time " + format_double(times[k]), line_of(k));
    }
    if (times[k] < times[k - 1]) {
      throw ParseError("times must increase", line_of(k));
    }
  }
  double step;
  if (n >= 2) {
    step = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
    if (frame_rate) {
      const double given = 1.0 / *frame_rate;
      if (std::abs(step - given) > kEquidistanceTolerance * given) {
        throw ParseError("time spacing " + format_double(step) +
                         " does not match frame rate " +
                         format_double(*frame_rate));
      }
    }
  } else {
    if (!frame_rate) {
      throw ParseError("a single-row dataset needs an explicit frame rate");
    }
    step = 1.0 / *frame_rate;
  }
  // Gaps are compared with the first one so the error names the row that
  // breaks the spacing.
  const double ref = frame_rate ? 1.0 / *frame_rate
                                : (n >= 2 ? times[1] - times[0] : step);
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs((times[k] - times[k - 1]) - ref) >
        kEquidistanceTolerance * ref) {
      throw ParseError("times not equidistant", line_of(k));
    }
  }
  const double fps = frame_rate ? *frame_rate
                                : static_cast<double>(n - 1) /
                                      (times[n - 1] - times[0]);
  try {
    return TimeGrid(times, fps);
  } catch (const ValidationError&) {
    // Within the file tolerance but not the grid's; snap to the grid.
    for (std::size_t k = 0; k < n; ++k) {
      times[k] = times[0] + static_cast<double>(k) / fps;
    }
    return TimeGrid(std::move(times), fps);
  }
}

Json em_to_json(const EmConfig& em) {
  Json j;
  j["sigma2_init"] = em.sigma2_init;
  j["alpha_init"] = em.alpha_init;
  j["eps_min"] = em.eps_min;
  j["max_iter"] = em.max_iter;
  j["k_order"] = em.k_order ? Json(*em.k_order) : Json(nullptr);
  j["k_order_ratio"] = em.k_order_ratio;
  j["update_variant"] = to_string(em.update_variant);
  return j;
}

EmConfig em_from_json(const Json& j) {
  EmConfig em;
  em.sigma2_init = get_or(j, "sigma2_init", em.sigma2_init);
  em.alpha_init = get_or(j, "alpha_init", em.alpha_init);
  em.eps_min = get_or(j, "eps_min", em.eps_min);
  em.max_iter = get_or(j, "max_iter", em.max_iter);
  if (j.contains("k_order") && !j.at("k_order").is_null()) {
    em.k_order = get_field<std::size_t>(j, "k_order");
  }
  em.k_order_ratio = get_or(j, "k_order_ratio", em.k_order_ratio);
  em.update_variant = parse_alpha_update(
      get_or<std::string>(j, "update_variant", "row-sum"));
  return em;
}

StopReason parse_stop_reason(std::string_view name) {
  for (StopReason r : {StopReason::kConverged, StopReason::kMaxIterations,
                       StopReason::kCollapsed}) {
    if (to_string(r) == name) return r;
  }
  throw ParseError("unknown stop reason '" + std::string(name) + "'");
}

Json plan_curve_to_json(const PlanCurve& c) {
  return Json{{"indices", c.indices},
              {"spread", c.spread},
              {"nll", c.nll},
              {"band_width", c.band_width}};
}

std::string csv_row(std::initializer_list<double> values) {
  std::string out;
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    out += format_double(v);
    first = false;
  }
  out += '\n';
  return out;
}

}  // namespace

std::string_view toolkit_version() { return SPARSELABEL_VERSION_STRING; }

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ValidationError("cannot format number");
  return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("io_error", "write to '" + path.string() + "' failed");
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = static_cast<std::size_t>(
        std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n') + 1);
    throw ParseError("malformed JSON", line);
  }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

DatasetFormat infer_format(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".csv") return DatasetFormat::kCsv;
  if (ext == ".json") return DatasetFormat::kJson;
  throw ValidationError("cannot infer the format of '" + path.string() +
                        "' (expected .csv or .json)");
}

Dataset parse_dataset_csv(std::string_view text,
                          std::optional<double> frame_rate) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("empty dataset file");
  const auto header = split(lines[0].second, ',');
  const std::size_t header_line = lines[0].first;
  if (header[0] != "t" && header[0] != "frame") {
    throw ParseError("first column must be 't' or 'frame'", header_line);
  }
  const bool by_frame = header[0] == "frame";
  if (by_frame && !frame_rate) {
    throw ParseError("a 'frame' column needs an explicit frame rate");
  }
  if (header.size() < 2) throw ParseError("no slice columns", header_line);
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw ParseError("empty slice id", header_line);
    if (!seen.insert(std::string(header[c])).second) {
      throw ParseError("duplicate slice id '" + std::string(header[c]) + "'",
                       header_line);
    }
    ids.emplace_back(header[c]);
  }

  const std::size_t n = lines.size() - 1;
  const std::size_t l_count = ids.size();
  std::vector<double> times(n);
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l_count));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& [line_no, line] = lines[k + 1];
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       line_no);
    }
    const double t = parse_number(fields[0], line_no);
    if (by_frame) {
      if (t != std::floor(t) || t < 0.0) {
        throw ParseError("frame index must be a non-negative integer", line_no);
      }
      times[k] = t / *frame_rate;
    } else {
      times[k] = t;
    }
    for (std::size_t c = 0; c < l_count; ++c) {
      values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
          parse_number(fields[c + 1], line_no);
    }
  }
  TimeGrid tg = grid_from_times(std::move(times), frame_rate,
                                [&](std::size_t k) { return lines[k + 1].first; });
  return Dataset(std::move(values), std::move(tg), std::move(ids));
}

Dataset parse_dataset_json(std::string_view text) {
  const Json doc = parse_json(text);
  check_schema(doc, kDatasetSchema);
  const auto fps = get_field<double>(doc, "frame_rate");
  if (!(fps > 0.0)) throw ParseError("frame_rate must be > 0");
  const Json& slices = doc.contains("slices") ? doc.at("slices") : Json();
  if (!slices.is_array() || slices.empty()) {
    throw ParseError("'slices' must be a non-empty array");
  }
  std::vector<std::string> ids;
  std::vector<std::vector<double>> columns;
  for (const Json& s : slices) {
    ids.push_back(get_field<std::string>(s, "id"));
    columns.push_back(get_field<std::vector<double>>(s, "values"));
  }
  const std::size_t n = columns[0].size();
  for (std::size_t l = 0; l < columns.size(); ++l) {
    if (columns[l].size() != n) {
      throw ParseError("slice '" + ids[l] + "' has " +
                       std::to_string(columns[l].size()) + " values, expected " +
                       std::to_string(n));
    }
  }
  std::vector<double> times;
  if (doc.contains("times")) {
    times = get_field<std::vector<double>>(doc, "times");
    if (times.size() != n) throw ParseError("'times' length differs from the slices");
  } else {
    for (std::size_t k = 0; k < n; ++k) times.push_back(static_cast<double>(k) / fps);
  }
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t l = 0; l < columns.size(); ++l) {
    for (std::size_t k = 0; k < n; ++k) {
      values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = columns[l][k];
    }
  }
  TimeGrid tg = grid_from_times(std::move(times), fps, [](std::size_t) {
    return std::size_t{0};
  });
  return Dataset(std::move(values), std::move(tg), std::move(ids));
}

std::string dataset_to_csv(const Dataset& y) {
  std::string out = "t";
  for (const std::string& id : y.slice_ids()) {
    if (id.find_first_of(",\n\r") != std::string::npos) {
      throw ValidationError("slice id '" + id + "' cannot be written to CSV");
    }
    out += ',' + id;
  }
  out += '\n';
  const TimeGrid& tg = y.time_grid();
  for (std::size_t k = 0; k < y.sample_count(); ++k) {
    out += format_double(tg[k]);
    for (std::size_t l = 0; l < y.slice_count(); ++l) {
      out += ',';
      out += format_double(y.values()(static_cast<Eigen::Index>(k),
                                      static_cast<Eigen::Index>(l)));
    }
    out += '\n';
  }
  return out;
}

std::string dataset_to_json(const Dataset& y) {
  Json doc;
  doc["schema"] = kDatasetSchema;
  doc["frame_rate"] = y.time_grid().frame_rate();
  doc["times"] = std::vector<double>(y.time_grid().times().begin(), y.time_grid().times().end());
  Json slices = Json::array();
  for (std::size_t l = 0; l < y.slice_count(); ++l) {
    const Vector col = y.values().col(static_cast<Eigen::Index>(l));
    slices.push_back({{"id", y.slice_ids()[l]},
                      {"values", std::vector<double>(col.begin(), col.end())}});
  }
  doc["slices"] = std::move(slices);
  return dump_json(doc);
}

Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<DatasetFormat> format,
                     std::optional<double> frame_rate) {
  const DatasetFormat f = format ? *format : infer_format(path);
  const std::string text = read_file(path);
  if (f == DatasetFormat::kCsv) return parse_dataset_csv(text, frame_rate);
  Dataset y = parse_dataset_json(text);
  if (frame_rate && *frame_rate != y.time_grid().frame_rate()) {
    throw ValidationError("frame rate given on the command line differs from "
                          "the file's");
  }
  return y;
}

void write_dataset(const std::filesystem::path& path, const Dataset& y,
                   DatasetFormat format) {
  write_file(path, format == DatasetFormat::kCsv ? dataset_to_csv(y)
                                                 : dataset_to_json(y));
}

PriorArtifact make_prior_artifact(const Dataset& y, std::size_t m_max,
                                  double grid_spacing, const EmConfig& em,
                                  double prune_ratio, std::string dataset) {
  const FrequencyGrid fg = build_frequency_grid(m_max, grid_spacing);
  const TransferMatrix a = build_transfer_matrix(y.time_grid(), fg);
  PriorFit fit = fit_sparse_prior(y, a, em);
  const PrunedModel pruned = prune(fit, a, prune_ratio);

  PriorArtifact out;
  out.times.assign(y.time_grid().times().begin(), y.time_grid().times().end());
  out.frame_rate = y.time_grid().frame_rate();
  out.m_max = m_max;
  out.grid_spacing = grid_spacing;
  out.em = em;
  out.prune_ratio = prune_ratio;
  out.dataset = std::move(dataset);
  out.kept_frequency_indices = pruned.kept_frequency_indices;
  for (std::size_t i = 0; i < pruned.transfer.freq_grid().size(); ++i) {
    out.kept_frequencies.push_back(pruned.transfer.freq_grid()[i]);
  }
  out.alpha.assign(pruned.hyper.alpha().begin(), pruned.hyper.alpha().end());
  out.sigma2 = pruned.hyper.sigma2();
  out.fit = std::move(fit);
  return out;
}

Json prior_to_json(const PriorArtifact& prior) {
  Json config;
  config["dataset"] = prior.dataset;
  config["frequency_grid"] = {{"m_max", prior.m_max},
                              {"spacing", prior.grid_spacing}};
  config["em"] = em_to_json(prior.em);
  config["prune_ratio"] = prior.prune_ratio;
  Json doc = header(kPriorSchema, config);
  doc["time_grid"] = {{"frame_rate", prior.frame_rate}, {"times", prior.times}};
  if (prior.fit) {
    const PriorFit& f = *prior.fit;
    doc["fit"] = {
        {"alpha", std::vector<double>(f.hyper.alpha().begin(), f.hyper.alpha().end())},
        {"sigma2", f.hyper.sigma2()},
        {"iterations_used", f.iterations_used},
        {"final_epsilon", f.final_epsilon},
        {"stop_reason", to_string(f.stop_reason)},
        {"evidence_trace", f.evidence_trace}};
  }
  doc["pruned"] = {{"frequency_indices", prior.kept_frequency_indices},
                   {"frequencies", prior.kept_frequencies},
                   {"alpha", prior.alpha},
                   {"sigma2", prior.sigma2}};
  return doc;
}

PriorArtifact prior_from_json(const Json& doc) {
  check_schema(doc, kPriorSchema);
  PriorArtifact out;
  const Json config = doc.contains("config") ? doc.at("config") : Json::object();
  out.dataset = get_or<std::string>(config, "dataset", "");
  if (config.contains("frequency_grid")) {
    const Json& g = config.at("frequency_grid");
    out.m_max = get_field<std::size_t>(g, "m_max");
    out.grid_spacing = get_field<double>(g, "spacing");
  }
  if (config.contains("em")) out.em = em_from_json(config.at("em"));
  out.prune_ratio = get_or(config, "prune_ratio", out.prune_ratio);

  const Json tg = doc.contains("time_grid") ? doc.at("time_grid") : Json();
  out.frame_rate = get_field<double>(tg, "frame_rate");
  if (tg.contains("times")) {
    out.times = get_field<std::vector<double>>(tg, "times");
  } else {
    const auto n = get_field<std::size_t>(tg, "n");
    for (std::size_t k = 0; k < n; ++k) {
      out.times.push_back(static_cast<double>(k) / out.frame_rate);
    }
  }

  if (doc.contains("fit")) {
    const Json& f = doc.at("fit");
    PriorFit fit{HyperParams(get_field<std::vector<double>>(f, "alpha"),
                             get_field<double>(f, "sigma2")),
                 get_field<std::size_t>(f, "iterations_used"),
                 get_field<double>(f, "final_epsilon"),
                 get_field<std::vector<double>>(f, "evidence_trace"),
                 parse_stop_reason(get_field<std::string>(f, "stop_reason"))};
    out.fit = std::move(fit);
  }

  const Json p = doc.contains("pruned") ? doc.at("pruned") : Json();
  out.kept_frequencies = get_field<std::vector<double>>(p, "frequencies");
  out.alpha = get_field<std::vector<double>>(p, "alpha");
  out.sigma2 = get_field<double>(p, "sigma2");
  if (p.contains("frequency_indices")) {
    out.kept_frequency_indices =
        get_field<std::vector<std::size_t>>(p, "frequency_indices");
  } else {
    for (std::size_t i = 0; i < out.kept_frequencies.size(); ++i) {
      out.kept_frequency_indices.push_back(i);
    }
  }
  if (out.alpha.size() != out.kept_frequencies.size() ||
      out.kept_frequency_indices.size() != out.kept_frequencies.size()) {
    throw ParseError("pruned frequencies, indices and alphas differ in length");
  }
  if (out.alpha.empty()) throw ParseError("pruned model is empty");
  for (std::size_t i = 0; i < out.alpha.size(); ++i) {
    if (!(out.alpha[i] > 0.0) || !std::isfinite(out.alpha[i])) {
      throw ValidationError(
          "pruned prior has a non-positive variance at frequency index " +
          std::to_string(out.kept_frequency_indices[i]) +
          "; zero-variance frequencies must be pruned");
    }
  }
  // Constructing the pieces validates grids and variances.
  FrequencyGrid(out.kept_frequencies);
  HyperParams(out.alpha, out.sigma2);
  TimeGrid(out.times, out.frame_rate);
  return out;
}

PlannerModel planner_model(const PriorArtifact& prior,
                           const std::optional<TimeGrid>& time_grid) {
  const TimeGrid tg = time_grid ? *time_grid : TimeGrid(prior.times, prior.frame_rate);
  const TransferMatrix a =
      build_transfer_matrix(tg, FrequencyGrid(prior.kept_frequencies));
  const HyperParams hyper(prior.alpha, prior.sigma2);
  return PlannerModel(a.entries(), hyper.gamma_vector(), hyper.sigma2());
}

std::vector<Label> parse_labels_json(const Json& doc) {
  if (doc.contains("schema")) check_schema(doc, kLabelsSchema);
  const Json& arr = doc.contains("labels") ? doc.at("labels") : Json();
  if (!arr.is_array()) throw ParseError("'labels' must be an array");
  std::vector<Label> out;
  for (const Json& item : arr) {
    out.push_back(Label{get_field<std::size_t>(item, "index"),
                        get_field<double>(item, "value")});
  }
  return out;
}

std::vector<Label> parse_labels_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError("empty labels file");
  const auto head = split(lines[0].second, ',');
  if (head.size() != 2 || head[0] != "index" || head[1] != "value") {
    throw ParseError("labels header must be 'index,value'", lines[0].first);
  }
  std::vector<Label> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, line] = lines[i];
    const auto fields = split(line, ',');
    if (fields.size() != 2) throw ParseError("expected 2 fields", line_no);
    const double idx = parse_number(fields[0], line_no);
    if (idx < 0.0 || idx != std::floor(idx)) {
      throw ParseError("index must be a non-negative integer", line_no);
    }
    out.push_back(Label{static_cast<std::size_t>(idx),
                        parse_number(fields[1], line_no)});
  }
  return out;
}

std::vector<Label> load_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".csv") return parse_labels_csv(text);
  return parse_labels_json(parse_json(text));
}

Json labels_to_json(const std::vector<Label>& labels) {
  Json arr = Json::array();
  for (const Label& l : labels) arr.push_back({{"index", l.index}, {"value", l.value}});
  return Json{{"schema", kLabelsSchema}, {"labels", std::move(arr)}};
}

Json plan_to_json(const LabelPlan& plan, const Json& config) {
  Json doc = header(kPlanSchema, config);
  doc["plan"] = {{"indices", plan.indices},
                 {"spreads", plan.spreads},
                 {"gains", plan.gains},
                 {"initial_spread", plan.initial_spread},
                 {"measure", to_string(plan.measure)},
                 {"direction", to_string(plan.direction)}};
  return doc;
}

LabelPlan plan_from_json(const Json& doc) {
  check_schema(doc, kPlanSchema);
  const Json p = doc.contains("plan") ? doc.at("plan") : Json();
  LabelPlan plan;
  plan.indices = get_field<std::vector<std::size_t>>(p, "indices");
  plan.spreads = get_field<std::vector<double>>(p, "spreads");
  plan.gains = get_field<std::vector<double>>(p, "gains");
  plan.initial_spread = get_field<double>(p, "initial_spread");
  plan.measure = parse_spread_measure(get_field<std::string>(p, "measure"));
  plan.direction = parse_direction(get_field<std::string>(p, "direction"));
  return plan;
}

Json prediction_to_json(const PlannerModel& model,
                        const std::vector<double>& times,
                        const std::vector<Label>& labels, const Json& config) {
  if (times.size() != model.sample_count()) {
    throw ValidationError("time grid does not match the model");
  }
  LabelSet set;
  std::vector<double> values;
  Json points = Json::array();
  for (const Label& l : labels) {
    if (l.index >= model.sample_count()) {
      throw ValidationError("label index " + std::to_string(l.index) +
                            " out of range");
    }
    if (!std::isfinite(l.value)) throw ValidationError("label values must be finite");
    set.insert(l.index);
    values.push_back(l.value);
    points.push_back({{"index", l.index}, {"time", times[l.index]}, {"value", l.value}});
  }
  const RestrictedPosterior rp =
      restricted_posterior(model, set, std::span<const double>(values));
  const Vector mean = model.transfer() * rp.mean;
  const Vector std_dev = predictive_variance(model, rp.covariance).cwiseSqrt();

  Json doc = header(kPredictionSchema, config);
  doc["times"] = times;
  doc["mean"] = std::vector<double>(mean.begin(), mean.end());
  doc["std"] = std::vector<double>(std_dev.begin(), std_dev.end());
  doc["labels"] = std::move(points);
  doc["spread"] = {
      {"trace", spread_from_amplitude_covariance(model, rp.covariance, SpreadMeasure::kTrace)},
      {"det_root", spread_from_amplitude_covariance(model, rp.covariance, SpreadMeasure::kDetRoot)},
      {"max_eigenvalue", spread_from_amplitude_covariance(model, rp.covariance, SpreadMeasure::kMaxEigenvalue)}};
  return doc;
}

Json band_to_json(const BandSummary& b) {
  return Json{{"mean", b.mean}, {"min", b.min}, {"max", b.max},
              {"p01", b.p01},   {"p05", b.p05}, {"p50", b.p50},
              {"p95", b.p95}};
}

Json report_to_json(const std::vector<EvalReport>& reports, const Json& config) {
  Json doc = header(kReportSchema, config);
  Json folds = Json::array();
  for (const EvalReport& r : reports) {
    Json spread = Json::array();
    Json nll = Json::array();
    for (const BandSummary& b : r.baseline_spread) spread.push_back(band_to_json(b));
    for (const BandSummary& b : r.baseline_nll) nll.push_back(band_to_json(b));
    folds.push_back({{"left_out_index", r.left_out_index},
                     {"left_out_slice", r.left_out_slice},
                     {"kept_frequencies", r.kept_frequencies},
                     {"alpha", r.alpha},
                     {"sigma2", r.sigma2},
                     {"em_iterations", r.em_iterations},
                     {"stop_reason", to_string(r.stop_reason)},
                     {"measure", to_string(r.measure)},
                     {"nll_scope", to_string(r.scope)},
                     {"seed", r.seed},
                     {"greedy", plan_curve_to_json(r.greedy)},
                     {"worst", plan_curve_to_json(r.worst)},
                     {"baseline",
                      {{"seeds", r.baseline_seeds},
                       {"spread", std::move(spread)},
                       {"nll", std::move(nll)}}}});
  }
  doc["folds"] = std::move(folds);
  return doc;
}

Json wsc_estimate_to_json(const WscEstimate& est, std::size_t bins,
                          bool include_samples, const Json& config) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  Json doc = header(kWscSchema, config);
  doc["mode"] = "estimate";
  doc["seed"] = est.seed;
  doc["sample_count"] = est.sample_count;
  doc["max_ratio"] = est.max_ratio;
  doc["fraction_above_one"] = est.fraction_above_one;
  std::vector<double> edges;
  std::vector<std::size_t> counts(bins, 0);
  if (!est.samples.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(est.samples.begin(), est.samples.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    for (std::size_t b = 0; b <= bins; ++b) {
      edges.push_back(lo + width * static_cast<double>(b));
    }
    for (double s : est.samples) {
      auto b = static_cast<std::size_t>((s - lo) / width);
      counts[std::min(b, bins - 1)] += 1;
    }
  }
  doc["histogram"] = {{"edges", edges}, {"counts", counts}};
  if (include_samples) doc["samples"] = est.samples;
  return doc;
}

Json wsc_exact_to_json(const ExactWsc& exact, const Json& config) {
  Json doc = header(kWscSchema, config);
  doc["mode"] = "exact";
  doc["constant"] = exact.constant;
  doc["triples"] = exact.triples;
  return doc;
}

std::string report_curves_csv(const EvalReport& r) {
  std::string out =
      "k,greedy_spread,greedy_nll,greedy_band_width,worst_spread,worst_nll,"
      "worst_band_width,random_spread_mean,random_spread_min,"
      "random_spread_p05,random_spread_p95,random_spread_max,"
      "random_nll_mean,random_nll_min,random_nll_p05,random_nll_p95,"
      "random_nll_max\n";
  for (std::size_t i = 0; i < r.greedy.spread.size(); ++i) {
    const BandSummary& s = r.baseline_spread[i];
    const BandSummary& n = r.baseline_nll[i];
    out += std::to_string(i + 1) + ',';
    out += csv_row({r.greedy.spread[i], r.greedy.nll[i], r.greedy.band_width[i],
                    r.worst.spread[i], r.worst.nll[i], r.worst.band_width[i],
                    s.mean, s.min, s.p05, s.p95, s.max, n.mean, n.min, n.p05,
                    n.p95, n.max});
  }
  return out;
}

std::string prediction_csv(const Json& prediction) {
  const auto times = get_field<std::vector<double>>(prediction, "times");
  const auto mean = get_field<std::vector<double>>(prediction, "mean");
  const auto sd = get_field<std::vector<double>>(prediction, "std");
  std::string out = "t,mean,std\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out += csv_row({times[k], mean[k], sd[k]});
  }
  return out;
}

std::string alpha_spectrum_csv(const PriorArtifact& prior) {
  std::string out = "m,frequency,alpha\n";
  if (prior.fit) {
    const auto alpha = prior.fit->hyper.alpha();
    for (std::size_t m = 0; m < alpha.size(); ++m) {
      out += std::to_string(m) + ',' +
             csv_row({static_cast<double>(m) * prior.grid_spacing, alpha[m]});
    }
  } else {
    for (std::size_t i = 0; i < prior.alpha.size(); ++i) {
      out += std::to_string(prior.kept_frequency_indices[i]) + ',' +
             csv_row({prior.kept_frequencies[i], prior.alpha[i]});
    }
  }
  return out;
}

}  // namespace sparselabel::io
