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

#include "sparselabel/session.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <utility>

#include "sparselabel/error.hpp"

namespace sparselabel {
namespace {

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<TimeGrid> requested_grid(const io::Json& request) {
  const bool has_n = request.contains("n") && !request.at("n").is_null();
  const bool has_fps =
      request.contains("frame_rate") && !request.at("frame_rate").is_null();
  if (!has_n && !has_fps) return std::nullopt;
  if (has_n != has_fps) {
    throw ValidationError("'n' and 'frame_rate' must be given together");
  }
  const io::Json& n = request.at("n");
  if (!n.is_number_integer() || n.get<std::int64_t>() < 1 ||
      !request.at("frame_rate").is_number()) {
    throw ValidationError("'n' must be a positive integer and 'frame_rate' a number");
  }
  return build_time_grid(request.at("n").get<std::size_t>(),
                         request.at("frame_rate").get<double>());
}

io::Json labels_json(const std::vector<io::Label>& labels) {
  io::Json arr = io::Json::array();
  for (const io::Label& l : labels) {
    arr.push_back({{"index", l.index}, {"value", l.value}});
  }
  return arr;
}

}  // namespace

PosteriorSummary batch_summary(const PlannerModel& model,
                               const std::vector<io::Label>& labels) {
  LabelSet set;
  std::vector<double> values;
  for (const io::Label& l : labels) {
    set.insert(l.index);
    values.push_back(l.value);
  }
  const RestrictedPosterior rp =
      restricted_posterior(model, set, std::span<const double>(values));
  const Vector mean = model.transfer() * rp.mean;
  const Vector sd = predictive_variance(model, rp.covariance).cwiseSqrt();
  PosteriorSummary out;
  out.mean.assign(mean.begin(), mean.end());
  out.std_dev.assign(sd.begin(), sd.end());
  out.spread = spread_from_amplitude_covariance(model, rp.covariance,
                                                SpreadMeasure::kTrace);
  out.label_count = labels.size();
  return out;
}

Session::Session(std::string id, const io::PriorArtifact& prior,
                 std::optional<TimeGrid> time_grid)
    : id_(std::move(id)),
      model_(io::planner_model(prior, time_grid)),
      created_at_(utc_now()) {
  if (time_grid) {
    times_.assign(time_grid->times().begin(), time_grid->times().end());
  } else {
    times_ = prior.times;
  }
  // Plans do not depend on measured values, so the whole order is known now.
  plan_ = greedy_plan(model_, model_.sample_count(), SpreadMeasure::kTrace);
  updated_at_ = created_at_;
  recompute();
}

void Session::recompute() { summary_ = batch_summary(model_, labels_); }

Suggestion Session::next_suggestion() const {
  std::shared_lock lock(mutex_);
  const std::size_t k = labels_.size();
  if (k >= model_.sample_count()) {
    throw ConflictError("every time point is labeled");
  }
  bool on_plan = true;
  LabelSet set;
  for (const io::Label& l : labels_) set.insert(l.index);
  for (std::size_t i = 0; i < k && on_plan; ++i) {
    on_plan = set.contains(plan_.indices[i]);
  }
  if (on_plan) {
    return Suggestion{plan_.indices[k], plan_.gains[k], summary_.spread, true};
  }
  const GreedyStep step =
      greedy_step(model_, set, SpreadMeasure::kTrace, Direction::kMinimize);
  return Suggestion{step.index, step.gain, summary_.spread, false};
}

PosteriorSummary Session::submit(std::size_t index, double value,
                                 const CommitHook& on_commit) {
  std::unique_lock lock(mutex_);
  if (index >= model_.sample_count()) {
    throw ValidationError("index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(model_.sample_count()) + ")");
  }
  if (!std::isfinite(value)) throw ValidationError("label value must be finite");
  for (const io::Label& l : labels_) {
    if (l.index == index) {
      throw ConflictError("index " + std::to_string(index) + " is already labeled");
    }
  }
  labels_.push_back(io::Label{index, value});
  try {
    recompute();
  } catch (...) {
    labels_.pop_back();
    throw;
  }
  updated_at_ = utc_now();
  if (on_commit) on_commit();
  return summary_;
}

PosteriorSummary Session::undo(const CommitHook& on_commit) {
  std::unique_lock lock(mutex_);
  if (labels_.empty()) throw ConflictError("no label to undo");
  labels_.pop_back();
  recompute();
  updated_at_ = utc_now();
  if (on_commit) on_commit();
  return summary_;
}

PosteriorSummary Session::summary() const {
  std::shared_lock lock(mutex_);
  return summary_;
}

std::vector<io::Label> Session::labels() const {
  std::shared_lock lock(mutex_);
  return labels_;
}

CurveData Session::curve() const {
  std::shared_lock lock(mutex_);
  CurveData c;
  c.times = times_;
  c.mean = summary_.mean;
  c.std_band = summary_.std_dev;
  c.labeled_points = labels_;
  return c;
}

io::Json Session::state_json() const {
  std::shared_lock lock(mutex_);
  return io::Json{{"id", id_},
                  {"sample_count", model_.sample_count()},
                  {"label_count", labels_.size()},
                  {"labels", labels_json(labels_)},
                  {"spread", summary_.spread},
                  {"plan", {{"indices", plan_.indices}, {"gains", plan_.gains}}},
                  {"created_at", created_at_},
                  {"updated_at", updated_at_}};
}

SessionManager::SessionManager(std::optional<std::filesystem::path> journal)
    : journal_path_(std::move(journal)) {
  if (!journal_path_) return;
  if (std::filesystem::exists(*journal_path_)) replay(*journal_path_);
  if (journal_path_->has_parent_path()) {
    std::filesystem::create_directories(journal_path_->parent_path());
  }
  journal_.open(*journal_path_, std::ios::binary | std::ios::app);
  if (!journal_) {
    throw Error("io_error", "cannot open journal '" + journal_path_->string() + "'");
  }
}

void SessionManager::replay(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    io::Json entry;
    try {
      entry = io::parse_json(line);
      const std::string op = entry.at("op").get<std::string>();
      const std::string id = entry.at("id").get<std::string>();
      if (op == "create") {
        create_with_id(id, entry.at("request"));
        if (id.size() > 1 && id[0] == 's') {
          next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
        }
      } else if (op == "label") {
        find(id)->submit(entry.at("index").get<std::size_t>(),
                         entry.at("value").get<double>());
      } else if (op == "undo") {
        find(id)->undo();
      } else {
        throw ParseError("unknown journal operation '" + op + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad journal entry: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(std::string("journal replay failed: ") + e.what(), line_no);
    }
  }
}

void SessionManager::append(const io::Json& entry) {
  if (!journal_path_) return;
  std::lock_guard lock(journal_mutex_);
  journal_ << entry.dump() << '\n';
  journal_.flush();
}

std::shared_ptr<Session> SessionManager::create_with_id(const std::string& id,
                                                        const io::Json& request) {
  if (!request.is_object() || !request.contains("prior")) {
    throw ValidationError("request needs a 'prior' artifact");
  }
  const io::PriorArtifact prior = io::prior_from_json(request.at("prior"));
  auto session = std::make_shared<Session>(id, prior, requested_grid(request));
  std::unique_lock lock(mutex_);
  sessions_[id] = session;
  return session;
}

std::shared_ptr<Session> SessionManager::create(const io::Json& request) {
  std::string id;
  {
    std::unique_lock lock(mutex_);
    id = "s" + std::to_string(next_id_++);
  }
  auto session = create_with_id(id, request);
  append(io::Json{{"op", "create"}, {"id", id}, {"request", request}});
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

PosteriorSummary SessionManager::submit(const std::string& id, std::size_t index,
                                        double value) {
  return find(id)->submit(index, value, [&] {
    append(io::Json{{"op", "label"}, {"id", id}, {"index", index}, {"value", value}});
  });
}

PosteriorSummary SessionManager::undo(const std::string& id) {
  return find(id)->undo([&] { append(io::Json{{"op", "undo"}, {"id", id}}); });
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

io::Json summary_to_json(const PosteriorSummary& s) {
  return io::Json{{"mean", s.mean},
                  {"std", s.std_dev},
                  {"spread", s.spread},
                  {"label_count", s.label_count}};
}

io::Json suggestion_to_json(const Suggestion& s) {
  return io::Json{{"index", s.index},
                  {"expected_gain", s.expected_gain},
                  {"current_spread", s.current_spread},
                  {"source", s.from_plan ? "plan" : "live"}};
}

io::Json curve_to_json(const CurveData& c) {
  io::Json points = io::Json::array();
  for (const io::Label& l : c.labeled_points) {
    points.push_back({{"index", l.index}, {"time", c.times[l.index]}, {"value", l.value}});
  }
  return io::Json{{"times", c.times},
                  {"mean", c.mean},
                  {"std_band", c.std_band},
                  {"labeled_points", std::move(points)}};
}

}  // namespace sparselabel
