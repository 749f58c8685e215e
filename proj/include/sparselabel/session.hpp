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

// Interactive labeling sessions: suggest the next frame, accept a label,
// report the updated posterior. The HTTP binding lives in session_http.hpp.

#ifndef SPARSELABEL_SESSION_HPP_
#define SPARSELABEL_SESSION_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sparselabel/io.hpp"
#include "sparselabel/label_planner.hpp"

namespace sparselabel {

struct PosteriorSummary {
  std::vector<double> mean;     // predictive mean, length N
  std::vector<double> std_dev;  // predictive std, length N
  double spread = 0.0;          // trace of the predictive covariance
  std::size_t label_count = 0;

  bool operator==(const PosteriorSummary&) const = default;
};

struct Suggestion {
  std::size_t index = 0;
  double expected_gain = 0.0;
  double current_spread = 0.0;
  bool from_plan = true;  // false once labels left the precomputed order
};

struct CurveData {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std_band;
  std::vector<io::Label> labeled_points;
};

// One labeling session. Every mutation recomputes the posterior from the
// prior and the full label list, so state never drifts.
class Session {
 public:
  // `time_grid` replaces the prior's own grid when given.
  Session(std::string id, const io::PriorArtifact& prior,
          std::optional<TimeGrid> time_grid = std::nullopt);

  const std::string& id() const { return id_; }
  const PlannerModel& model() const { return model_; }
  const LabelPlan& plan() const { return plan_; }
  const std::vector<double>& times() const { return times_; }

  // Called under the session lock after a mutation succeeded.
  using CommitHook = std::function<void()>;

  // All of these take the session's lock.
  Suggestion next_suggestion() const;  // ConflictError when done
  PosteriorSummary submit(std::size_t index, double value,
                          const CommitHook& on_commit = {});
  PosteriorSummary undo(const CommitHook& on_commit = {});  // ConflictError when empty
  PosteriorSummary summary() const;
  CurveData curve() const;
  std::vector<io::Label> labels() const;
  io::Json state_json() const;

 private:
  void recompute();

  std::string id_;
  std::vector<double> times_;
  PlannerModel model_;
  LabelPlan plan_;
  std::vector<io::Label> labels_;
  PosteriorSummary summary_;
  std::string created_at_;
  std::string updated_at_;
  mutable std::shared_mutex mutex_;
};

// Batch reference: the summary a session reaches after the given labels.
PosteriorSummary batch_summary(const PlannerModel& model,
                               const std::vector<io::Label>& labels);

// Owns the sessions; safe to call from many threads. Mutations to one
// session are serialized, different sessions proceed in parallel. With a
// journal path every mutation is appended as one JSON line and replayed on
// construction.
class SessionManager {
 public:
  explicit SessionManager(std::optional<std::filesystem::path> journal = std::nullopt);

  // Request: {"prior": <prior artifact>, optional "n" and "frame_rate"}.
  std::shared_ptr<Session> create(const io::Json& request);
  std::shared_ptr<Session> find(const std::string& id) const;  // NotFoundError

  PosteriorSummary submit(const std::string& id, std::size_t index, double value);
  PosteriorSummary undo(const std::string& id);

  std::size_t size() const;

 private:
  std::shared_ptr<Session> create_with_id(const std::string& id,
                                          const io::Json& request);
  void append(const io::Json& entry);
  void replay(const std::filesystem::path& path);

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  std::optional<std::filesystem::path> journal_path_;
  std::mutex journal_mutex_;
  std::ofstream journal_;
};

io::Json summary_to_json(const PosteriorSummary& s);
io::Json suggestion_to_json(const Suggestion& s);
io::Json curve_to_json(const CurveData& c);

}  // namespace sparselabel

#endif  // SPARSELABEL_SESSION_HPP_
