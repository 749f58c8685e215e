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

#include <cmath>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "sparselabel/error.hpp"
#include "sparselabel/evaluation.hpp"
#include "sparselabel/io.hpp"
#include "sparselabel/label_planner.hpp"
#include "sparselabel/session.hpp"
#include "test_support.hpp"

namespace sl = sparselabel;
namespace io = sparselabel::io;
namespace fs = std::filesystem;

namespace {

io::PriorArtifact toy_prior() {
  const fs::path path = fs::path(SPARSELABEL_SOURCE_DIR) / "data" / "toy_prior_n12.json";
  return io::prior_from_json(io::parse_json(io::read_file(path)));
}

const io::PriorArtifact& two_tone_prior() {
  static const io::PriorArtifact prior = io::make_prior_artifact(
      sl::generate_synthetic(sl::two_tone_spec(1)), 100, 0.075, sl::EmConfig{}, 0.01,
      "two_tone");
  return prior;
}

io::Json toy_request() {
  return io::Json{{"prior", io::prior_to_json(toy_prior())}};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("fresh session") {
  sl::Session s("a", toy_prior());
  CHECK(s.plan().indices.size() == 12);
  const auto sum = s.summary();
  CHECK(sum.label_count == 0);
  CHECK(sum.mean.size() == 12);
  CHECK(sum.spread == doctest::Approx(s.plan().initial_spread).epsilon(1e-12));
  const auto sug = s.next_suggestion();
  CHECK(sug.index == s.plan().indices[0]);
  CHECK(sug.expected_gain == s.plan().gains[0]);
  CHECK(sug.from_plan);
  const io::Json state = s.state_json();
  CHECK(state.at("label_count") == 0);
  CHECK(state.at("id") == "a");

  // No labels: band is the prior predictive std.
  const auto curve = s.curve();
  const sl::Matrix prior_cov = sl::testing::oracle_data_cov(
      s.model().transfer(), s.model().gamma(), s.model().sigma2());
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(curve.std_band[i] ==
          doctest::Approx(std::sqrt(prior_cov(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(i))))
              .epsilon(1e-10));
  }
}

TEST_CASE("two sessions from one prior share their plan") {
  sl::Session a("a", toy_prior());
  sl::Session b("b", toy_prior());
  CHECK(a.plan().indices == b.plan().indices);
  CHECK(a.plan().gains == b.plan().gains);
}

TEST_CASE("following the plan") {
  sl::Session s("a", toy_prior());
  double last = s.summary().spread;
  for (std::size_t k = 0; k < 12; ++k) {
    const auto sug = s.next_suggestion();
    CHECK(sug.index == s.plan().indices[k]);
    CHECK(sug.from_plan);
    // Values never move the suggestions.
    const auto sum = s.submit(sug.index, std::sin(static_cast<double>(k)) * 10.0);
    CHECK(sum.spread < last);
    last = sum.spread;
  }
  CHECK_THROWS_AS(s.next_suggestion(), sl::ConflictError);
  // All labeled: the band sits above the noise floor.
  for (double v : s.curve().std_band) CHECK(v >= std::sqrt(s.model().sigma2()) * (1 - 1e-12));
}

TEST_CASE("an out-of-plan label switches to live steps") {
  sl::Session s("a", toy_prior());
  std::size_t manual = 0;
  while (manual == s.plan().indices[0]) ++manual;
  s.submit(manual, 0.4);
  const auto sug = s.next_suggestion();
  CHECK_FALSE(sug.from_plan);
  const auto step = sl::greedy_step(s.model(), sl::LabelSet({manual}),
                                    sl::SpreadMeasure::kTrace, sl::Direction::kMinimize);
  CHECK(sug.index == step.index);
  CHECK(sug.expected_gain == doctest::Approx(step.gain).epsilon(1e-10));

  // Labels that form a plan prefix in another order still use the plan.
  sl::Session t("b", toy_prior());
  t.submit(t.plan().indices[1], 1.0);
  t.submit(t.plan().indices[0], 2.0);
  CHECK(t.next_suggestion().from_plan);
  CHECK(t.next_suggestion().index == t.plan().indices[2]);
}

TEST_CASE("submissions are validated") {
  sl::Session s("a", toy_prior());
  s.submit(3, 1.0);
  CHECK_THROWS_AS(s.submit(3, 2.0), sl::ConflictError);
  CHECK_THROWS_AS(s.submit(12, 2.0), sl::ValidationError);
  CHECK_THROWS_AS(s.submit(4, std::nan("")), sl::ValidationError);
  CHECK_THROWS_AS(s.submit(4, INFINITY), sl::ValidationError);
  CHECK(s.summary().label_count == 1);
  s.undo();
  CHECK_THROWS_AS(s.undo(), sl::ConflictError);
}

TEST_CASE("incremental equals batch and undo restores state") {
  sl::Session s("a", toy_prior());
  const auto fresh = s.summary();
  const std::vector<io::Label> seq{{5, 1.2}, {0, -0.3}, {11, 2.5}, {7, 0.0}};
  std::vector<sl::PosteriorSummary> steps;
  for (const auto& l : seq) steps.push_back(s.submit(l.index, l.value));
  const auto batch = sl::batch_summary(s.model(), seq);
  CHECK(max_abs_diff(steps.back().mean, batch.mean) < 1e-10);
  CHECK(max_abs_diff(steps.back().std_dev, batch.std_dev) < 1e-10);

  // Cross-check the band with the dense predictive.
  std::vector<double> vals;
  for (const auto& l : seq) vals.push_back(l.value);
  const auto rp = sl::restricted_posterior(s.model(), sl::LabelSet({5, 0, 11, 7}), vals);
  const auto pred = sl::predictive(s.model(), rp);
  const auto curve = s.curve();
  for (std::size_t i = 0; i < 12; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    CHECK(std::abs(curve.std_band[i] - std::sqrt(pred.covariance(e, e))) < 1e-10);
    CHECK(std::abs(curve.mean[i] - pred.mean(e)) < 1e-10);
  }
  CHECK(curve.labeled_points.size() == 4);

  CHECK(s.undo() == steps[2]);
  CHECK(s.undo() == steps[1]);
  CHECK(s.undo() == steps[0]);
  CHECK(s.undo() == fresh);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    CHECK(s.submit(seq[k].index, seq[k].value) == steps[k]);
  }
}

TEST_CASE("the mean passes near a submitted value") {
  const io::PriorArtifact& prior = two_tone_prior();
  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(99, 1));
  sl::Session s("a", prior);
  const double sigma = std::sqrt(s.model().sigma2());
  for (int k = 0; k < 8; ++k) {
    const std::size_t i = s.next_suggestion().index;
    const double v = y.values()(static_cast<Eigen::Index>(i), 0);
    const auto sum = s.submit(i, v);
    CHECK(std::abs(sum.mean[i] - v) <= 2.0 * sigma);
  }
}

TEST_CASE("manager ids, lookup and rejection of unpruned priors") {
  sl::SessionManager m;
  CHECK(m.create(toy_request())->id() == "s1");
  CHECK(m.create(toy_request())->id() == "s2");
  CHECK(m.size() == 2);
  CHECK_THROWS_AS(m.find("s9"), sl::NotFoundError);

  io::Json bad = toy_request();
  bad["prior"]["pruned"]["alpha"][1] = 0.0;
  CHECK_THROWS_AS(m.create(bad), sl::ValidationError);
  CHECK_THROWS_AS(m.create(io::Json{{"nope", 1}}), sl::ValidationError);
  io::Json neg = toy_request();
  neg["n"] = -3;
  neg["frame_rate"] = 4.0;
  CHECK_THROWS_AS(m.create(neg), sl::ValidationError);

  io::Json resized = toy_request();
  resized["n"] = 20;
  resized["frame_rate"] = 4.0;
  CHECK(m.create(resized)->times().size() == 20);
}

TEST_CASE("journal replays sessions") {
  const fs::path dir = fs::temp_directory_path() / "sparselabel_test_session";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path journal = dir / "journal.jsonl";
  sl::PosteriorSummary expect_s1, expect_s2;
  {
    sl::SessionManager m(journal);
    m.create(toy_request());
    m.create(toy_request());
    m.submit("s1", 2, 1.5);
    m.submit("s1", 9, -0.5);
    m.submit("s2", 4, 3.0);
    m.undo("s1");
    expect_s1 = m.find("s1")->summary();
    expect_s2 = m.find("s2")->summary();
  }
  sl::SessionManager again(journal);
  CHECK(again.size() == 2);
  CHECK(again.find("s1")->summary() == expect_s1);
  CHECK(again.find("s2")->summary() == expect_s2);
  CHECK(again.create(toy_request())->id() == "s3");
}

TEST_CASE("concurrent sessions stay consistent") {
  sl::SessionManager m;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(m.create(toy_request())->id());
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t k = 0; k < 12; ++k) {
        const auto sug = m.find(ids[w])->next_suggestion();
        m.submit(ids[w], sug.index, static_cast<double>(w) + 0.1 * static_cast<double>(k));
        (void)m.find(ids[(w + 1) % 4])->summary();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (int w = 0; w < 4; ++w) {
    const auto s = m.find(ids[w]);
    CHECK(s->summary().label_count == 12);
    CHECK(s->summary() == sl::batch_summary(s->model(), s->labels()));
  }
}

TEST_CASE("json payloads") {
  sl::Session s("a", toy_prior());
  s.submit(1, 0.5);
  const io::Json sum = sl::summary_to_json(s.summary());
  CHECK(sum.at("mean").size() == 12);
  CHECK(sum.at("label_count") == 1);
  const io::Json sug = sl::suggestion_to_json(s.next_suggestion());
  CHECK(sug.contains("expected_gain"));
  const io::Json curve = sl::curve_to_json(s.curve());
  CHECK(curve.at("labeled_points")[0].at("index") == 1);
  CHECK(curve.at("labeled_points")[0].at("time") == 0.25);
}
