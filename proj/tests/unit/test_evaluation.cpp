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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "sparselabel/core_model.hpp"
#include "sparselabel/error.hpp"
#include "sparselabel/evaluation.hpp"
#include "sparselabel/label_planner.hpp"
#include "test_support.hpp"

namespace sl = sparselabel;
using sl::testing::rel_diff;

namespace {

sl::TransferMatrix video_transfer() {
  return sl::build_transfer_matrix(sl::build_time_grid(300, 30.0),
                                   sl::build_frequency_grid(100, 0.075));
}

sl::Vector random_vector(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  sl::Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = z(rng);
  return v;
}

}  // namespace

TEST_CASE("synthetic generator examples") {
  SUBCASE("single noiseless cosine") {
    sl::SyntheticSpec spec;
    spec.components = {{0.45, 1.0, {0.0}}};
    spec.dc_offsets = {0.0};
    const sl::Dataset y = sl::generate_synthetic(spec);
    REQUIRE(y.values().rows() == 300);
    for (std::size_t k = 0; k < 300; ++k) {
      const double t = static_cast<double>(k) / 30.0;
      CHECK(y.values()(static_cast<Eigen::Index>(k), 0) ==
            doctest::Approx(std::cos(2.0 * std::numbers::pi * 0.45 * t)).epsilon(1e-14));
    }
  }
  SUBCASE("constant level") {
    sl::SyntheticSpec spec;
    spec.dc_offsets = {5.0, 5.0};
    spec.slice_count = 2;
    const sl::Dataset y = sl::generate_synthetic(spec);
    CHECK((y.values().array() == 5.0).all());
  }
  SUBCASE("noise level") {
    sl::SyntheticSpec spec;
    spec.dc_offsets = {0.0};
    spec.noise_sigma = 0.3;
    spec.seed = 19;
    const sl::Vector v = sl::generate_synthetic(spec).values().col(0);
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
    CHECK(std::abs(var - 0.09) <= 0.1 * 0.09);
  }
  SUBCASE("seeded and deterministic") {
    const auto a = sl::generate_synthetic(sl::two_tone_spec(4));
    const auto b = sl::generate_synthetic(sl::two_tone_spec(4));
    const auto c = sl::generate_synthetic(sl::two_tone_spec(5));
    CHECK(a.values() == b.values());
    CHECK(a.values() != c.values());
    CHECK(a.slice_count() == 5);
  }
  SUBCASE("validation") {
    sl::SyntheticSpec spec;
    spec.dc_offsets = {0.0};
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(spec.validate(), sl::ValidationError);
    spec.noise_sigma = 0.0;
    spec.slice_count = 2;
    CHECK_THROWS_AS(spec.validate(), sl::ValidationError);
    spec.dc_offsets = {0.0, 0.0};
    spec.components = {{0.3, 1.0, {0.0}}};
    CHECK_THROWS_AS(spec.validate(), sl::ValidationError);
  }
}

TEST_CASE("negative log-likelihood examples") {
  sl::PredictiveDistribution unit;
  unit.mean = sl::Vector::Constant(1, 0.7);
  unit.covariance = sl::Matrix::Constant(1, 1, 1.0 / (2.0 * std::numbers::pi));
  CHECK(std::abs(sl::nll(unit, unit.mean)) < 1e-14);

  sl::PredictiveDistribution scalar;
  scalar.mean = sl::Vector::Zero(1);
  scalar.covariance = sl::Matrix::Ones(1, 1);
  CHECK(sl::nll(scalar, scalar.mean) ==
        doctest::Approx(0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

  sl::PredictiveDistribution bad = scalar;
  bad.covariance(0, 0) = -1.0;
  CHECK_THROWS_AS(sl::nll(bad, bad.mean), sl::NumericalError);
}

TEST_CASE("marginal likelihood matches the dense formula") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    CAPTURE(trial);
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 14);
    const auto m = sl::testing::random_planner_model(200 + trial, n, 1 + trial % 3);
    const sl::LabelSet j = sl::testing::random_subset(rng, n, 0.4);
    const sl::Vector y = random_vector(900 + trial, n);
    std::vector<double> yj;
    for (std::size_t i : j.indices()) yj.push_back(y(static_cast<Eigen::Index>(i)));
    const auto rp = sl::restricted_posterior(m, j, yj);
    const auto pred = sl::predictive(m, rp);

    const double full = sl::testing::oracle_nll(pred.mean, pred.covariance, y);
    CHECK(rel_diff(sl::nll(pred, y), full) < 1e-8);
    CHECK(rel_diff(sl::nll_low_rank(m, rp, y), full) < 1e-8);
    CHECK(rel_diff(sl::labeled_nll(m, j, y, sl::NllScope::kAllPoints), full) < 1e-8);

    // Marginal over the unlabeled indices.
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < n; ++i) {
      if (!j.contains(i)) keep.push_back(static_cast<Eigen::Index>(i));
    }
    if (keep.empty()) continue;
    const sl::Vector mu = pred.mean(keep);
    const sl::Matrix c = pred.covariance(keep, keep);
    const sl::Vector yk = y(keep);
    const double part = sl::testing::oracle_nll(mu, c, yk);
    CHECK(rel_diff(sl::nll(pred, y, j), part) < 1e-8);
    CHECK(rel_diff(sl::nll_low_rank(m, rp, y, j), part) < 1e-8);
    CHECK(rel_diff(sl::labeled_nll(m, j, y, sl::NllScope::kUnlabeledOnly), part) < 1e-8);
  }
}

TEST_CASE("scope names") {
  CHECK(sl::parse_nll_scope("all") == sl::NllScope::kAllPoints);
  CHECK(sl::parse_nll_scope(sl::to_string(sl::NllScope::kUnlabeledOnly)) ==
        sl::NllScope::kUnlabeledOnly);
  CHECK_THROWS_AS(sl::parse_nll_scope("some"), sl::ValidationError);
}

TEST_CASE("nearest-rank quantiles and summaries") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(sl::nearest_rank(v, 0.05) == 5.0);
  CHECK(sl::nearest_rank(v, 0.95) == 95.0);
  CHECK(sl::nearest_rank(v, 0.01) == 1.0);
  CHECK(sl::nearest_rank(v, 1.0) == 100.0);
  CHECK(sl::nearest_rank({3.0, 7.0}, 0.5) == 3.0);
  CHECK_THROWS_AS(sl::nearest_rank(v, 0.0), sl::ValidationError);

  std::vector<double> shuffled = v;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  const auto s = sl::summarize(shuffled);
  CHECK(s.mean == 50.5);
  CHECK(s.min == 1.0);
  CHECK(s.max == 100.0);
  CHECK(s.p50 == 50.0);
  CHECK(s.min <= s.p05);
  CHECK(s.p05 <= s.mean);
  CHECK(s.mean <= s.p95);
}

TEST_CASE("random baseline examples") {
  const auto m = sl::testing::random_planner_model(9, 20, 2);
  SUBCASE("reproducible draws") {
    const auto a = sl::random_baseline(m, 4, 1, 77);
    const auto b = sl::random_baseline(m, 4, 1, 77);
    REQUIRE(a.subsets.size() == 1);
    CHECK(a.subsets[0] == b.subsets[0]);
    CHECK(a.spreads == b.spreads);
    const auto c = sl::random_baseline(m, 4, 200, 78);
    const auto d = sl::random_baseline(m, 4, 200, 78);
    CHECK(c.spreads == d.spreads);
    for (const auto& s : c.subsets) {
      CHECK(s.size() == 4);
      CHECK(std::is_sorted(s.indices().begin(), s.indices().end()));
    }
  }
  SUBCASE("every index drawn gives zero width") {
    const sl::Vector y = random_vector(1, 20);
    const auto r = sl::random_baseline(m, 20, 30, 5, sl::SpreadMeasure::kTrace, &y);
    CHECK(r.spread_summary.min == r.spread_summary.max);
    REQUIRE(r.nll_summary.has_value());
    CHECK(r.nll_summary->min == r.nll_summary->max);
  }
  SUBCASE("constant model draws are exchangeable") {
    const auto dc = sl::testing::dc_only_model(15, 1.0, 0.3);
    const auto r = sl::random_baseline(dc, 5, 100, 8, sl::SpreadMeasure::kDetRoot);
    CHECK(rel_diff(r.spread_summary.min, r.spread_summary.max) < 1e-12);
  }
  SUBCASE("draws are uniform over indices") {
    const auto r = sl::random_baseline(m, 3, 6000, 11);
    std::vector<int> hits(20, 0);
    for (const auto& s : r.subsets) {
      for (std::size_t i : s.indices()) ++hits[i];
    }
    // Expected 900 hits per index; 5 sigma is about 140.
    for (int h : hits) CHECK(std::abs(h - 900) < 150);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(sl::random_baseline(m, 21, 1, 1), sl::ValidationError);
    CHECK_THROWS_AS(sl::random_baseline(m, 2, 0, 1), sl::ValidationError);
  }
}

TEST_CASE("baseline seeds differ per fold and length") {
  CHECK(sl::baseline_seed(1, 0, 1) == sl::baseline_seed(1, 0, 1));
  CHECK(sl::baseline_seed(1, 0, 1) != sl::baseline_seed(1, 0, 2));
  CHECK(sl::baseline_seed(1, 0, 1) != sl::baseline_seed(1, 1, 1));
  CHECK(sl::baseline_seed(1, 0, 1) != sl::baseline_seed(2, 0, 1));
}

TEST_CASE("two-slice jackknife structure") {
  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(6, 2));
  sl::JackknifeConfig cfg;
  cfg.k_max = 6;
  cfg.baseline_draws = 50;
  cfg.seed = 3;
  const auto reports = sl::jackknife(y, video_transfer(), sl::EmConfig{}, cfg);
  REQUIRE(reports.size() == 2);
  for (std::size_t f = 0; f < 2; ++f) {
    const auto& r = reports[f];
    CHECK(r.left_out_index == f);
    CHECK(r.left_out_slice == y.slice_ids()[f]);
    CHECK(r.greedy.indices.size() == 6);
    CHECK(r.greedy.nll.size() == 6);
    CHECK(r.worst.spread.size() == 6);
    CHECK(r.baseline_spread.size() == 6);
    CHECK(r.baseline_nll.size() == 6);
    CHECK(r.baseline_seeds.size() == 6);
    CHECK(r.alpha.size() == r.kept_frequencies.size());
    for (const auto& b : r.baseline_spread) {
      CHECK(b.min <= b.mean);
      CHECK(b.mean <= b.max);
    }
    for (std::size_t k = 0; k < 6; ++k) {
      CHECK(r.greedy.spread[k] <= r.worst.spread[k] * (1.0 + 1e-12));
    }
  }
  sl::JackknifeConfig bad = cfg;
  bad.k_max = 301;
  CHECK_THROWS_AS(sl::jackknife(y, video_transfer(), sl::EmConfig{}, bad), sl::ValidationError);
  CHECK_THROWS_AS(sl::jackknife(sl::generate_synthetic(sl::two_tone_spec(6, 1)),
                                video_transfer(), sl::EmConfig{}, cfg),
                  sl::ValidationError);
}

TEST_CASE("every fold recovers the planted support") {
  const sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(1));
  sl::JackknifeConfig cfg;
  cfg.k_max = 4;
  cfg.baseline_draws = 20;
  const auto reports = sl::jackknife(y, video_transfer(), sl::EmConfig{}, cfg);
  REQUIRE(reports.size() == 5);
  for (const auto& r : reports) {
    CHECK(r.kept_frequencies == std::vector<std::size_t>{0, 4, 16});
  }
  // Same inputs, same report.
  const auto again = sl::jackknife(y, video_transfer(), sl::EmConfig{}, cfg);
  CHECK(again[2].greedy.nll == reports[2].greedy.nll);
  CHECK(again[2].baseline_nll[1].p05 == reports[2].baseline_nll[1].p05);
}

TEST_CASE("fold errors name the slice") {
  sl::Dataset y = sl::generate_synthetic(sl::two_tone_spec(1, 3));
  sl::EmConfig em;
  em.k_order = 200;  // too large for N = 300
  sl::JackknifeConfig cfg;
  cfg.k_max = 2;
  cfg.baseline_draws = 5;
  try {
    sl::jackknife(y, video_transfer(), em, cfg);
    FAIL("expected an error");
  } catch (const sl::ValidationError& e) {
    CHECK(std::string(e.what()).find(y.slice_ids()[0]) != std::string::npos);
  }
}
