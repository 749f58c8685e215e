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

#ifndef SPARSELABEL_EVALUATION_HPP_
#define SPARSELABEL_EVALUATION_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sparselabel/core_model.hpp"
#include "sparselabel/label_planner.hpp"
#include "sparselabel/sbl_em.hpp"

namespace sparselabel {

struct SyntheticComponent {
  double frequency = 0.0;       // Hz, need not lie on a grid
  double amplitude = 0.0;
  std::vector<double> phases;   // radians, one per slice
};

struct SyntheticSpec {
  std::vector<SyntheticComponent> components;
  std::vector<double> dc_offsets;  // one per slice
  double noise_sigma = 0.0;
  std::size_t sample_count = 300;
  double frame_rate = 30.0;
  std::size_t slice_count = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// y[k, l] = dc[l] + sum_c a_c cos(2 pi f_c t_k + phi_{c,l}) + noise.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Two tones at 0.3 Hz (amplitude 0.5) and 1.2 Hz (amplitude 1.0) over a DC
// level of 3, noise at 5% of the larger amplitude, 300 frames at 30 fps.
// Phases are drawn uniformly from the seed.
SyntheticSpec two_tone_spec(std::uint64_t seed, std::size_t slice_count = 5);

enum class NllScope { kAllPoints, kUnlabeledOnly };

std::string_view to_string(NllScope scope);
NllScope parse_nll_scope(std::string_view name);

// Real Gaussian negative log-likelihood
//   0.5 [(y - mu)^T C^{-1} (y - mu) + log det C + n log 2 pi]
// of the marginal over every index not in `excluded`. Throws NumericalError
// when the covariance is not positive definite.
double nll(const PredictiveDistribution& pred, const Vector& y_true,
           const std::optional<LabelSet>& excluded = std::nullopt);

// Same value for the predictive distribution of `rp` under `model`, computed
// in amplitude space through the Woodbury identity.
double nll_low_rank(const PlannerModel& model, const RestrictedPosterior& rp,
                    const Vector& y_true,
                    const std::optional<LabelSet>& excluded = std::nullopt);

// Conditions on y_true at `labels` and scores all of y_true.
double labeled_nll(const PlannerModel& model, const LabelSet& labels,
                   const Vector& y_true, NllScope scope);

// Nearest-rank quantile of an ascending-sorted sample, q in (0, 1].
double nearest_rank(const std::vector<double>& sorted, double q);

struct BandSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p01 = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

BandSummary summarize(std::vector<double> values);

struct BaselineResult {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<LabelSet> subsets;
  std::vector<double> spreads;
  std::vector<double> nlls;  // empty without y_true
  BandSummary spread_summary;
  std::optional<BandSummary> nll_summary;
};

// Uniform size-k subsets without replacement (partial Fisher-Yates on a
// mt19937_64 stream seeded with `seed`).
BaselineResult random_baseline(const PlannerModel& model, std::size_t k,
                               std::size_t draws, std::uint64_t seed,
                               SpreadMeasure measure = SpreadMeasure::kTrace,
                               const Vector* y_true = nullptr,
                               NllScope scope = NllScope::kAllPoints);

struct JackknifeConfig {
  double prune_ratio = 0.01;
  std::size_t k_max = 15;
  std::size_t baseline_draws = 1000;
  std::uint64_t seed = 0;
  SpreadMeasure measure = SpreadMeasure::kTrace;
  NllScope scope = NllScope::kAllPoints;

  void validate(std::size_t sample_count) const;
};

// Per-k curves for one plan; entry k - 1 holds the value after k labels.
struct PlanCurve {
  std::vector<std::size_t> indices;
  std::vector<double> spread;
  std::vector<double> nll;
  std::vector<double> band_width;  // mean over time of 2 predictive std
};

struct EvalReport {
  std::size_t left_out_index = 0;
  std::string left_out_slice;
  std::vector<std::size_t> kept_frequencies;
  std::vector<double> alpha;  // of the pruned model, DC first
  double sigma2 = 0.0;
  std::size_t em_iterations = 0;
  StopReason stop_reason = StopReason::kMaxIterations;
  SpreadMeasure measure = SpreadMeasure::kTrace;
  NllScope scope = NllScope::kAllPoints;
  std::uint64_t seed = 0;
  PlanCurve greedy;
  PlanCurve worst;
  std::vector<std::uint64_t> baseline_seeds;
  std::vector<BandSummary> baseline_spread;
  std::vector<BandSummary> baseline_nll;
};

// Seed used for the random draws of fold `fold` at plan length `k`.
std::uint64_t baseline_seed(std::uint64_t seed, std::size_t fold,
                            std::size_t k);

// Leave-one-slice-out study: fit and prune on the other slices, plan on the
// pruned model, score the left-out slice for k = 1 .. k_max against random
// draws. Errors from a fold are rethrown naming the slice.
std::vector<EvalReport> jackknife(const Dataset& y, const TransferMatrix& a,
                                  const EmConfig& em,
                                  const JackknifeConfig& cfg);

// One fold of the above.
EvalReport evaluate_fold(const Dataset& y, const TransferMatrix& a,
                         const EmConfig& em, const JackknifeConfig& cfg,
                         std::size_t fold);

}  // namespace sparselabel

#endif  // SPARSELABEL_EVALUATION_HPP_
