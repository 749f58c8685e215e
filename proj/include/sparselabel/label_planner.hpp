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

// Planning which frames of an unobserved series to label.
//
// Given a pruned prior (A, gamma, sigma2), labeling the index set J gives the
// amplitude posterior covariance
//   Sigma_J = (A_J^T A_J / sigma2 + Gamma^{-1})^{-1}
// and the predictive covariance over all N frames
//   P_J = sigma2 I + A Sigma_J A^T.
// Neither depends on the measured values, so label orders can be planned
// before any labeling happens. The trace objective
//   f(J) = tr(P_empty) - tr(P_J)
// is monotone with strictly positive marginal gains
//   f_i(J) = ||A D^{-1} a_i||^2 / (sigma2 + a_i^T D^{-1} a_i),  D^{-1} = Sigma_J,
// and greedy maximization is within 1 - exp(-1 / c_f) of the optimum, c_f
// being the weak-submodularity constant.

#ifndef SPARSELABEL_LABEL_PLANNER_HPP_
#define SPARSELABEL_LABEL_PLANNER_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparselabel/core_model.hpp"
#include "sparselabel/sbl_em.hpp"

namespace sparselabel {

enum class SpreadMeasure { kTrace, kDetRoot, kMaxEigenvalue };
enum class Direction { kMinimize, kMaximize };

std::string_view to_string(SpreadMeasure measure);
std::string_view to_string(Direction direction);
SpreadMeasure parse_spread_measure(std::string_view name);
Direction parse_direction(std::string_view name);

class PlannerModel {
 public:
  // a: N x D with a column of ones first; gamma: D positive variances.
  PlannerModel(Matrix a, Vector gamma, double sigma2);

  static PlannerModel from_pruned(const PrunedModel& pruned);

  const Matrix& transfer() const { return a_; }
  const Vector& gamma() const { return gamma_; }
  double sigma2() const { return sigma2_; }
  std::size_t sample_count() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(a_.cols()); }

  // A^T A, its symmetric square root and A^T (columns are the rows of A).
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_sqrt() const { return gram_sqrt_; }
  const Matrix& transfer_t() const { return a_t_; }

 private:
  Matrix a_;
  Vector gamma_;
  double sigma2_;
  Matrix gram_;
  Matrix gram_sqrt_;
  Matrix a_t_;
};

struct RestrictedPosterior {
  Vector mean;        // D; zero when no values were supplied
  Matrix covariance;  // D x D
  LabelSet labels;
};

struct PredictiveDistribution {
  Vector mean;        // N
  Matrix covariance;  // N x N
};

// values, when given, holds one measurement per entry of `labels`, in order.
RestrictedPosterior restricted_posterior(
    const PlannerModel& model, const LabelSet& labels,
    std::optional<std::span<const double>> values = std::nullopt);

PredictiveDistribution predictive(const PlannerModel& model,
                                  const RestrictedPosterior& rp);

// Pointwise predictive variance diag(P_J) without forming the N x N matrix.
Vector predictive_variance(const PlannerModel& model,
                           const Matrix& amplitude_covariance);

// Spread of a symmetric positive definite covariance:
//   kTrace: sum of the diagonal
//   kDetRoot: N-th root of the determinant, as exp(mean log eigenvalue)
//   kMaxEigenvalue: largest eigenvalue
double spread(const Matrix& covariance, SpreadMeasure measure);

// Spread of P_J from the D x D amplitude covariance, using that the
// non-trivial spectrum of A S A^T equals that of G^{1/2} S G^{1/2}.
double spread_from_amplitude_covariance(const PlannerModel& model,
                                        const Matrix& amplitude_covariance,
                                        SpreadMeasure measure);

// Spread of P_J computed from scratch.
double labeled_spread(const PlannerModel& model, const LabelSet& labels,
                      SpreadMeasure measure);

// f(J) = tr(P_empty) - tr(P_J), from scratch.
double trace_objective(const PlannerModel& model, const LabelSet& labels);

// Incremental state for trace gains: keeps Sigma_J = D^{-1} and applies a
// Sherman-Morrison rank-one downdate per added label, refactoring from
// scratch every kRefactorInterval updates.
class TraceGainState {
 public:
  static constexpr std::size_t kRefactorInterval = 32;

  explicit TraceGainState(const PlannerModel& model);
  TraceGainState(const PlannerModel& model, const LabelSet& labels);

  void add(std::size_t index);

  // f_i(J) for every index i (entries for labeled indices are not
  // meaningful).
  void all_gains(std::span<double> out) const;

  double trace() const;  // tr(P_J)
  const Matrix& covariance() const { return cov_; }
  const LabelSet& labels() const { return labels_; }
  const PlannerModel& model() const { return *model_; }

 private:
  void refactor();

  const PlannerModel* model_;
  Matrix cov_;
  LabelSet labels_;
  std::size_t updates_since_refactor_ = 0;
};

// f_i(J) from the closed form. Requires index not in state.labels().
double marginal_gain_fast(const TraceGainState& state, std::size_t index);

struct LabelPlan {
  std::vector<std::size_t> indices;
  std::vector<double> spreads;  // spread after each step, in `measure`
  std::vector<double> gains;    // trace marginal gain f_i(J) of each pick
  double initial_spread = 0.0;  // spread with no labels
  SpreadMeasure measure = SpreadMeasure::kTrace;
  Direction direction = Direction::kMinimize;
};

struct GreedyStep {
  std::size_t index;
  double spread;  // after adding index
  double gain;    // trace marginal gain
};

// One greedy step from an arbitrary label set. Ties go to the smallest index.
GreedyStep greedy_step(const PlannerModel& model, const LabelSet& labels,
                       SpreadMeasure measure, Direction direction);

// k greedy steps from the empty set. kMinimize is the label order that
// tightens the predictive fastest; kMaximize is the "worst" order.
LabelPlan greedy_plan(const PlannerModel& model, std::size_t k,
                      SpreadMeasure measure,
                      Direction direction = Direction::kMinimize);

struct ExhaustiveResult {
  LabelSet labels;  // lexicographically first optimum
  double value;     // its spread
  std::uint64_t subsets_evaluated;
};

inline constexpr std::uint64_t kDefaultSubsetBudget = 2'000'000;

// Global minimum of the spread over all size-k subsets; values within the
// greedy tie tolerance count as equal, keeping the first. Throws
// BudgetExceeded when C(N, k) exceeds `budget`.
ExhaustiveResult exhaustive_plan(const PlannerModel& model, std::size_t k,
                                 SpreadMeasure measure,
                                 std::uint64_t budget = kDefaultSubsetBudget);

struct WscEstimate {
  std::vector<double> samples;  // f_i(Y) / f_i(X)
  double max_ratio = 0.0;
  double fraction_above_one = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

// Samples i uniformly, Y by keeping each other index with probability 1/2
// and X by keeping each element of Y with probability 1/2.
WscEstimate estimate_wsc(const PlannerModel& model, std::size_t sample_count,
                         std::uint64_t seed);

struct ExactWsc {
  double constant;
  std::uint64_t triples;
};

inline constexpr std::size_t kMaxExactWscSamples = 14;

// max f_i(Y) / f_i(X) over all X subset-of Y, i outside Y. Throws
// BudgetExceeded for N > kMaxExactWscSamples.
ExactWsc exact_wsc(const PlannerModel& model);

struct BoundReport {
  LabelSet greedy_labels;
  LabelSet optimal_labels;
  double greedy_value;   // f(J_greedy)
  double optimal_value;  // f(J*)
  double c_f;
  double factor;  // 1 - exp(-1 / c_f)
  bool bound_satisfied;
};

BoundReport bound_check(const PlannerModel& model, std::size_t k);

}  // namespace sparselabel

#endif  // SPARSELABEL_LABEL_PLANNER_HPP_
