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

#include "sparselabel/label_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "linalg.hpp"
#include "sparselabel/error.hpp"
#include "sparselabel/simd/kernels.hpp"

namespace sparselabel {
namespace {

// Floating-point stand-in for a zero gain inside ratios.
constexpr double kGainFloor = 1e-300;

// Scores within this relative distance count as tied; the earlier (smaller)
// index is kept. Symmetric designs produce exact ties that rounding would
// otherwise break arbitrarily, differently per kernel ISA.
constexpr double kTieTolerance = 1e-12;

Matrix gram_of(const PlannerModel& model, const LabelSet& labels) {
  labels.validate(model.sample_count());
  const Eigen::Index d = model.transfer().cols();
  if (labels.empty()) return Matrix::Zero(d, d);
  const Matrix a_j = restrict_rows(model.transfer(), labels);
  return a_j.transpose() * a_j;
}

Matrix amplitude_covariance(const PlannerModel& model,
                            const LabelSet& labels) {
  if (labels.empty()) {
    labels.validate(model.sample_count());
    return model.gamma().asDiagonal();
  }
  return detail::covariance_from_gram(gram_of(model, labels), model.gamma(),
                                      model.sigma2());
}

// Eigenvalues of the N x N predictive covariance implied by the amplitude
// covariance: sigma2 + the top min(N, D) eigenvalues of G^{1/2} S G^{1/2},
// the rest sigma2. Returned in descending order, only the non-trivial part.
Vector predictive_spectrum(const PlannerModel& model, const Matrix& s) {
  const Matrix& r = model.gram_sqrt();
  Matrix core = r * s * r;
  detail::symmetrize(core);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(core, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigen decomposition of the spread core failed");
  }
  const Eigen::Index d = core.rows();
  const Eigen::Index r_count =
      std::min<Eigen::Index>(d, static_cast<Eigen::Index>(model.sample_count()));
  Vector out(r_count);
  for (Eigen::Index i = 0; i < r_count; ++i) {
    out(i) = eig.eigenvalues()(d - 1 - i);
  }
  return out;
}

bool better(double candidate, double best, Direction direction,
            double scale) {
  const double margin = kTieTolerance * scale;
  return direction == Direction::kMinimize ? candidate < best - margin
                                           : candidate > best + margin;
}

}  // namespace

std::string_view to_string(SpreadMeasure measure) {
  switch (measure) {
    case SpreadMeasure::kTrace:
      return "trace";
    case SpreadMeasure::kDetRoot:
      return "det_root";
    case SpreadMeasure::kMaxEigenvalue:
      return "max_eigenvalue";
  }
  return "unknown";
}

std::string_view to_string(Direction direction) {
  return direction == Direction::kMinimize ? "minimize" : "maximize";
}

SpreadMeasure parse_spread_measure(std::string_view name) {
  if (name == "trace") return SpreadMeasure::kTrace;
  if (name == "det_root" || name == "det-root") return SpreadMeasure::kDetRoot;
  if (name == "max_eigenvalue" || name == "max-eigenvalue") {
    return SpreadMeasure::kMaxEigenvalue;
  }
  throw ValidationError("unknown spread measure '" + std::string(name) + "'");
}

Direction parse_direction(std::string_view name) {
  if (name == "minimize") return Direction::kMinimize;
  if (name == "maximize") return Direction::kMaximize;
  throw ValidationError("unknown direction '" + std::string(name) + "'");
}

PlannerModel::PlannerModel(Matrix a, Vector gamma, double sigma2)
    : a_(std::move(a)), gamma_(std::move(gamma)), sigma2_(sigma2) {
  if (a_.rows() < 1 || a_.cols() < 1) {
    throw ValidationError("planner model needs a non-empty transfer matrix");
  }
  if (gamma_.size() != a_.cols()) {
    throw ValidationError("gamma length does not match the transfer matrix");
  }
  if (!(gamma_.array() > 0.0).all() || !gamma_.allFinite()) {
    throw ValidationError(
        "planner model needs strictly positive prior variances (prune "
        "zero-variance frequencies first)");
  }
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) {
    throw ValidationError("sigma2 must be finite and > 0");
  }
  if (!(a_.col(0).array() == 1.0).all()) {
    throw ValidationError("transfer matrix column 0 must be all ones");
  }
  a_t_ = a_.transpose();
  gram_ = a_t_ * a_;
  detail::symmetrize(gram_);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  gram_sqrt_ = eig.eigenvectors() * root.asDiagonal() *
               eig.eigenvectors().transpose();
  detail::symmetrize(gram_sqrt_);
}

PlannerModel PlannerModel::from_pruned(const PrunedModel& pruned) {
  return PlannerModel(pruned.transfer.entries(), pruned.hyper.gamma_vector(),
                      pruned.hyper.sigma2());
}

RestrictedPosterior restricted_posterior(
    const PlannerModel& model, const LabelSet& labels,
    std::optional<std::span<const double>> values) {
  RestrictedPosterior out;
  out.labels = labels;
  out.covariance = amplitude_covariance(model, labels);
  out.mean = Vector::Zero(model.transfer().cols());
  if (values) {
    if (values->size() != labels.size()) {
      throw ValidationError("need one value per label");
    }
    if (!labels.empty()) {
      const Matrix a_j = restrict_rows(model.transfer(), labels);
      const Eigen::Map<const Vector> y(values->data(),
                                       static_cast<Eigen::Index>(values->size()));
      if (!y.allFinite()) throw ValidationError("label values must be finite");
      out.mean = out.covariance * (a_j.transpose() * y) / model.sigma2();
    }
  }
  return out;
}

PredictiveDistribution predictive(const PlannerModel& model,
                                  const RestrictedPosterior& rp) {
  const Matrix& a = model.transfer();
  if (rp.covariance.rows() != a.cols() || rp.mean.size() != a.cols()) {
    throw ValidationError("restricted posterior does not match the model");
  }
  PredictiveDistribution out;
  out.mean = a * rp.mean;
  out.covariance = a * rp.covariance * a.transpose();
  out.covariance.diagonal().array() += model.sigma2();
  detail::symmetrize(out.covariance);
  return out;
}

Vector predictive_variance(const PlannerModel& model,
                           const Matrix& amplitude_covariance) {
  const Matrix& a_t = model.transfer_t();
  const Matrix t = amplitude_covariance * a_t;
  Vector out(a_t.cols());
  simd::active_kernels().column_dots(
      a_t.data(), static_cast<std::size_t>(a_t.rows()), t.data(),
      static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(a_t.rows()),
      static_cast<std::size_t>(a_t.cols()), out.data());
  out.array() += model.sigma2();
  return out;
}

double spread(const Matrix& covariance, SpreadMeasure measure) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw ValidationError("spread needs a non-empty square matrix");
  }
  const double scale = covariance.cwiseAbs().maxCoeff();
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(scale, 1e-300)) {
    throw ValidationError("spread needs a symmetric matrix");
  }
  if (measure == SpreadMeasure::kTrace) return covariance.trace();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance,
                                            Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigen decomposition failed");
  }
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10) {
    throw NumericalError("covariance has a negative eigenvalue " +
                         std::to_string(lambda.minCoeff()));
  }
  if (measure == SpreadMeasure::kMaxEigenvalue) return lambda.maxCoeff();
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    log_sum += std::log(std::max(lambda(i), 1e-300));
  }
  return std::exp(log_sum / static_cast<double>(lambda.size()));
}

double spread_from_amplitude_covariance(const PlannerModel& model,
                                        const Matrix& amplitude_covariance,
                                        SpreadMeasure measure) {
  const double n = static_cast<double>(model.sample_count());
  const double s2 = model.sigma2();
  if (measure == SpreadMeasure::kTrace) {
    return n * s2 + amplitude_covariance.cwiseProduct(model.gram()).sum();
  }
  const Vector lambda = predictive_spectrum(model, amplitude_covariance);
  if (lambda.size() > 0 && lambda.minCoeff() < -1e-10 * std::max(1.0, lambda(0))) {
    throw NumericalError("amplitude covariance is not positive semidefinite");
  }
  if (measure == SpreadMeasure::kMaxEigenvalue) {
    return s2 + std::max(lambda.size() > 0 ? lambda(0) : 0.0, 0.0);
  }
  double log_sum = (n - static_cast<double>(lambda.size())) * std::log(s2);
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    log_sum += std::log(s2 + std::max(lambda(i), 0.0));
  }
  return std::exp(log_sum / n);
}

double labeled_spread(const PlannerModel& model, const LabelSet& labels,
                      SpreadMeasure measure) {
  return spread_from_amplitude_covariance(
      model, amplitude_covariance(model, labels), measure);
}

double trace_objective(const PlannerModel& model, const LabelSet& labels) {
  return labeled_spread(model, LabelSet(), SpreadMeasure::kTrace) -
         labeled_spread(model, labels, SpreadMeasure::kTrace);
}

TraceGainState::TraceGainState(const PlannerModel& model)
    : model_(&model), cov_(model.gamma().asDiagonal()) {}

TraceGainState::TraceGainState(const PlannerModel& model,
                               const LabelSet& labels)
    : model_(&model), labels_(labels) {
  refactor();
}

void TraceGainState::refactor() {
  cov_ = amplitude_covariance(*model_, labels_);
  updates_since_refactor_ = 0;
}

void TraceGainState::add(std::size_t index) {
  if (index >= model_->sample_count()) {
    throw ValidationError("label index " + std::to_string(index) +
                          " out of range");
  }
  labels_.insert(index);
  const Eigen::Index d = cov_.rows();
  const Vector v = cov_ * model_->transfer_t().col(static_cast<Eigen::Index>(index));
  const double s = simd::dot(
      {model_->transfer_t().col(static_cast<Eigen::Index>(index)).data(),
       static_cast<std::size_t>(d)},
      {v.data(), static_cast<std::size_t>(d)});
  simd::active_kernels().rank_one_update(cov_.data(),
                                         static_cast<std::size_t>(d),
                                         v.data(), static_cast<std::size_t>(d),
                                         -1.0 / (model_->sigma2() + s));
  if (++updates_since_refactor_ >= kRefactorInterval) refactor();
}

void TraceGainState::all_gains(std::span<double> out) const {
  const Matrix& a_t = model_->transfer_t();
  if (out.size() != static_cast<std::size_t>(a_t.cols())) {
    throw ValidationError("gain buffer must have one slot per sample");
  }
  const Matrix v = cov_ * a_t;
  const Matrix w = model_->gram() * v;
  const auto d = static_cast<std::size_t>(a_t.rows());
  simd::active_kernels().trace_gains(v.data(), d, w.data(), d, a_t.data(), d,
                                     d, out.size(), model_->sigma2(),
                                     out.data());
}

double TraceGainState::trace() const {
  return spread_from_amplitude_covariance(*model_, cov_, SpreadMeasure::kTrace);
}

double marginal_gain_fast(const TraceGainState& state, std::size_t index) {
  const PlannerModel& model = state.model();
  if (index >= model.sample_count()) {
    throw ValidationError("index out of range");
  }
  if (state.labels().contains(index)) {
    throw ValidationError("index " + std::to_string(index) +
                          " is already labeled");
  }
  const auto col = static_cast<Eigen::Index>(index);
  const Vector v = state.covariance() * model.transfer_t().col(col);
  const Vector w = model.gram() * v;
  const auto d = static_cast<std::size_t>(v.size());
  double gain;
  simd::active_kernels().trace_gains(v.data(), d, w.data(), d,
                                     model.transfer_t().col(col).data(), d, d,
                                     1, model.sigma2(), &gain);
  return gain;
}

namespace {

// Chooses the next index from `state`; shared by greedy_step and the plan
// loop.
GreedyStep choose_next(const TraceGainState& state, SpreadMeasure measure,
                       Direction direction, std::vector<double>& gains) {
  const PlannerModel& model = state.model();
  const std::size_t n = model.sample_count();
  gains.resize(n);
  state.all_gains(gains);

  // Trace steps compare gains directly: the spread after the step is the
  // current trace minus the gain.
  const bool by_gain = measure == SpreadMeasure::kTrace;
  const Direction key_direction =
      by_gain ? (direction == Direction::kMinimize ? Direction::kMaximize
                                                   : Direction::kMinimize)
              : direction;
  std::optional<std::size_t> best;
  double best_key = 0.0;
  const double current_trace = state.trace();
  const double s2 = model.sigma2();
  for (std::size_t i = 0; i < n; ++i) {
    if (state.labels().contains(i)) continue;
    double key;
    if (by_gain) {
      key = gains[i];
    } else {
      const auto col = static_cast<Eigen::Index>(i);
      const Vector v = state.covariance() * model.transfer_t().col(col);
      const double s = model.transfer_t().col(col).dot(v);
      Matrix cov = state.covariance();
      cov.noalias() -= v * v.transpose() / (s2 + s);
      key = spread_from_amplitude_covariance(model, cov, measure);
    }
    if (!best || better(key, best_key, key_direction,
                        std::max(std::abs(key), std::abs(best_key)))) {
      best = i;
      best_key = key;
    }
  }
  if (!best) throw ValidationError("every index is already labeled");
  return GreedyStep{*best, by_gain ? current_trace - best_key : best_key,
                    gains[*best]};
}

}  // namespace

GreedyStep greedy_step(const PlannerModel& model, const LabelSet& labels,
                       SpreadMeasure measure, Direction direction) {
  TraceGainState state(model, labels);
  std::vector<double> gains;
  return choose_next(state, measure, direction, gains);
}

LabelPlan greedy_plan(const PlannerModel& model, std::size_t k,
                      SpreadMeasure measure, Direction direction) {
  const std::size_t n = model.sample_count();
  if (k < 1 || k > n) {
    throw ValidationError("plan length must lie in [1, N]");
  }
  LabelPlan plan;
  plan.measure = measure;
  plan.direction = direction;
  TraceGainState state(model);
  plan.initial_spread = spread_from_amplitude_covariance(
      model, state.covariance(), measure);
  std::vector<double> gains;
  for (std::size_t step = 0; step < k; ++step) {
    const GreedyStep next = choose_next(state, measure, direction, gains);
    state.add(next.index);
    plan.indices.push_back(next.index);
    plan.gains.push_back(next.gain);
    plan.spreads.push_back(
        measure == SpreadMeasure::kTrace ? state.trace() : next.spread);
  }
  return plan;
}

ExhaustiveResult exhaustive_plan(const PlannerModel& model, std::size_t k,
                                 SpreadMeasure measure, std::uint64_t budget) {
  const std::size_t n = model.sample_count();
  if (k > n) throw ValidationError("subset size exceeds N");
  unsigned __int128 count = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    count = count * (n - k + i) / i;
    if (count > budget) {
      throw BudgetExceeded("C(" + std::to_string(n) + ", " +
                           std::to_string(k) + ") subsets exceed the budget of " +
                           std::to_string(budget));
    }
  }

  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  ExhaustiveResult best{LabelSet(), std::numeric_limits<double>::infinity(), 0};
  while (true) {
    LabelSet labels(idx);
    const double value = labeled_spread(model, labels, measure);
    ++best.subsets_evaluated;
    if (best.subsets_evaluated == 1 ||
        better(value, best.value, Direction::kMinimize,
               std::max(std::abs(value), std::abs(best.value)))) {
      best.value = value;
      best.labels = std::move(labels);
    }
    // Next combination in lexicographic order.
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

WscEstimate estimate_wsc(const PlannerModel& model, std::size_t sample_count,
                         std::uint64_t seed) {
  const std::size_t n = model.sample_count();
  if (n < 2) throw ValidationError("weak-submodularity sampling needs N >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::bernoulli_distribution coin(0.5);

  WscEstimate out;
  out.seed = seed;
  out.sample_count = sample_count;
  out.samples.reserve(sample_count);
  std::size_t above = 0;
  for (std::size_t s = 0; s < sample_count; ++s) {
    const std::size_t i = pick(rng);
    std::vector<std::size_t> big;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && coin(rng)) big.push_back(j);
    }
    std::vector<std::size_t> small;
    for (std::size_t j : big) {
      if (coin(rng)) small.push_back(j);
    }
    const double g_big = std::max(
        marginal_gain_fast(TraceGainState(model, LabelSet(big)), i), kGainFloor);
    const double g_small = std::max(
        marginal_gain_fast(TraceGainState(model, LabelSet(small)), i),
        kGainFloor);
    const double ratio = g_big / g_small;
    out.samples.push_back(ratio);
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > 1.0) ++above;
  }
  out.fraction_above_one =
      sample_count == 0 ? 0.0
                        : static_cast<double>(above) /
                              static_cast<double>(sample_count);
  return out;
}

ExactWsc exact_wsc(const PlannerModel& model) {
  const std::size_t n = model.sample_count();
  if (n > kMaxExactWscSamples) {
    throw BudgetExceeded("exact weak-submodularity constant needs N <= " +
                         std::to_string(kMaxExactWscSamples) + " (got " +
                         std::to_string(n) + ")");
  }
  const std::size_t masks = std::size_t{1} << n;
  std::vector<double> table(masks * n, 0.0);
  std::vector<double> gains(n);
  for (std::size_t mask = 0; mask < masks; ++mask) {
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (std::size_t{1} << j)) members.push_back(j);
    }
    TraceGainState state(model, LabelSet(members));
    state.all_gains(gains);
    for (std::size_t j = 0; j < n; ++j) {
      table[mask * n + j] = std::max(gains[j], kGainFloor);
    }
  }

  ExactWsc out{0.0, 0};
  const std::size_t full = masks - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    const std::size_t rest = full & ~bit;
    // Y ranges over subsets of rest; X over subsets of Y.
    for (std::size_t y = rest;; y = (y - 1) & rest) {
      const double g_y = table[y * n + i];
      for (std::size_t x = y;; x = (x - 1) & y) {
        out.constant = std::max(out.constant, g_y / table[x * n + i]);
        ++out.triples;
        if (x == 0) break;
      }
      if (y == 0) break;
    }
  }
  return out;
}

BoundReport bound_check(const PlannerModel& model, std::size_t k) {
  const ExhaustiveResult opt =
      exhaustive_plan(model, k, SpreadMeasure::kTrace);
  const ExactWsc wsc = exact_wsc(model);
  const LabelPlan plan = greedy_plan(model, k, SpreadMeasure::kTrace);

  BoundReport out;
  out.greedy_labels = LabelSet(plan.indices);
  out.optimal_labels = opt.labels;
  out.greedy_value = trace_objective(model, out.greedy_labels);
  out.optimal_value = trace_objective(model, out.optimal_labels);
  out.c_f = wsc.constant;
  out.factor = 1.0 - std::exp(-1.0 / out.c_f);
  out.bound_satisfied = out.greedy_value >= out.factor * out.optimal_value;
  return out;
}

}  // namespace sparselabel
