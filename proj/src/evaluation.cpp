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

#include "sparselabel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <utility>

#include "linalg.hpp"
#include "sparselabel/error.hpp"

namespace sparselabel {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<std::size_t> kept_indices(std::size_t n,
                                      const std::optional<LabelSet>& excluded) {
  std::vector<bool> drop(n, false);
  if (excluded) {
    excluded->validate(n);
    for (std::size_t i : excluded->indices()) drop[i] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) out.push_back(i);
  }
  return out;
}

Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

double sum_log_diag(const Matrix& l) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return s;
}

PlanCurve score_plan(const PlannerModel& model, const LabelPlan& plan,
                     const Vector& y_true, NllScope scope) {
  PlanCurve curve;
  curve.indices = plan.indices;
  curve.spread = plan.spreads;
  LabelSet labels;
  for (std::size_t idx : plan.indices) {
    labels.insert(idx);
    curve.nll.push_back(labeled_nll(model, labels, y_true, scope));
    const RestrictedPosterior rp = restricted_posterior(model, labels);
    const Vector var = predictive_variance(model, rp.covariance);
    curve.band_width.push_back(2.0 * var.cwiseSqrt().mean());
  }
  return curve;
}

[[noreturn]] void rethrow_for_slice(const Error& e, const std::string& slice) {
  const std::string msg = "slice '" + slice + "': " + e.what();
  if (e.code() == "numerical_error") throw NumericalError(msg);
  if (e.code() == "validation_error") throw ValidationError(msg);
  if (e.code() == "budget_exceeded") throw BudgetExceeded(msg);
  throw Error(e.code(), msg);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (sample_count < 1) throw ValidationError("sample_count must be >= 1");
  if (slice_count < 1) throw ValidationError("slice_count must be >= 1");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw ValidationError("frame_rate must be finite and > 0");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ValidationError("noise_sigma must be finite and >= 0");
  }
  if (!dc_offsets.empty() && dc_offsets.size() != slice_count) {
    throw ValidationError("need one dc offset per slice");
  }
  for (const SyntheticComponent& c : components) {
    if (!std::isfinite(c.frequency) || !std::isfinite(c.amplitude)) {
      throw ValidationError("component frequency and amplitude must be finite");
    }
    if (!c.phases.empty() && c.phases.size() != slice_count) {
      throw ValidationError("need one phase per slice for every component");
    }
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const TimeGrid tg = build_time_grid(spec.sample_count, spec.frame_rate);
  const auto n = static_cast<Eigen::Index>(spec.sample_count);
  const auto l_count = static_cast<Eigen::Index>(spec.slice_count);
  Matrix y = Matrix::Zero(n, l_count);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index l = 0; l < l_count; ++l) {
    const double dc =
        spec.dc_offsets.empty() ? 0.0 : spec.dc_offsets[static_cast<std::size_t>(l)];
    for (Eigen::Index k = 0; k < n; ++k) {
      double v = dc;
      for (const SyntheticComponent& c : spec.components) {
        const double phi =
            c.phases.empty() ? 0.0 : c.phases[static_cast<std::size_t>(l)];
        v += c.amplitude *
             std::cos(2.0 * std::numbers::pi * c.frequency * tg[static_cast<std::size_t>(k)] + phi);
      }
      y(k, l) = v;
    }
  }
  if (spec.noise_sigma > 0.0) {
    for (Eigen::Index l = 0; l < l_count; ++l) {
      for (Eigen::Index k = 0; k < n; ++k) {
        y(k, l) += spec.noise_sigma * noise(rng);
      }
    }
  }
  return Dataset(std::move(y), tg);
}

SyntheticSpec two_tone_spec(std::uint64_t seed, std::size_t slice_count) {
  SyntheticSpec spec;
  spec.sample_count = 300;
  spec.frame_rate = 30.0;
  spec.slice_count = slice_count;
  spec.seed = seed;
  spec.noise_sigma = 0.05;
  spec.dc_offsets.assign(slice_count, 3.0);
  // Phases come from a stream separate from the noise.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  SyntheticComponent resp{0.3, 0.5, {}};
  SyntheticComponent heart{1.2, 1.0, {}};
  for (std::size_t l = 0; l < slice_count; ++l) {
    resp.phases.push_back(phase(rng));
    heart.phases.push_back(phase(rng));
  }
  spec.components = {resp, heart};
  return spec;
}

std::string_view to_string(NllScope scope) {
  return scope == NllScope::kAllPoints ? "all" : "unlabeled";
}

NllScope parse_nll_scope(std::string_view name) {
  if (name == "all") return NllScope::kAllPoints;
  if (name == "unlabeled") return NllScope::kUnlabeledOnly;
  throw ValidationError("unknown NLL scope '" + std::string(name) + "'");
}

double nll(const PredictiveDistribution& pred, const Vector& y_true,
           const std::optional<LabelSet>& excluded) {
  const Eigen::Index n = pred.mean.size();
  if (y_true.size() != n || pred.covariance.rows() != n ||
      pred.covariance.cols() != n) {
    throw ValidationError("NLL inputs have inconsistent shapes");
  }
  const std::vector<std::size_t> idx =
      kept_indices(static_cast<std::size_t>(n), excluded);
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (m == 0) return 0.0;
  Matrix c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      c(i, j) = pred.covariance(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                                static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
    }
  }
  const Vector r = gather(y_true, idx) - gather(pred.mean, idx);
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("predictive covariance is not positive definite");
  }
  const Matrix l = llt.matrixL();
  const Vector z = llt.matrixL().solve(r);
  return 0.5 * (z.squaredNorm() + 2.0 * sum_log_diag(l) +
                static_cast<double>(m) * kLog2Pi);
}

double nll_low_rank(const PlannerModel& model, const RestrictedPosterior& rp,
                    const Vector& y_true,
                    const std::optional<LabelSet>& excluded) {
  const std::size_t n = model.sample_count();
  if (static_cast<std::size_t>(y_true.size()) != n) {
    throw ValidationError("NLL inputs have inconsistent shapes");
  }
  const std::vector<std::size_t> idx = kept_indices(n, excluded);
  const auto m = static_cast<Eigen::Index>(idx.size());
  if (m == 0) return 0.0;
  const double s2 = model.sigma2();

  // S = R R^T from the clamped spectrum; C_I = s2 I + B B^T with B = A_I R.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rp.covariance);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigen decomposition of the amplitude covariance failed");
  }
  if (eig.eigenvalues().minCoeff() <
      -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw NumericalError("amplitude covariance is not positive semidefinite");
  }
  const Matrix root = eig.eigenvectors() *
                      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Matrix& a = model.transfer();
  const Eigen::Index d = a.cols();
  Matrix a_i(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    a_i.row(i) = a.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
  }
  const Matrix b = a_i * root;
  const Vector r = gather(y_true, idx) - a_i * rp.mean;

  Matrix core = b.transpose() * b;
  core.diagonal().array() += s2;
  Eigen::LLT<Matrix> llt(core);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("predictive covariance is not positive definite");
  }
  const Matrix l = llt.matrixL();
  const Vector z = llt.matrixL().solve(b.transpose() * r);
  const double quad = (r.squaredNorm() - z.squaredNorm()) / s2;
  const double logdet = static_cast<double>(m - d) * std::log(s2) +
                        2.0 * sum_log_diag(l);
  return 0.5 * (quad + logdet + static_cast<double>(m) * kLog2Pi);
}

double labeled_nll(const PlannerModel& model, const LabelSet& labels,
                   const Vector& y_true, NllScope scope) {
  std::vector<double> values;
  values.reserve(labels.size());
  for (std::size_t i : labels.indices()) {
    values.push_back(y_true(static_cast<Eigen::Index>(i)));
  }
  const RestrictedPosterior rp =
      restricted_posterior(model, labels, std::span<const double>(values));
  return nll_low_rank(model, rp, y_true,
                      scope == NllScope::kUnlabeledOnly
                          ? std::optional<LabelSet>(labels)
                          : std::nullopt);
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q > 0.0 && q <= 1.0)) throw ValidationError("quantile must lie in (0, 1]");
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

BandSummary summarize(std::vector<double> values) {
  if (values.empty()) throw ValidationError("cannot summarize an empty sample");
  std::sort(values.begin(), values.end());
  BandSummary s;
  s.mean = detail::ordered_sum(values) / static_cast<double>(values.size());
  s.min = values.front();
  s.max = values.back();
  s.p01 = nearest_rank(values, 0.01);
  s.p05 = nearest_rank(values, 0.05);
  s.p50 = nearest_rank(values, 0.50);
  s.p95 = nearest_rank(values, 0.95);
  return s;
}

BaselineResult random_baseline(const PlannerModel& model, std::size_t k,
                               std::size_t draws, std::uint64_t seed,
                               SpreadMeasure measure, const Vector* y_true,
                               NllScope scope) {
  const std::size_t n = model.sample_count();
  if (k > n) throw ValidationError("baseline subset size exceeds N");
  if (draws < 1) throw ValidationError("baseline needs at least one draw");
  if (y_true && static_cast<std::size_t>(y_true->size()) != n) {
    throw ValidationError("baseline truth has the wrong length");
  }
  BaselineResult out;
  out.k = k;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t draw = 0; draw < draws; ++draw) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    // Sorted so equal sets give bit-equal results.
    std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    LabelSet labels(std::move(chosen));
    out.spreads.push_back(labeled_spread(model, labels, measure));
    if (y_true) out.nlls.push_back(labeled_nll(model, labels, *y_true, scope));
    out.subsets.push_back(std::move(labels));
  }
  out.spread_summary = summarize(out.spreads);
  if (y_true) out.nll_summary = summarize(out.nlls);
  return out;
}

void JackknifeConfig::validate(std::size_t sample_count) const {
  if (!(prune_ratio >= 0.0 && prune_ratio <= 1.0)) {
    throw ValidationError("prune ratio must lie in [0, 1]");
  }
  if (k_max < 1 || k_max > sample_count) {
    throw ValidationError("k_max must lie in [1, N]");
  }
  if (baseline_draws < 1) throw ValidationError("baseline draws must be >= 1");
}

std::uint64_t baseline_seed(std::uint64_t seed, std::size_t fold,
                            std::size_t k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold),
                    static_cast<std::uint32_t>(k)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

EvalReport evaluate_fold(const Dataset& y, const TransferMatrix& a,
                         const EmConfig& em, const JackknifeConfig& cfg,
                         std::size_t fold) {
  if (fold >= y.slice_count()) throw ValidationError("fold index out of range");
  cfg.validate(y.sample_count());
  EvalReport report;
  report.left_out_index = fold;
  report.left_out_slice = y.slice_ids()[fold];
  report.measure = cfg.measure;
  report.scope = cfg.scope;
  report.seed = cfg.seed;

  const Dataset train = y.without_slice(fold);
  const PriorFit fit = fit_sparse_prior(train, a, em);
  const PrunedModel pruned = prune(fit, a, cfg.prune_ratio);
  report.kept_frequencies = pruned.kept_frequency_indices;
  report.alpha.assign(pruned.hyper.alpha().begin(), pruned.hyper.alpha().end());
  report.sigma2 = pruned.hyper.sigma2();
  report.em_iterations = fit.iterations_used;
  report.stop_reason = fit.stop_reason;

  const PlannerModel model = PlannerModel::from_pruned(pruned);
  const Vector truth = y.values().col(static_cast<Eigen::Index>(fold));
  report.greedy = score_plan(
      model, greedy_plan(model, cfg.k_max, cfg.measure, Direction::kMinimize),
      truth, cfg.scope);
  report.worst = score_plan(
      model, greedy_plan(model, cfg.k_max, cfg.measure, Direction::kMaximize),
      truth, cfg.scope);
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    const std::uint64_t s = baseline_seed(cfg.seed, fold, k);
    const BaselineResult base = random_baseline(
        model, k, cfg.baseline_draws, s, cfg.measure, &truth, cfg.scope);
    report.baseline_seeds.push_back(s);
    report.baseline_spread.push_back(base.spread_summary);
    report.baseline_nll.push_back(*base.nll_summary);
  }
  return report;
}

std::vector<EvalReport> jackknife(const Dataset& y, const TransferMatrix& a,
                                  const EmConfig& em,
                                  const JackknifeConfig& cfg) {
  if (y.slice_count() < 2) {
    throw ValidationError("jackknife needs at least two slices");
  }
  em.validate();
  cfg.validate(y.sample_count());
  std::vector<EvalReport> reports;
  for (std::size_t fold = 0; fold < y.slice_count(); ++fold) {
    try {
      reports.push_back(evaluate_fold(y, a, em, cfg, fold));
    } catch (const Error& e) {
      rethrow_for_slice(e, y.slice_ids()[fold]);
    }
  }
  return reports;
}

}  // namespace sparselabel
