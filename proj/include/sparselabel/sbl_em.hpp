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

// Sparse Bayesian learning of the frequency prior.
//
// Each amplitude column x_l ~ N(0, Gamma) with Gamma = diag(gamma) and
// gamma = [alpha_0, alpha_1..alpha_M, alpha_1..alpha_M]: a cosine/sine pair
// shares one variance so the prior is uniform in phase. alpha and the noise
// variance sigma2 are fitted by evidence maximization using MacKay
// fixed-point updates, then frequencies whose alpha is negligible next to the
// strongest one are pruned.

#ifndef SPARSELABEL_SBL_EM_HPP_
#define SPARSELABEL_SBL_EM_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sparselabel/core_model.hpp"

namespace sparselabel {

class HyperParams {
 public:
  // alpha has M + 1 entries (DC first); all >= 0. sigma2 > 0.
  HyperParams(std::vector<double> alpha, double sigma2);

  std::span<const double> alpha() const { return alpha_; }
  double sigma2() const { return sigma2_; }
  std::size_t oscillatory_count() const { return alpha_.size() - 1; }

  // [alpha_0, alpha_1..alpha_M, alpha_1..alpha_M], length 2M + 1.
  Vector gamma_vector() const;

 private:
  std::vector<double> alpha_;
  double sigma2_;
};

// Gaussian posterior over the amplitude matrix X. The covariance is shared
// by all slices.
struct AmplitudePosterior {
  Matrix mean;        // (2M + 1) x L
  Matrix covariance;  // (2M + 1) x (2M + 1)
};

// Alpha update for a cosine/sine pair m, m + M sharing one variance, with
// shrink = (S_mm + S_{m+M,m+M}) / alpha_m:
//   kRowSum:    (||mu_m||^2 + ||mu_{m+M}||^2) / (L (2 - shrink)), the exact
//               fixed point of the tied-variance evidence
//   kPairedSum: ||mu_m + mu_{m+M}||^2 / (L (1 - shrink)), the literal
//               single-component form; its denominator can turn negative
//               once unsupported alphas shrink, which raises NumericalError
enum class AlphaUpdate { kRowSum, kPairedSum };

std::string_view to_string(AlphaUpdate variant);
AlphaUpdate parse_alpha_update(std::string_view name);

struct EmConfig {
  double sigma2_init = 0.2;
  double alpha_init = 1.0;
  double eps_min = 1e-4;
  std::size_t max_iter = 5000;
  // Number K of strongest frequencies spanning the signal subspace in the
  // noise update. Unset: the count of alphas above the prune threshold at
  // the current iterate, clamped to [1, (N - 2) / 2].
  std::optional<std::size_t> k_order;
  AlphaUpdate update_variant = AlphaUpdate::kRowSum;
  // Ratio used for the automatic k_order count.
  double k_order_ratio = 0.01;

  void validate() const;
};

enum class StopReason {
  kConverged,      // relative alpha change fell below eps_min
  kMaxIterations,  // max_iter reached
  kCollapsed,      // every alpha update was exactly zero (no signal)
};

std::string_view to_string(StopReason reason);

struct PriorFit {
  HyperParams hyper;
  std::size_t iterations_used = 0;
  double final_epsilon = 0.0;
  // Evidence of the iterate entering each iteration.
  std::vector<double> evidence_trace;
  StopReason stop_reason = StopReason::kMaxIterations;

  bool converged() const { return stop_reason == StopReason::kConverged; }
};

struct PrunedModel {
  std::vector<std::size_t> kept_frequency_indices;  // always starts with 0
  TransferMatrix transfer;
  HyperParams hyper;
};

// Snapshot handed to an optional observer after each posterior solve.
struct EmIterate {
  std::size_t iteration;  // 1-based
  const HyperParams& hyper;
  const Matrix& posterior_mean;
  double evidence;
};

using EmObserver = std::function<void(const EmIterate&)>;

// mu = Gamma A^T Sigma_y^{-1} Y,  Sigma_x = (A^T A / sigma2 + Gamma^{-1})^{-1}
// with Sigma_y = sigma2 I + A Gamma A^T. All alphas must be > 0. Throws
// NumericalError when the solve's condition estimate exceeds 1e14.
AmplitudePosterior posterior(const TransferMatrix& a, const Dataset& y,
                             const HyperParams& hyper);

// Same on raw matrices; gamma has one variance per column of `a`. Used for
// restricted (row-subset) posteriors, where `a` may have zero rows.
AmplitudePosterior posterior(const Matrix& a, const Matrix& y,
                             const Vector& gamma, double sigma2);

// One MacKay fixed-point step (see AlphaUpdate for the pair rule);
//   alpha_0 <- ||mu_0||^2 / (L (1 - S_00 / alpha_0)).
// Throws NumericalError on a non-positive denominator or non-finite result.
std::vector<double> update_alpha(const AmplitudePosterior& post,
                                 const HyperParams& hyper,
                                 std::size_t slice_count,
                                 AlphaUpdate variant);

// Residual-energy noise estimate tr((I - A_K A_K^+) S_y) / (N - K), with A_K
// the DC column plus the cosine/sine columns of the k_order largest alphas
// and S_y = Y Y^T / L. k_order = 0 keeps the DC column only.
double update_sigma(const TransferMatrix& a, const Dataset& y,
                    std::span<const double> alpha, std::size_t k_order);

// -tr(Y^T Sigma_y^{-1} Y) - L log det Sigma_y.
double evidence(const TransferMatrix& a, const Dataset& y,
                const HyperParams& hyper);

PriorFit fit_sparse_prior(const Dataset& y, const TransferMatrix& a,
                          const EmConfig& cfg,
                          const EmObserver& observer = {});

// Indices kept by the threshold rule: 0 plus every m >= 1 with
// alpha_m >= ratio * max_{m >= 1} alpha_m (and alpha_m > 0).
std::vector<std::size_t> kept_frequencies(std::span<const double> alpha,
                                          double threshold_ratio);

PrunedModel prune(const PriorFit& fit, const TransferMatrix& a,
                  double threshold_ratio = 0.01);

// Same on bare hyperparameters.
PrunedModel prune(const HyperParams& hyper, const TransferMatrix& a,
                  double threshold_ratio = 0.01);

}  // namespace sparselabel

#endif  // SPARSELABEL_SBL_EM_HPP_
