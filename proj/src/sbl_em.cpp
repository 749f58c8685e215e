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

#include "sparselabel/sbl_em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "linalg.hpp"
#include "sparselabel/error.hpp"
#include "sparselabel/simd/kernels.hpp"

namespace sparselabel {
namespace {

// Relative floor applied to alphas inside the EM loop. Exact zeros only
// appear after pruning.
constexpr double kAlphaFloor = 1e-12;
// Noise variance floor, relative to the data/initial scale.
constexpr double kSigmaFloor = 1e-10;

void check_shapes(const TransferMatrix& a, const Dataset& y,
                  const HyperParams& hyper) {
  if (static_cast<std::size_t>(a.rows()) != y.sample_count()) {
    throw ValidationError("transfer matrix and dataset disagree on N");
  }
  if (hyper.oscillatory_count() != a.oscillatory_count()) {
    throw ValidationError("hyperparameters and transfer matrix disagree on M");
  }
}

void require_positive_alpha(const HyperParams& hyper) {
  const auto alpha = hyper.alpha();
  for (std::size_t m = 0; m < alpha.size(); ++m) {
    if (!(alpha[m] > 0.0)) {
      throw ValidationError("alpha_" + std::to_string(m) +
                            " is zero; prune the model before solving");
    }
  }
}

// Posterior mean, covariance diagonal and evidence from precomputed
// G = A^T A, A^T y_l and ||y_l||^2 (scaled D x D route, D <= N).
struct EmStats {
  Matrix mean;
  Vector cov_diag;
  double evidence;
};

EmStats em_stats(const Matrix& gram, const Matrix& aty,
                 std::span<const double> y_sq, const Vector& gamma,
                 double sigma2, std::size_t n) {
  const Eigen::Index d = gamma.size();
  const Vector g = gamma.cwiseSqrt();
  Matrix b = (g * g.transpose()).cwiseProduct(gram) / sigma2;
  b.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("posterior precision is not positive definite");
  }
  detail::check_condition(llt.rcond(), gamma, sigma2, "posterior");
  const Matrix l_inv =
      llt.matrixL().solve(Matrix::Identity(d, d));  // lower triangular

  EmStats out;
  out.cov_diag.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.cov_diag(i) = gamma(i) * l_inv.col(i).squaredNorm();
  }

  const Eigen::Index slices = aty.cols();
  out.mean.resize(d, slices);
  std::vector<double> quad(static_cast<std::size_t>(slices));
  for (Eigen::Index l = 0; l < slices; ++l) {
    const Vector z = l_inv * g.cwiseProduct(aty.col(l));
    out.mean.col(l) =
        g.cwiseProduct(l_inv.transpose() * z) / sigma2;
    quad[static_cast<std::size_t>(l)] =
        (y_sq[static_cast<std::size_t>(l)] - z.squaredNorm() / sigma2) /
        sigma2;
  }
  double log_det = static_cast<double>(n) * std::log(sigma2);
  for (Eigen::Index i = 0; i < d; ++i) {
    log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  }
  out.evidence = -detail::ordered_sum(std::move(quad)) -
                 static_cast<double>(slices) * log_det;
  return out;
}

// -tr(Y^T Sigma_y^{-1} Y) - L log det Sigma_y via an N x N factorization.
double evidence_direct(const Matrix& a, const Matrix& y, const Vector& gamma,
                       double sigma2) {
  const Eigen::Index n = a.rows();
  Matrix sigma_y = a * gamma.asDiagonal() * a.transpose();
  sigma_y.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(sigma_y);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("data covariance is not positive definite");
  }
  std::vector<double> quad(static_cast<std::size_t>(y.cols()));
  for (Eigen::Index l = 0; l < y.cols(); ++l) {
    quad[static_cast<std::size_t>(l)] =
        llt.matrixL().solve(Vector(y.col(l))).squaredNorm();
  }
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  }
  return -detail::ordered_sum(std::move(quad)) -
         static_cast<double>(y.cols()) * log_det;
}

std::vector<std::size_t> largest_alpha_indices(std::span<const double> alpha,
                                               std::size_t k) {
  std::vector<std::size_t> idx(alpha.size() - 1);
  std::iota(idx.begin(), idx.end(), std::size_t{1});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return alpha[i] > alpha[j];
  });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t default_k_order(std::span<const double> alpha, double ratio,
                            std::size_t n) {
  const std::size_t above = kept_frequencies(alpha, ratio).size() - 1;
  const std::size_t hi = n >= 4 ? (n - 2) / 2 : 1;
  return std::clamp<std::size_t>(above, 1, hi);
}

}  // namespace

HyperParams::HyperParams(std::vector<double> alpha, double sigma2)
    : alpha_(std::move(alpha)), sigma2_(sigma2) {
  if (alpha_.empty()) throw ValidationError("alpha must not be empty");
  for (std::size_t m = 0; m < alpha_.size(); ++m) {
    if (!(alpha_[m] >= 0.0) || !std::isfinite(alpha_[m])) {
      throw ValidationError("alpha_" + std::to_string(m) +
                            " must be finite and >= 0");
    }
  }
  if (!(sigma2_ > 0.0) || !std::isfinite(sigma2_)) {
    throw ValidationError("sigma2 must be finite and > 0");
  }
}

Vector HyperParams::gamma_vector() const {
  const std::size_t m_count = oscillatory_count();
  Vector gamma(static_cast<Eigen::Index>(2 * m_count + 1));
  gamma(0) = alpha_[0];
  for (std::size_t m = 1; m <= m_count; ++m) {
    gamma(static_cast<Eigen::Index>(m)) = alpha_[m];
    gamma(static_cast<Eigen::Index>(m + m_count)) = alpha_[m];
  }
  return gamma;
}

std::string_view to_string(AlphaUpdate variant) {
  return variant == AlphaUpdate::kRowSum ? "row-sum" : "paired-sum";
}

AlphaUpdate parse_alpha_update(std::string_view name) {
  if (name == "row-sum") return AlphaUpdate::kRowSum;
  if (name == "paired-sum") return AlphaUpdate::kPairedSum;
  throw ValidationError("unknown alpha update variant '" + std::string(name) +
                        "'");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kConverged:
      return "converged";
    case StopReason::kMaxIterations:
      return "max_iterations";
    case StopReason::kCollapsed:
      return "collapsed";
  }
  return "unknown";
}

void EmConfig::validate() const {
  if (!(sigma2_init > 0.0)) throw ValidationError("sigma2_init must be > 0");
  if (!(alpha_init > 0.0)) throw ValidationError("alpha_init must be > 0");
  if (!(eps_min > 0.0)) throw ValidationError("eps_min must be > 0");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (k_order && *k_order < 1) throw ValidationError("k_order must be >= 1");
  if (!(k_order_ratio > 0.0 && k_order_ratio < 1.0)) {
    throw ValidationError("k_order_ratio must lie in (0, 1)");
  }
}

AmplitudePosterior posterior(const Matrix& a, const Matrix& y,
                             const Vector& gamma, double sigma2) {
  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  if (gamma.size() != d) throw ValidationError("gamma length != columns of A");
  if (y.rows() != n) throw ValidationError("Y rows != rows of A");
  if (!(sigma2 > 0.0)) throw ValidationError("sigma2 must be > 0");
  if (!(gamma.array() > 0.0).all()) {
    throw ValidationError("posterior requires all prior variances > 0");
  }
  const Vector g = gamma.cwiseSqrt();
  const Eigen::Index slices = y.cols();
  AmplitudePosterior out;
  out.mean.resize(d, slices);

  if (n == 0) {
    out.covariance = gamma.asDiagonal();
    out.mean.setZero();
    return out;
  }

  if (d <= n) {
    out.covariance =
        detail::covariance_from_gram(a.transpose() * a, gamma, sigma2);
    for (Eigen::Index l = 0; l < slices; ++l) {
      const Vector aty = a.transpose() * y.col(l);
      out.mean.col(l) = out.covariance * aty / sigma2;
    }
    return out;
  }

  // Woodbury route through the N x N data covariance of the scaled design.
  const Matrix a_scaled = a * g.asDiagonal();
  Matrix c = a_scaled * a_scaled.transpose();
  c.diagonal().array() += sigma2;
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("data covariance is not positive definite");
  }
  detail::check_condition(llt.rcond(), gamma, sigma2, "posterior");
  const Matrix w = llt.matrixL().solve(a_scaled);
  Matrix inner = -w.transpose() * w;
  inner.diagonal().array() += 1.0;
  out.covariance = g.asDiagonal() * inner * g.asDiagonal();
  detail::symmetrize(out.covariance);
  for (Eigen::Index l = 0; l < slices; ++l) {
    const Vector z = llt.matrixL().solve(Vector(y.col(l)));
    out.mean.col(l) = g.cwiseProduct(w.transpose() * z);
  }
  return out;
}

AmplitudePosterior posterior(const TransferMatrix& a, const Dataset& y,
                             const HyperParams& hyper) {
  check_shapes(a, y, hyper);
  require_positive_alpha(hyper);
  return posterior(a.entries(), y.values(), hyper.gamma_vector(),
                   hyper.sigma2());
}

std::vector<double> update_alpha(const AmplitudePosterior& post,
                                 const HyperParams& hyper,
                                 std::size_t slice_count,
                                 AlphaUpdate variant) {
  const std::size_t m_count = hyper.oscillatory_count();
  const auto d = static_cast<Eigen::Index>(2 * m_count + 1);
  if (post.mean.rows() != d || post.covariance.rows() != d ||
      post.covariance.cols() != d) {
    throw ValidationError("posterior shape does not match hyperparameters");
  }
  if (slice_count < 1 ||
      static_cast<std::size_t>(post.mean.cols()) != slice_count) {
    throw ValidationError("slice count does not match posterior mean");
  }
  require_positive_alpha(hyper);
  const auto alpha = hyper.alpha();
  const double big_l = static_cast<double>(slice_count);
  const Eigen::Index slices = post.mean.cols();

  std::vector<double> out(m_count + 1);
  auto finish = [&](std::size_t m, double num, double shrink,
                    double components) {
    const double den = big_l * (components - shrink);
    if (!(den > 0.0)) {
      std::ostringstream msg;
      msg << "alpha update denominator " << den << " <= 0 for m = " << m
          << " (alpha = " << alpha[m] << ")";
      throw NumericalError(msg.str());
    }
    const double value = num / den;
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite alpha update for m = " +
                           std::to_string(m));
    }
    out[m] = std::max(value, 0.0);
  };

  std::vector<double> terms(static_cast<std::size_t>(slices));
  for (Eigen::Index l = 0; l < slices; ++l) {
    const double v = post.mean(0, l);
    terms[static_cast<std::size_t>(l)] = v * v;
  }
  finish(0, detail::ordered_sum(terms), post.covariance(0, 0) / alpha[0], 1.0);

  for (std::size_t m = 1; m <= m_count; ++m) {
    const auto c = static_cast<Eigen::Index>(m);
    const auto s = static_cast<Eigen::Index>(m + m_count);
    for (Eigen::Index l = 0; l < slices; ++l) {
      const double x = post.mean(c, l);
      const double y = post.mean(s, l);
      terms[static_cast<std::size_t>(l)] =
          variant == AlphaUpdate::kRowSum ? x * x + y * y : (x + y) * (x + y);
    }
    const double shrink =
        (post.covariance(c, c) + post.covariance(s, s)) / alpha[m];
    // The tied pair contributes two components to the fixed point; the
    // literal variant keeps the single-component form.
    finish(m, detail::ordered_sum(terms), shrink,
           variant == AlphaUpdate::kRowSum ? 2.0 : 1.0);
  }
  return out;
}

double update_sigma(const TransferMatrix& a, const Dataset& y,
                    std::span<const double> alpha, std::size_t k_order) {
  const std::size_t n = y.sample_count();
  const std::size_t m_count = a.oscillatory_count();
  if (static_cast<std::size_t>(a.rows()) != n) {
    throw ValidationError("transfer matrix and dataset disagree on N");
  }
  if (alpha.size() != m_count + 1) {
    throw ValidationError("alpha length does not match the transfer matrix");
  }
  if (2 * k_order + 1 >= n) {
    throw ValidationError("noise update needs 2 K + 1 < N");
  }
  if (k_order > m_count) {
    throw ValidationError("k_order exceeds the number of frequencies");
  }

  const auto support = largest_alpha_indices(alpha, k_order);
  std::vector<Eigen::Index> cols{0};
  for (std::size_t m : support) cols.push_back(a.cosine_column(m));
  for (std::size_t m : support) cols.push_back(a.sine_column(m));
  const Matrix a_k = a.entries()(Eigen::all, cols);

  // Orthonormal basis of range(A_K) with tolerance-based rank truncation.
  Eigen::BDCSVD<Matrix> svd(a_k, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(a_k.rows(), a_k.cols())) *
                     std::numeric_limits<double>::epsilon() *
                     (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > tol) ++rank;
  const Matrix u = svd.matrixU().leftCols(rank);

  const Matrix& values = y.values();
  std::vector<double> energy(static_cast<std::size_t>(values.cols()));
  for (Eigen::Index l = 0; l < values.cols(); ++l) {
    const Vector coef = u.transpose() * values.col(l);
    const Vector resid = values.col(l) - u * coef;
    energy[static_cast<std::size_t>(l)] =
        simd::sum_squares({resid.data(), static_cast<std::size_t>(n)});
  }
  const double trace = detail::ordered_sum(std::move(energy)) /
                       static_cast<double>(values.cols());
  const double sigma2 = trace / static_cast<double>(n - k_order);
  if (sigma2 < -1e-12) throw NumericalError("negative noise estimate");
  return std::max(sigma2, 0.0);
}

double evidence(const TransferMatrix& a, const Dataset& y,
                const HyperParams& hyper) {
  check_shapes(a, y, hyper);
  const Vector gamma = hyper.gamma_vector();
  const std::size_t n = y.sample_count();
  if (static_cast<std::size_t>(a.cols()) <= n && (gamma.array() > 0.0).all()) {
    const Matrix& values = y.values();
    Matrix aty(a.cols(), values.cols());
    std::vector<double> y_sq(static_cast<std::size_t>(values.cols()));
    for (Eigen::Index l = 0; l < values.cols(); ++l) {
      aty.col(l) = a.entries().transpose() * values.col(l);
      y_sq[static_cast<std::size_t>(l)] = values.col(l).squaredNorm();
    }
    return em_stats(a.entries().transpose() * a.entries(), aty, y_sq, gamma,
                    hyper.sigma2(), n)
        .evidence;
  }
  return evidence_direct(a.entries(), y.values(), gamma, hyper.sigma2());
}

PriorFit fit_sparse_prior(const Dataset& y, const TransferMatrix& a,
                          const EmConfig& cfg, const EmObserver& observer) {
  cfg.validate();
  const std::size_t n = y.sample_count();
  const std::size_t m_count = a.oscillatory_count();
  if (static_cast<std::size_t>(a.rows()) != n) {
    throw ValidationError("transfer matrix and dataset disagree on N");
  }
  if (n < 3) throw ValidationError("fitting needs at least 3 samples");
  if (cfg.k_order && 2 * *cfg.k_order + 1 >= n) {
    throw ValidationError("k_order too large for N");
  }

  const Matrix& values = y.values();
  const std::size_t slices = y.slice_count();
  const bool small_route = static_cast<std::size_t>(a.cols()) <= n;
  Matrix gram;
  Matrix aty(a.cols(), values.cols());
  std::vector<double> y_sq(slices);
  for (Eigen::Index l = 0; l < values.cols(); ++l) {
    aty.col(l) = a.entries().transpose() * values.col(l);
    y_sq[static_cast<std::size_t>(l)] = values.col(l).squaredNorm();
  }
  if (small_route) gram = a.entries().transpose() * a.entries();
  const double data_scale =
      detail::ordered_sum(y_sq) / static_cast<double>(n * slices);
  const double sigma_floor =
      kSigmaFloor * std::max(data_scale, cfg.sigma2_init);

  std::vector<double> alpha(m_count + 1, cfg.alpha_init);
  double sigma2 = cfg.sigma2_init;
  PriorFit fit{HyperParams(alpha, sigma2), 0, 0.0, {},
               StopReason::kMaxIterations};

  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    try {
      HyperParams hyper(alpha, sigma2);
      const Vector gamma = hyper.gamma_vector();
      AmplitudePosterior post;
      double ev;
      if (small_route) {
        EmStats st = em_stats(gram, aty, y_sq, gamma, sigma2, n);
        post.mean = std::move(st.mean);
        post.covariance = st.cov_diag.asDiagonal();
        ev = st.evidence;
      } else {
        post = posterior(a.entries(), values, gamma, sigma2);
        ev = evidence_direct(a.entries(), values, gamma, sigma2);
      }
      if (!std::isfinite(ev)) throw NumericalError("non-finite evidence");
      fit.evidence_trace.push_back(ev);
      if (observer) observer(EmIterate{it, hyper, post.mean, ev});

      std::vector<double> next =
          update_alpha(post, hyper, slices, cfg.update_variant);
      const double top = *std::max_element(next.begin(), next.end());
      fit.iterations_used = it;
      if (top == 0.0) {
        const double old_top = *std::max_element(alpha.begin(), alpha.end());
        std::fill(next.begin(), next.end(), kAlphaFloor * old_top);
        fit.final_epsilon = 1.0;
        fit.stop_reason = StopReason::kCollapsed;
        fit.hyper = HyperParams(std::move(next), sigma2);
        return fit;
      }
      for (double& v : next) v = std::max(v, kAlphaFloor * top);

      const std::size_t k =
          cfg.k_order ? *cfg.k_order
                      : default_k_order(next, cfg.k_order_ratio, n);
      const double next_sigma2 =
          std::max(update_sigma(a, y, next, std::min(k, m_count)),
                   sigma_floor);

      double diff = 0.0;
      double base = 0.0;
      for (std::size_t m = 0; m <= m_count; ++m) {
        diff += std::abs(next[m] - alpha[m]);
        base += std::abs(alpha[m]);
      }
      fit.final_epsilon = diff / base;
      alpha = std::move(next);
      sigma2 = next_sigma2;
      if (fit.final_epsilon < cfg.eps_min) {
        fit.stop_reason = StopReason::kConverged;
        break;
      }
    } catch (const NumericalError& e) {
      throw NumericalError("EM iteration " + std::to_string(it) + ": " +
                           e.what());
    }
  }
  fit.hyper = HyperParams(std::move(alpha), sigma2);
  return fit;
}

std::vector<std::size_t> kept_frequencies(std::span<const double> alpha,
                                          double threshold_ratio) {
  std::vector<std::size_t> kept{0};
  if (alpha.size() < 2) return kept;
  const double top = *std::max_element(alpha.begin() + 1, alpha.end());
  if (!(top > 0.0)) return kept;
  const double threshold = threshold_ratio * top;
  for (std::size_t m = 1; m < alpha.size(); ++m) {
    if (alpha[m] > 0.0 && alpha[m] >= threshold) kept.push_back(m);
  }
  return kept;
}

PrunedModel prune(const HyperParams& hyper, const TransferMatrix& a,
                  double threshold_ratio) {
  if (!(threshold_ratio >= 0.0 && threshold_ratio <= 1.0)) {
    throw ValidationError("threshold ratio must lie in [0, 1]");
  }
  if (hyper.oscillatory_count() != a.oscillatory_count()) {
    throw ValidationError("hyperparameters and transfer matrix disagree on M");
  }
  auto kept = kept_frequencies(hyper.alpha(), threshold_ratio);
  const std::size_t k = kept.size() - 1;

  std::vector<Eigen::Index> cols{0};
  for (std::size_t i = 1; i <= k; ++i) cols.push_back(a.cosine_column(kept[i]));
  for (std::size_t i = 1; i <= k; ++i) cols.push_back(a.sine_column(kept[i]));
  Matrix reduced = a.entries()(Eigen::all, cols);

  std::vector<double> alpha;
  for (std::size_t m : kept) alpha.push_back(hyper.alpha()[m]);
  FrequencyGrid fg = a.freq_grid().subset(kept);
  return PrunedModel{std::move(kept),
                     TransferMatrix(std::move(reduced), a.time_grid(),
                                    std::move(fg)),
                     HyperParams(std::move(alpha), hyper.sigma2())};
}

PrunedModel prune(const PriorFit& fit, const TransferMatrix& a,
                  double threshold_ratio) {
  if (fit.stop_reason == StopReason::kCollapsed) {
    // Only floor values are left; no frequency carries signal.
    std::vector<double> alpha(fit.hyper.alpha().begin(), fit.hyper.alpha().end());
    std::fill(alpha.begin() + 1, alpha.end(), 0.0);
    return prune(HyperParams(std::move(alpha), fit.hyper.sigma2()), a,
                 threshold_ratio);
  }
  return prune(fit.hyper, a, threshold_ratio);
}

}  // namespace sparselabel
