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

// NEON kernels for AArch64, where Advanced SIMD is architecturally
// guaranteed, so no runtime probe is needed.

#include "kernels_impl.hpp"

#if defined(__aarch64__)
#define SPARSELABEL_HAVE_NEON_KERNELS 1
#include <arm_neon.h>
#endif

#include <cmath>
#include <cstddef>

namespace sparselabel::simd::detail {

#if defined(SPARSELABEL_HAVE_NEON_KERNELS)
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_neon(const double* x, std::size_t n) {
  return dot_neon(x, x, n);
}

void column_dots_neon(const double* x, std::size_t ldx, const double* y,
                      std::size_t ldy, std::size_t rows, std::size_t cols,
                      double* out) {
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = dot_neon(x + j * ldx, y + j * ldy, rows);
  }
}

void trace_gains_neon(const double* v, std::size_t ldv, const double* w,
                      std::size_t ldw, const double* a, std::size_t lda,
                      std::size_t rows, std::size_t cols, double sigma2,
                      double* out) {
  std::size_t j = 0;
  const float64x2_t s2 = vdupq_n_f64(sigma2);
  for (; j + 2 <= cols; j += 2) {
    float64x2_t num = vdupq_n_f64(0.0);
    float64x2_t den = vdupq_n_f64(0.0);
    const double* v0 = v + j * ldv;
    const double* w0 = w + j * ldw;
    const double* a0 = a + j * lda;
    for (std::size_t r = 0; r < rows; ++r) {
      const double vb[2] = {v0[r], v0[ldv + r]};
      const double wb[2] = {w0[r], w0[ldw + r]};
      const double ab[2] = {a0[r], a0[lda + r]};
      const float64x2_t vv = vld1q_f64(vb);
      num = vfmaq_f64(num, vv, vld1q_f64(wb));
      den = vfmaq_f64(den, vld1q_f64(ab), vv);
    }
    vst1q_f64(out + j, vdivq_f64(num, vaddq_f64(s2, den)));
  }
  for (; j < cols; ++j) {
    const double num = dot_neon(v + j * ldv, w + j * ldw, rows);
    const double den = sigma2 + dot_neon(a + j * lda, v + j * ldv, rows);
    out[j] = num / den;
  }
}

void rank_one_update_neon(double* m, std::size_t ldm, const double* u,
                          std::size_t n, double scale) {
  const float64x2_t sc = vdupq_n_f64(scale);
  for (std::size_t j = 0; j < n; ++j) {
    double* col = m + j * ldm;
    const float64x2_t uj = vdupq_n_f64(u[j]);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
      const float64x2_t p = vmulq_f64(vld1q_f64(u + i), uj);
      vst1q_f64(col + i, vfmaq_f64(vld1q_f64(col + i), p, sc));
    }
    for (; i < n; ++i) col[i] = std::fma(u[i] * u[j], scale, col[i]);
  }
}

const KernelTable kNeonTable = {
    Isa::kNeon,        dot_neon,         sum_squares_neon,
    column_dots_neon,  trace_gains_neon, rank_one_update_neon,
};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace sparselabel::simd::detail
