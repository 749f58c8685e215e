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

// AVX2 + FMA kernels. Compiled with per-function target attributes so the
// rest of the library stays baseline x86-64; only reached after a cpuid
// check in dispatch.cpp.

#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SPARSELABEL_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

#include <cstddef>

namespace sparselabel::simd::detail {

#if defined(SPARSELABEL_HAVE_AVX2_KERNELS)
namespace {

#define SL_AVX2 __attribute__((target("avx2,fma")))

SL_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

SL_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                           acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

SL_AVX2 double sum_squares_avx2(const double* x, std::size_t n) {
  return dot_avx2(x, x, n);
}

SL_AVX2 void column_dots_avx2(const double* x, std::size_t ldx,
                              const double* y, std::size_t ldy,
                              std::size_t rows, std::size_t cols,
                              double* out) {
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = dot_avx2(x + j * ldx, y + j * ldy, rows);
  }
}

// Short columns (the pruned model has D = 2K + 1, typically < 16) dominate,
// so the batch kernel vectorizes across four candidates at once and walks
// the rows with strided scalar loads.
SL_AVX2 void trace_gains_avx2(const double* v, std::size_t ldv,
                              const double* w, std::size_t ldw,
                              const double* a, std::size_t lda,
                              std::size_t rows, std::size_t cols,
                              double sigma2, double* out) {
  std::size_t j = 0;
  const __m256d s2 = _mm256_set1_pd(sigma2);
  for (; j + 4 <= cols; j += 4) {
    __m256d num = _mm256_setzero_pd();
    __m256d den = _mm256_setzero_pd();
    const double* v0 = v + j * ldv;
    const double* w0 = w + j * ldw;
    const double* a0 = a + j * lda;
    for (std::size_t r = 0; r < rows; ++r) {
      const __m256d vv = _mm256_set_pd(v0[3 * ldv + r], v0[2 * ldv + r],
                                       v0[ldv + r], v0[r]);
      const __m256d ww = _mm256_set_pd(w0[3 * ldw + r], w0[2 * ldw + r],
                                       w0[ldw + r], w0[r]);
      const __m256d aa = _mm256_set_pd(a0[3 * lda + r], a0[2 * lda + r],
                                       a0[lda + r], a0[r]);
      num = _mm256_fmadd_pd(vv, ww, num);
      den = _mm256_fmadd_pd(aa, vv, den);
    }
    _mm256_storeu_pd(out + j, _mm256_div_pd(num, _mm256_add_pd(s2, den)));
  }
  for (; j < cols; ++j) {
    const double num = dot_avx2(v + j * ldv, w + j * ldw, rows);
    const double den = sigma2 + dot_avx2(a + j * lda, v + j * ldv, rows);
    out[j] = num / den;
  }
}

SL_AVX2 void rank_one_update_avx2(double* m, std::size_t ldm, const double* u,
                                  std::size_t n, double scale) {
  const __m256d sc = _mm256_set1_pd(scale);
  for (std::size_t j = 0; j < n; ++j) {
    double* col = m + j * ldm;
    const __m256d uj = _mm256_set1_pd(u[j]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(u + i), uj);
      _mm256_storeu_pd(col + i,
                       _mm256_fmadd_pd(p, sc, _mm256_loadu_pd(col + i)));
    }
    for (; i < n; ++i) col[i] = __builtin_fma(u[i] * u[j], scale, col[i]);
  }
}

#undef SL_AVX2

const KernelTable kAvx2Table = {
    Isa::kAvx2,        dot_avx2,         sum_squares_avx2,
    column_dots_avx2,  trace_gains_avx2, rank_one_update_avx2,
};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2Table; }

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace sparselabel::simd::detail
