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

// Reference kernels. Plain loops, left-to-right accumulation.

#include <cstddef>

#include "kernels_impl.hpp"

namespace sparselabel::simd::detail {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void column_dots_scalar(const double* x, std::size_t ldx, const double* y,
                        std::size_t ldy, std::size_t rows, std::size_t cols,
                        double* out) {
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = dot_scalar(x + j * ldx, y + j * ldy, rows);
  }
}

void trace_gains_scalar(const double* v, std::size_t ldv, const double* w,
                        std::size_t ldw, const double* a, std::size_t lda,
                        std::size_t rows, std::size_t cols, double sigma2,
                        double* out) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double num = dot_scalar(v + j * ldv, w + j * ldw, rows);
    const double den = sigma2 + dot_scalar(a + j * lda, v + j * ldv, rows);
    out[j] = num / den;
  }
}

void rank_one_update_scalar(double* m, std::size_t ldm, const double* u,
                            std::size_t n, double scale) {
  // (u_i * u_j) * scale is bitwise symmetric in (i, j).
  for (std::size_t j = 0; j < n; ++j) {
    double* col = m + j * ldm;
    for (std::size_t i = 0; i < n; ++i) col[i] += (u[i] * u[j]) * scale;
  }
}

}  // namespace

const KernelTable kScalarTable = {
    Isa::kScalar,         dot_scalar,         sum_squares_scalar,
    column_dots_scalar,   trace_gains_scalar, rank_one_update_scalar,
};

}  // namespace sparselabel::simd::detail
