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

// Dense double-precision kernels used on the hot paths of the planner and the
// EM loop. Each kernel has a portable scalar reference implementation and,
// where the CPU supports it, an AVX2/FMA or NEON variant. The variant is
// picked once at first use; SPARSELABEL_ISA=scalar|avx2|neon overrides it.
//
// All matrices are column-major with an explicit leading dimension.

#ifndef SPARSELABEL_SIMD_KERNELS_HPP_
#define SPARSELABEL_SIMD_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace sparselabel::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);

  // sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);

  // out[j] = sum_r x(r, j) * y(r, j) for j < cols.
  void (*column_dots)(const double* x, std::size_t ldx, const double* y,
                      std::size_t ldy, std::size_t rows, std::size_t cols,
                      double* out);

  // Trace-objective marginal gains for a batch of candidates. Column j of
  // v holds D^{-1} a_j, of w holds A^T A D^{-1} a_j and of a holds a_j.
  // out[j] = <v_j, w_j> / (sigma2 + <a_j, v_j>).
  void (*trace_gains)(const double* v, std::size_t ldv, const double* w,
                      std::size_t ldw, const double* a, std::size_t lda,
                      std::size_t rows, std::size_t cols, double sigma2,
                      double* out);

  // m += scale * u u^T on an n x n block (both triangles).
  void (*rank_one_update)(double* m, std::size_t ldm, const double* u,
                          std::size_t n, double scale);
};

const KernelTable& scalar_kernels();

// Kernels for a specific ISA, or nullptr if the running CPU lacks it or the
// binary was built without it.
const KernelTable* kernels_for(Isa isa);

// ISAs usable on this machine, scalar first.
std::vector<Isa> available_isas();

// The table selected for this process.
const KernelTable& active_kernels();

// Convenience wrappers over active_kernels().
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active_kernels().dot(x.data(), y.data(), x.size());
}

inline double sum_squares(std::span<const double> x) {
  return active_kernels().sum_squares(x.data(), x.size());
}

}  // namespace sparselabel::simd

#endif  // SPARSELABEL_SIMD_KERNELS_HPP_
