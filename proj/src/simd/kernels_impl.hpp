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

#ifndef SPARSELABEL_SRC_SIMD_KERNELS_IMPL_HPP_
#define SPARSELABEL_SRC_SIMD_KERNELS_IMPL_HPP_

#include "sparselabel/simd/kernels.hpp"

namespace sparselabel::simd::detail {

// Defined in the per-ISA translation units. Null when not compiled in.
extern const KernelTable kScalarTable;
const KernelTable* avx2_table();
const KernelTable* neon_table();

}  // namespace sparselabel::simd::detail

#endif  // SPARSELABEL_SRC_SIMD_KERNELS_IMPL_HPP_
