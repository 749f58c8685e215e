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

#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "kernels_impl.hpp"
#include "sparselabel/simd/kernels.hpp"

namespace sparselabel::simd {
namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select_kernels() {
  const KernelTable* best = &detail::kScalarTable;
  for (Isa isa : available_isas()) best = kernels_for(isa);

  if (const char* env = std::getenv("SPARSELABEL_ISA")) {
    const std::string_view want(env);
    for (Isa isa : available_isas()) {
      if (isa_name(isa) == want) return *kernels_for(isa);
    }
  }
  return *best;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return detail::kScalarTable; }

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &detail::kScalarTable;
    case Isa::kAvx2:
      return cpu_has_avx2() ? detail::avx2_table() : nullptr;
    case Isa::kNeon:
      return detail::neon_table();
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace sparselabel::simd
