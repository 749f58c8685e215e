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

// Internal numerical helpers shared by the fitting and planning modules.

#ifndef SPARSELABEL_SRC_LINALG_HPP_
#define SPARSELABEL_SRC_LINALG_HPP_

#include <string>
#include <vector>

#include "sparselabel/core_model.hpp"

namespace sparselabel::detail {

// Largest acceptable condition estimate for the posterior solves.
inline constexpr double kMaxCondition = 1e14;

// Sum that does not depend on the order of the inputs: the terms are sorted
// before accumulation, so permuting slices gives bit-identical results.
double ordered_sum(std::vector<double> terms);

// Throws NumericalError if 1 / rcond exceeds kMaxCondition. The message names
// the largest prior variance, the usual culprit in the scaled solve.
void check_condition(double rcond, const Vector& gamma, double sigma2,
                     const std::string& what);

// Sigma = diag(g) (I + diag(g) G diag(g) / sigma2)^{-1} diag(g), g = sqrt(gamma),
// G = A_J^T A_J. The scaled form keeps the solve well conditioned even when
// some gamma are tiny.
Matrix covariance_from_gram(const Matrix& gram, const Vector& gamma,
                            double sigma2);

// Symmetrize in place: m <- (m + m^T) / 2.
void symmetrize(Matrix& m);

}  // namespace sparselabel::detail

#endif  // SPARSELABEL_SRC_LINALG_HPP_
