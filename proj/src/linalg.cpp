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

#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sparselabel/error.hpp"

namespace sparselabel::detail {

double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

void check_condition(double rcond, const Vector& gamma, double sigma2,
                     const std::string& what) {
  if (rcond > 0.0 && 1.0 / rcond <= kMaxCondition) return;
  Eigen::Index worst = 0;
  if (gamma.size() > 0) gamma.maxCoeff(&worst);
  std::ostringstream msg;
  msg << what << ": ill-conditioned solve (condition estimate "
      << (rcond > 0.0 ? 1.0 / rcond : INFINITY) << " > " << kMaxCondition
      << "); largest prior variance at column " << worst << " = "
      << (gamma.size() > 0 ? gamma(worst) : 0.0) << " with sigma2 = " << sigma2;
  throw NumericalError(msg.str());
}

Matrix covariance_from_gram(const Matrix& gram, const Vector& gamma,
                            double sigma2) {
  const Eigen::Index d = gamma.size();
  const Vector g = gamma.cwiseSqrt();
  Matrix b = (g * g.transpose()).cwiseProduct(gram) / sigma2;
  b.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("posterior precision is not positive definite");
  }
  check_condition(llt.rcond(), gamma, sigma2, "posterior covariance");
  Matrix cov = llt.solve(Matrix::Identity(d, d));
  cov = g.asDiagonal() * cov * g.asDiagonal();
  symmetrize(cov);
  return cov;
}

void symmetrize(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
}

}  // namespace sparselabel::detail
