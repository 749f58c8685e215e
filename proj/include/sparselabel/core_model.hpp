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

// Time and frequency grids, the real transfer matrix of the harmonic model
// and the data containers shared by the fitting and planning code.
//
// The model for L slices observed at N equidistant times is Y = A X + E with
// A = [1 | cos(2 pi f_m t_k) | -sin(2 pi f_m t_k)], m = 1..M.

#ifndef SPARSELABEL_CORE_MODEL_HPP_
#define SPARSELABEL_CORE_MODEL_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sparselabel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Strictly increasing, equidistant sample times in seconds.
class TimeGrid {
 public:
  // Validates monotonicity and spacing 1/frame_rate to 1e-12 relative.
  TimeGrid(std::vector<double> times, double frame_rate);

  std::size_t size() const { return times_.size(); }
  double frame_rate() const { return frame_rate_; }
  std::span<const double> times() const { return times_; }
  double operator[](std::size_t k) const { return times_[k]; }

 private:
  std::vector<double> times_;
  double frame_rate_;
};

// f_0 = 0 followed by strictly increasing non-negative frequencies in hertz.
// Uniform spacing is not required.
class FrequencyGrid {
 public:
  explicit FrequencyGrid(std::vector<double> frequencies);

  std::size_t size() const { return freqs_.size(); }
  // Number of non-DC frequencies (M).
  std::size_t oscillatory_count() const { return freqs_.size() - 1; }
  std::span<const double> frequencies() const { return freqs_; }
  double operator[](std::size_t m) const { return freqs_[m]; }

  // Grid restricted to the given indices; index 0 must be present.
  FrequencyGrid subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> freqs_;
};

// N x (2M + 1) design matrix. Column 0 is ones; column m holds the cosines
// of f_m and column m + M the negated sines.
class TransferMatrix {
 public:
  TransferMatrix(Matrix entries, TimeGrid time_grid, FrequencyGrid freq_grid);

  const Matrix& entries() const { return entries_; }
  const TimeGrid& time_grid() const { return time_grid_; }
  const FrequencyGrid& freq_grid() const { return freq_grid_; }

  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  std::size_t oscillatory_count() const { return freq_grid_.oscillatory_count(); }

  Eigen::Index cosine_column(std::size_t m) const {
    return static_cast<Eigen::Index>(m);
  }
  Eigen::Index sine_column(std::size_t m) const {
    return static_cast<Eigen::Index>(m + oscillatory_count());
  }

 private:
  Matrix entries_;
  TimeGrid time_grid_;
  FrequencyGrid freq_grid_;
};

// Ordered set of time indices, insertion order preserved, no duplicates.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::size_t> indices);

  // Throws ValidationError on a duplicate.
  void insert(std::size_t index);
  void pop_back();
  bool contains(std::size_t index) const;

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }

  // Throws ValidationError if any index is >= n.
  void validate(std::size_t n) const;

  bool operator==(const LabelSet&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

// N x L measurements, one column per slice, sharing one time grid.
class Dataset {
 public:
  // Empty slice_ids are replaced by "s0", "s1", ...
  Dataset(Matrix values, TimeGrid time_grid,
          std::vector<std::string> slice_ids = {});

  const Matrix& values() const { return values_; }
  const TimeGrid& time_grid() const { return time_grid_; }
  const std::vector<std::string>& slice_ids() const { return slice_ids_; }
  std::size_t slice_count() const {
    return static_cast<std::size_t>(values_.cols());
  }
  std::size_t sample_count() const { return time_grid_.size(); }

  // The same data with slice `l` removed. Requires at least two slices.
  Dataset without_slice(std::size_t l) const;

 private:
  Matrix values_;
  TimeGrid time_grid_;
  std::vector<std::string> slice_ids_;
};

// times[k] = k / frame_rate for k < n.
TimeGrid build_time_grid(std::size_t n, double frame_rate);

// frequencies[m] = m * spacing for m <= m_max.
FrequencyGrid build_frequency_grid(std::size_t m_max, double spacing);

TransferMatrix build_transfer_matrix(const TimeGrid& tg,
                                     const FrequencyGrid& fg);

// Row i of the result is row labels[i] of `a`.
Matrix restrict_rows(const Matrix& a, const LabelSet& labels);
Matrix restrict_rows(const TransferMatrix& a, const LabelSet& labels);

}  // namespace sparselabel

#endif  // SPARSELABEL_CORE_MODEL_HPP_
