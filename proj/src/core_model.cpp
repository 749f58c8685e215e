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

#include "sparselabel/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "sparselabel/error.hpp"

namespace sparselabel {

TimeGrid::TimeGrid(std::vector<double> times, double frame_rate)
    : times_(std::move(times)), frame_rate_(frame_rate) {
  if (!(frame_rate_ > 0.0) || !std::isfinite(frame_rate_)) {
    throw ValidationError("frame rate must be positive and finite");
  }
  if (times_.empty()) throw ValidationError("time grid must not be empty");
  const double step = 1.0 / frame_rate_;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k])) {
      throw ValidationError("non-finite time at index " + std::to_string(k));
    }
    if (k == 0) continue;
    const double dt = times_[k] - times_[k - 1];
    if (!(dt > 0.0)) {
      throw ValidationError("times not strictly increasing at index " +
                            std::to_string(k));
    }
    if (std::abs(dt - step) > 1e-12 * step * std::max(1.0, std::abs(times_[k]) * frame_rate_)) {
      throw ValidationError("times not equidistant at index " +
                            std::to_string(k));
    }
  }
}

FrequencyGrid::FrequencyGrid(std::vector<double> frequencies)
    : freqs_(std::move(frequencies)) {
  if (freqs_.empty() || freqs_[0] != 0.0) {
    throw ValidationError("frequency grid must start at 0 Hz");
  }
  for (std::size_t m = 1; m < freqs_.size(); ++m) {
    if (!std::isfinite(freqs_[m]) || !(freqs_[m] > freqs_[m - 1])) {
      throw ValidationError("frequencies must be finite and strictly "
                            "increasing (index " + std::to_string(m) + ")");
    }
  }
}

FrequencyGrid FrequencyGrid::subset(
    std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t m : indices) {
    if (m >= freqs_.size()) {
      throw ValidationError("frequency index " + std::to_string(m) +
                            " out of range");
    }
    out.push_back(freqs_[m]);
  }
  return FrequencyGrid(std::move(out));
}

TransferMatrix::TransferMatrix(Matrix entries, TimeGrid time_grid,
                               FrequencyGrid freq_grid)
    : entries_(std::move(entries)),
      time_grid_(std::move(time_grid)),
      freq_grid_(std::move(freq_grid)) {
  const auto n = static_cast<Eigen::Index>(time_grid_.size());
  const auto d = static_cast<Eigen::Index>(2 * oscillatory_count() + 1);
  if (entries_.rows() != n || entries_.cols() != d) {
    throw ValidationError("transfer matrix shape does not match its grids");
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (entries_(k, 0) != 1.0) {
      throw ValidationError("transfer matrix column 0 must be all ones");
    }
  }
}

LabelSet::LabelSet(std::vector<std::size_t> indices) {
  indices_.reserve(indices.size());
  for (std::size_t i : indices) insert(i);
}

void LabelSet::insert(std::size_t index) {
  if (contains(index)) {
    throw ValidationError("duplicate label index " + std::to_string(index));
  }
  indices_.push_back(index);
}

void LabelSet::pop_back() {
  if (indices_.empty()) throw ValidationError("label set is empty");
  indices_.pop_back();
}

bool LabelSet::contains(std::size_t index) const {
  return std::find(indices_.begin(), indices_.end(), index) != indices_.end();
}

void LabelSet::validate(std::size_t n) const {
  for (std::size_t i : indices_) {
    if (i >= n) {
      throw ValidationError("label index " + std::to_string(i) +
                            " out of range for " + std::to_string(n) +
                            " samples");
    }
  }
}

Dataset::Dataset(Matrix values, TimeGrid time_grid,
                 std::vector<std::string> slice_ids)
    : values_(std::move(values)),
      time_grid_(std::move(time_grid)),
      slice_ids_(std::move(slice_ids)) {
  if (values_.cols() < 1) throw ValidationError("dataset needs >= 1 slice");
  if (static_cast<std::size_t>(values_.rows()) != time_grid_.size()) {
    throw ValidationError("dataset rows do not match the time grid");
  }
  if (!values_.allFinite()) {
    throw ValidationError("dataset contains non-finite values");
  }
  if (slice_ids_.empty()) {
    for (Eigen::Index l = 0; l < values_.cols(); ++l) {
      slice_ids_.push_back("s" + std::to_string(l));
    }
  }
  if (slice_ids_.size() != static_cast<std::size_t>(values_.cols())) {
    throw ValidationError("slice id count does not match column count");
  }
}

Dataset Dataset::without_slice(std::size_t l) const {
  if (slice_count() < 2) {
    throw ValidationError("cannot drop the only slice of a dataset");
  }
  if (l >= slice_count()) throw ValidationError("slice index out of range");
  Matrix rest(values_.rows(), values_.cols() - 1);
  std::vector<std::string> ids;
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < slice_count(); ++j) {
    if (j == l) continue;
    rest.col(c++) = values_.col(static_cast<Eigen::Index>(j));
    ids.push_back(slice_ids_[j]);
  }
  return Dataset(std::move(rest), time_grid_, std::move(ids));
}

TimeGrid build_time_grid(std::size_t n, double frame_rate) {
  if (n < 1) throw ValidationError("time grid needs n >= 1");
  if (!(frame_rate > 0.0)) throw ValidationError("frame rate must be > 0");
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) {
    times[k] = static_cast<double>(k) / frame_rate;
  }
  return TimeGrid(std::move(times), frame_rate);
}

FrequencyGrid build_frequency_grid(std::size_t m_max, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ValidationError("frequency spacing must be positive and finite");
  }
  std::vector<double> f(m_max + 1);
  for (std::size_t m = 0; m <= m_max; ++m) {
    f[m] = static_cast<double>(m) * spacing;
  }
  return FrequencyGrid(std::move(f));
}

TransferMatrix build_transfer_matrix(const TimeGrid& tg,
                                     const FrequencyGrid& fg) {
  const auto n = static_cast<Eigen::Index>(tg.size());
  const std::size_t m_count = fg.oscillatory_count();
  const auto big_m = static_cast<Eigen::Index>(m_count);
  Matrix a(n, 2 * big_m + 1);
  a.col(0).setOnes();
  for (std::size_t m = 1; m <= m_count; ++m) {
    const double omega = 2.0 * std::numbers::pi * fg[m];
    const auto c = static_cast<Eigen::Index>(m);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double phase = omega * tg[static_cast<std::size_t>(k)];
      a(k, c) = std::cos(phase);
      a(k, c + big_m) = -std::sin(phase);
    }
  }
  return TransferMatrix(std::move(a), tg, fg);
}

Matrix restrict_rows(const Matrix& a, const LabelSet& labels) {
  labels.validate(static_cast<std::size_t>(a.rows()));
  Matrix out(static_cast<Eigen::Index>(labels.size()), a.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        a.row(static_cast<Eigen::Index>(labels[i]));
  }
  return out;
}

Matrix restrict_rows(const TransferMatrix& a, const LabelSet& labels) {
  return restrict_rows(a.entries(), labels);
}

}  // namespace sparselabel
