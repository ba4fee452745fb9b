/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The umbir authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UMBIR_SPARSE_HPP
#define UMBIR_SPARSE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "umbir/errors.hpp"

namespace umbir {

/// Sparse matrix stored column-compressed with a row-compressed copy.
/// Columns drive coordinate descent and adjoints; rows drive forward products.
class SparseMatrix {
 public:
  using Index = std::uint32_t;

  SparseMatrix() = default;

  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
               std::vector<Index> row_idx, std::vector<double> values)
      : rows_(rows), cols_(cols), col_ptr_(std::move(col_ptr)), row_idx_(std::move(row_idx)),
        values_(std::move(values)) {
    detail::require_dims(col_ptr_.size() == cols_ + 1, "column pointer length must be cols + 1");
    detail::require_dims(row_idx_.size() == values_.size() && col_ptr_.back() == values_.size(),
                         "inconsistent sparse arrays");
    for (Index r : row_idx_) detail::require_dims(r < rows_, "row index out of range");
    build_rows();
  }

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<1>(a), std::get<0>(a)) < std::tie(std::get<1>(b), std::get<0>(b));
    });
    std::vector<std::size_t> col_ptr(cols + 1, 0);
    std::vector<Index> row_idx;
    std::vector<double> values;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      const auto [r, c, v] = triplets[i];
      detail::require_dims(r < rows && c < cols, "triplet index out of range");
      if (!row_idx.empty() && i > 0 && std::get<1>(triplets[i - 1]) == c && row_idx.back() == r) {
        values.back() += v;
        continue;
      }
      row_idx.push_back(static_cast<Index>(r));
      values.push_back(v);
      ++col_ptr[c + 1];
    }
    for (std::size_t c = 0; c < cols; ++c) col_ptr[c + 1] += col_ptr[c];
    return SparseMatrix(rows, cols, std::move(col_ptr), std::move(row_idx), std::move(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const Index> column_rows(std::size_t c) const {
    return {row_idx_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }
  std::span<const double> column_values(std::size_t c) const {
    return {values_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }
  std::span<const Index> row_cols(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {row_values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  std::span<const std::size_t> col_ptr() const { return col_ptr_; }
  std::span<const Index> row_indices() const { return row_idx_; }
  std::span<const double> values() const { return values_; }

  double column_norm2(std::size_t c) const {
    double s = 0.0;
    for (double v : column_values(c)) s += v * v;
    return s;
  }

  /// y += A x
  void multiply_add(std::span<const double> x, std::span<double> y) const {
    detail::require_dims(x.size() == cols_ && y.size() == rows_, "multiply: dimension mismatch");
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto cols = row_cols(r);
      const auto vals = row_values(r);
      double acc = 0.0;
      for (std::size_t j = 0; j < cols.size(); ++j) acc += vals[j] * x[cols[j]];
      y[r] += acc;
    }
  }

  /// out = A^T r
  void transpose_multiply(std::span<const double> r, std::span<double> out) const {
    detail::require_dims(r.size() == rows_ && out.size() == cols_, "transpose multiply: dimension mismatch");
    for (std::size_t c = 0; c < cols_; ++c) {
      const auto rows = column_rows(c);
      const auto vals = column_values(c);
      double acc = 0.0;
      for (std::size_t j = 0; j < rows.size(); ++j) acc += vals[j] * r[rows[j]];
      out[c] = acc;
    }
  }

 private:
  void build_rows() {
    row_ptr_.assign(rows_ + 1, 0);
    for (Index r : row_idx_) ++row_ptr_[r + 1];
    for (std::size_t r = 0; r < rows_; ++r) row_ptr_[r + 1] += row_ptr_[r];
    col_idx_.resize(values_.size());
    row_values_.resize(values_.size());
    std::vector<std::size_t> next(row_ptr_.begin(), row_ptr_.end() - 1);
    for (std::size_t c = 0; c < cols_; ++c) {
      for (std::size_t j = col_ptr_[c]; j < col_ptr_[c + 1]; ++j) {
        const std::size_t slot = next[row_idx_[j]]++;
        col_idx_[slot] = static_cast<Index>(c);
        row_values_[slot] = values_[j];
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<Index> row_idx_;
  std::vector<double> values_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> row_values_;
};

}  // namespace umbir

#endif  // UMBIR_SPARSE_HPP
