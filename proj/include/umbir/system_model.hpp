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

#ifndef UMBIR_SYSTEM_MODEL_HPP
#define UMBIR_SYSTEM_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/pulse_response.hpp"
#include "umbir/sparse.hpp"
#include "umbir/wave_geometry.hpp"

namespace umbir {

/// Regular 2D voxel lattice. Voxel (i_depth, i_height) is centred at
/// origin + pitch * (i_depth, i_height) and has flat index i_depth * n_height + i_height.
struct VoxelGrid {
  std::size_t n_depth = 1;
  std::size_t n_height = 1;
  double pitch = 0.0;
  Point2 origin;

  void validate() const {
    detail::require(pitch > 0.0, "voxel pitch must be positive");
    detail::require(n_depth >= 1 && n_height >= 1, "voxel grid must be non-empty");
  }

  std::size_t size() const { return n_depth * n_height; }
  std::size_t index(std::size_t i_depth, std::size_t i_height) const { return i_depth * n_height + i_height; }
  std::size_t depth_index(std::size_t v) const { return v / n_height; }
  std::size_t height_index(std::size_t v) const { return v % n_height; }

  Point2 center(std::size_t v) const {
    return {origin.depth + pitch * static_cast<double>(depth_index(v)),
            origin.height + pitch * static_cast<double>(height_index(v))};
  }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

/// K receivers x M samples, receiver-major. Sample m is taken at m / sample_rate
/// after firing.
struct Measurements {
  std::size_t receivers = 0;
  std::size_t samples = 0;
  double sample_rate = 0.0;
  double rotation_deg = 0.0;
  std::vector<double> data;

  void validate() const {
    detail::require(receivers >= 1 && samples >= 1, "measurements must be non-empty");
    detail::require(sample_rate > 0.0, "sample rate must be positive");
    detail::require_dims(data.size() == receivers * samples, "measurement payload size mismatch");
  }

  std::span<const double> trace(std::size_t k) const { return {data.data() + k * samples, samples}; }
};

/// Sparse operator from voxel reflectivities to receiver samples.
class SystemMatrix {
 public:
  SystemMatrix() = default;
  SystemMatrix(SparseMatrix matrix, std::size_t receivers, std::size_t samples, double sample_rate)
      : matrix_(std::move(matrix)), receivers_(receivers), samples_(samples), sample_rate_(sample_rate) {
    detail::require_dims(matrix_.rows() == receivers_ * samples_, "system matrix row count must equal K*M");
  }

  const SparseMatrix& matrix() const { return matrix_; }
  std::size_t receivers() const { return receivers_; }
  std::size_t samples() const { return samples_; }
  std::size_t rows() const { return matrix_.rows(); }
  std::size_t cols() const { return matrix_.cols(); }
  double sample_rate() const { return sample_rate_; }

 private:
  SparseMatrix matrix_;
  std::size_t receivers_ = 0;
  std::size_t samples_ = 0;
  double sample_rate_ = 0.0;
};

/// One unit-norm direct-arrival template per receiver, each supported only
/// on that receiver's block of samples.
class DirectArrivalBasis {
 public:
  DirectArrivalBasis() = default;

  /// `templates` holds K rows of M samples; each row is normalized.
  DirectArrivalBasis(std::size_t receivers, std::size_t samples, std::vector<double> templates)
      : receivers_(receivers), samples_(samples), templates_(std::move(templates)) {
    detail::require_dims(templates_.size() == receivers_ * samples_, "template block size mismatch");
    for (std::size_t k = 0; k < receivers_; ++k) {
      auto col = mutable_column(k);
      double n2 = 0.0;
      for (double v : col) n2 += v * v;
      detail::require(n2 > 0.0, "direct-arrival template " + std::to_string(k) + " is empty");
      const double inv = 1.0 / std::sqrt(n2);
      for (double& v : col) v *= inv;
    }
  }

  std::size_t receivers() const { return receivers_; }
  std::size_t samples() const { return samples_; }

  /// Non-zero block of column k (rows k*M .. k*M + M - 1).
  std::span<const double> column(std::size_t k) const { return {templates_.data() + k * samples_, samples_}; }

  /// y += D g
  void apply_add(std::span<const double> g, std::span<double> y) const {
    detail::require_dims(g.size() == receivers_ && y.size() == receivers_ * samples_, "D g: dimension mismatch");
    for (std::size_t k = 0; k < receivers_; ++k) {
      const auto col = column(k);
      for (std::size_t m = 0; m < samples_; ++m) y[k * samples_ + m] += g[k] * col[m];
    }
  }

  /// D^T y
  std::vector<double> correlate(std::span<const double> y) const {
    detail::require_dims(y.size() == receivers_ * samples_, "D^T y: dimension mismatch");
    std::vector<double> g(receivers_, 0.0);
    for (std::size_t k = 0; k < receivers_; ++k) {
      const auto col = column(k);
      for (std::size_t m = 0; m < samples_; ++m) g[k] += col[m] * y[k * samples_ + m];
    }
    return g;
  }

  /// Least-squares gains (D^T D)^{-1} D^T y; D^T D = I by construction.
  std::vector<double> fit(std::span<const double> y) const { return correlate(y); }

 private:
  std::span<double> mutable_column(std::size_t k) { return {templates_.data() + k * samples_, samples_}; }

  std::size_t receivers_ = 0;
  std::size_t samples_ = 0;
  std::vector<double> templates_;
};

namespace detail {

/// Adds amplitude * h(t_m - delay) to `out` (samples on the receiver clock),
/// linearly interpolating between response samples. `limit` is t0 * fs.
template <typename Sink>
void place_delayed(std::span<const double> h, double limit, double delay_samples, std::size_t n_samples,
                   Sink&& sink) {
  const double first = std::ceil(delay_samples);
  if (first < 0.0) throw ValidationError("negative delay");
  for (auto m = static_cast<std::size_t>(first); m < n_samples; ++m) {
    const double u = static_cast<double>(m) - delay_samples;
    if (u >= limit) break;
    const auto i = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(i);
    const double a = i < h.size() ? h[i] : 0.0;
    const double b = i + 1 < h.size() ? h[i + 1] : 0.0;
    const double v = (1.0 - f) * a + f * b;
    if (v != 0.0) sink(m, v);
  }
}

inline std::size_t worker_count(std::size_t requested, std::size_t work) {
  std::size_t n = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return std::max<std::size_t>(1, std::min(n, work));
}

}  // namespace detail

/// Largest attenuation exponent gamma(v) over every reachable
/// (source, voxel, receiver) triple of the grid.
inline double max_gamma(const VoxelGrid& grid, const TransducerGeometry& geom, const LayerStack& stack) {
  double g = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point2 voxel = grid.center(v);
    for (const auto& src : geom.sources)
      for (const auto& rcv : geom.receivers) {
        try {
          g = std::max(g, echo_geometry(src, voxel, rcv, stack, geom.firing_tilt).gamma);
        } catch (const Unreachable&) {
        }
      }
  }
  return g;
}

/// Column of A for a voxel at `voxel`, as (row, value) pairs sorted by row.
inline std::vector<std::pair<std::size_t, double>> system_column(const Point2& voxel, const TransducerGeometry& geom,
                                                                 const LayerStack& stack, const ResponseTable& table,
                                                                 double beta, std::size_t samples) {
  std::vector<std::pair<std::size_t, double>> entries;
  std::vector<double> h(table.response_length());
  const double fs = table.sample_rate();
  const double limit = table.window_length() * fs;
  const double tau = stack.path_transmittance();
  for (std::size_t k = 0; k < geom.receivers.size(); ++k) {
    for (const auto& src : geom.sources) {
      EchoGeometry echo;
      try {
        echo = echo_geometry(src, voxel, geom.receivers[k], stack, geom.firing_tilt);
      } catch (const Unreachable&) {
        continue;
      }
      const double weight = apodization(echo.beam_angle_tx, echo.beam_angle_rx, beta);
      if (weight == 0.0) continue;
      table.lookup_into(echo.gamma, h);
      const double amp = tau * weight;
      detail::place_delayed(h, limit, echo.delay * fs, samples,
                            [&](std::size_t m, double v) { entries.emplace_back(k * samples + m, amp * v); });
    }
  }
  if (geom.sources.size() > 1) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto& e : entries) {
      if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
      else merged.push_back(e);
    }
    entries = std::move(merged);
  }
  return entries;
}

/// Assembles A. Entry (k*M + m, v) is tau * phi_beta(v) * h~(gamma(v), m/fs - T(v)),
/// summed over sources. Columns are built in parallel over voxel blocks.
inline SystemMatrix build_system_matrix(const VoxelGrid& grid, const TransducerGeometry& geom, const LayerStack& stack,
                                        const ResponseTable& table, double beta, std::size_t samples,
                                        double sample_rate, std::size_t threads = 0) {
  grid.validate();
  geom.validate();
  detail::require(beta >= 0.0, "beta must be non-negative");
  detail::require(samples >= 1, "measurement window must hold at least one sample");
  if (std::abs(sample_rate - table.sample_rate()) > 1e-9 * sample_rate)
    throw ValidationError("response table and measurement clock use different sample rates");
  for (std::size_t v = 0; v < grid.size(); ++v)
    detail::require(stack.in_image_layer(grid.center(v).depth), "voxel grid extends outside the image layer");

  const std::size_t n_vox = grid.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(n_vox);
  const std::size_t workers = detail::worker_count(threads, n_vox);
  auto job = [&](std::size_t w) {
    for (std::size_t v = w; v < n_vox; v += workers)
      columns[v] = system_column(grid.center(v), geom, stack, table, beta, samples);
  };
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(job, w);
  }

  std::vector<std::size_t> col_ptr(n_vox + 1, 0);
  for (std::size_t v = 0; v < n_vox; ++v) col_ptr[v + 1] = col_ptr[v] + columns[v].size();
  std::vector<SparseMatrix::Index> row_idx(col_ptr.back());
  std::vector<double> values(col_ptr.back());
  for (std::size_t v = 0; v < n_vox; ++v) {
    for (std::size_t j = 0; j < columns[v].size(); ++j) {
      row_idx[col_ptr[v] + j] = static_cast<SparseMatrix::Index>(columns[v][j].first);
      values[col_ptr[v] + j] = columns[v][j].second;
    }
    std::vector<std::pair<std::size_t, double>>().swap(columns[v]);
  }
  const std::size_t receivers = geom.receivers.size();
  return SystemMatrix(SparseMatrix(receivers * samples, n_vox, std::move(col_ptr), std::move(row_idx), std::move(values)),
                      receivers, samples, sample_rate);
}

/// Column k is the unattenuated response delayed by the straight
/// source -> receiver k time through the first layer, unit-normalized.
inline DirectArrivalBasis build_direct_arrival_basis(const TransducerGeometry& geom, const LayerStack& stack,
                                                     const ResponseTable& table, std::size_t samples) {
  geom.validate();
  const std::size_t receivers = geom.receivers.size();
  std::vector<double> templates(receivers * samples, 0.0);
  const double fs = table.sample_rate();
  const double limit = table.window_length() * fs;
  const auto h = table.row(0);
  for (std::size_t k = 0; k < receivers; ++k) {
    for (const auto& src : geom.sources) {
      const double delay = std::abs(geom.receivers[k].height - src.height) / stack[0].speed;
      detail::place_delayed(h, limit, delay * fs, samples,
                            [&](std::size_t m, double v) { templates[k * samples + m] += v; });
    }
  }
  return DirectArrivalBasis(receivers, samples, std::move(templates));
}

/// y = A x + D g (noiseless).
inline std::vector<double> forward_project(const SystemMatrix& A, std::span<const double> x,
                                           const DirectArrivalBasis& D, std::span<const double> g) {
  detail::require_dims(D.receivers() * D.samples() == A.rows(), "A and D row counts differ");
  std::vector<double> y(A.rows(), 0.0);
  A.matrix().multiply_add(x, y);
  D.apply_add(g, y);
  return y;
}

inline std::vector<double> forward_project(const SystemMatrix& A, std::span<const double> x) {
  std::vector<double> y(A.rows(), 0.0);
  A.matrix().multiply_add(x, y);
  return y;
}

/// A^T r
inline std::vector<double> adjoint_project(const SystemMatrix& A, std::span<const double> r) {
  std::vector<double> out(A.cols(), 0.0);
  A.matrix().transpose_multiply(r, out);
  return out;
}

}  // namespace umbir

#endif  // UMBIR_SYSTEM_MODEL_HPP
