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

#ifndef UMBIR_PRIOR_MODEL_HPP
#define UMBIR_PRIOR_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/system_model.hpp"

namespace umbir {

/// Parameters of the q-generalized Gaussian MRF potential and of its
/// depth-dependent scale.
struct QGGMRFParams {
  double p = 1.1;
  double q = 2.0;
  double T = 0.01;
  double sigma0 = 5.0;
  double m = 0.1;
  double a = 1.0;

  /// Convexity with continuous first and second derivatives needs 1 < p < q = 2.
  void validate() const {
    detail::require(q == 2.0, "prior q must equal 2");
    detail::require(p > 1.0 && p < q, "prior p must satisfy 1 < p < q");
    detail::require(T > 0.0, "prior T must be positive");
    detail::require(sigma0 > 0.0, "prior sigma0 must be positive");
    detail::require(m > 0.0, "prior m must be positive");
    detail::require(a > 0.0, "prior a must be positive");
  }

  friend bool operator==(const QGGMRFParams&, const QGGMRFParams&) = default;
};

/// m_s = 1 + (m - 1) (depth / max_depth)^a
inline double depth_weight(double depth, double max_depth, double m, double a) {
  detail::require(max_depth > 0.0, "max depth must be positive");
  detail::require(depth >= 0.0 && depth <= max_depth * (1.0 + 1e-12), "depth outside [0, max_depth]");
  return 1.0 + (m - 1.0) * std::pow(depth / max_depth, a);
}

inline double pair_sigma(double m_s, double m_r, double sigma0) { return sigma0 * std::sqrt(m_s * m_r); }

/// rho(delta) = |delta|^p / (p sigma^p) * u / (1 + u),  u = |delta / (T sigma)|^(q - p)
inline double potential(double delta, double sigma, const QGGMRFParams& prm) {
  const double ad = std::abs(delta);
  if (ad == 0.0) return 0.0;
  const double u = std::pow(ad / (prm.T * sigma), prm.q - prm.p);
  return std::pow(ad, prm.p) / (prm.p * std::pow(sigma, prm.p)) * (u / (1.0 + u));
}

/// rho'(delta) / (2 delta), with its finite limit at delta = 0. This is the
/// curvature of the symmetric quadratic majorizer of rho at delta.
inline double influence_coefficient(double delta, double sigma, const QGGMRFParams& prm) {
  const double ad = std::abs(delta);
  const double ts = prm.T * sigma;
  if (ad == 0.0) return std::pow(ts, prm.p - 2.0) / (2.0 * std::pow(sigma, prm.p)) * (prm.q / prm.p);
  const double u = std::pow(ad / ts, prm.q - prm.p);
  // |d|^(p-2) u is rewritten as |d|^(q-2) (T sigma)^(p-q) to stay finite near 0.
  const double lead = std::pow(ad, prm.q - 2.0) * std::pow(ts, prm.p - prm.q) / (2.0 * std::pow(sigma, prm.p));
  return lead / (1.0 + u) * (1.0 + (prm.q - prm.p) / (prm.p * (1.0 + u)));
}

inline double potential_derivative(double delta, double sigma, const QGGMRFParams& prm) {
  return 2.0 * delta * influence_coefficient(delta, sigma, prm);
}

/// Symmetric pairwise cliques with weights b_{s,r}.
class NeighborhoodSystem {
 public:
  struct Clique {
    std::uint32_t s;
    std::uint32_t r;
    double weight;
  };

  NeighborhoodSystem() = default;
  NeighborhoodSystem(std::size_t n_voxels, std::vector<Clique> cliques)
      : n_(n_voxels), cliques_(std::move(cliques)) {
    for (const auto& c : cliques_) {
      detail::require(c.s < n_ && c.r < n_ && c.s != c.r, "clique indices out of range");
      detail::require(c.weight > 0.0, "clique weights must be positive");
    }
  }

  /// 8-connected cliques with raw weight 1 axial and 1/sqrt(2) diagonal,
  /// scaled symmetrically, b_{s,r} = d_s w_{s,r} d_r, so that every voxel's
  /// weights sum to 1. Far from the border d is constant and b reduces to the
  /// plain per-voxel normalization. Grids one voxel thick admit no such
  /// scaling; there b_{s,r} is the mean of the two one-sided normalizations.
  static NeighborhoodSystem eight_connected(const VoxelGrid& grid) {
    const std::size_t nd = grid.n_depth;
    const std::size_t nh = grid.n_height;
    auto inside = [&](long d, long h) { return d >= 0 && h >= 0 && d < long(nd) && h < long(nh); };
    auto raw = [](int dd, int dh) { return (dd != 0 && dh != 0) ? 1.0 / std::numbers::sqrt2 : 1.0; };

    std::vector<Clique> cliques;
    // Forward half of the stencil so each unordered pair appears once.
    constexpr int fwd[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
    for (std::size_t d = 0; d < nd; ++d)
      for (std::size_t h = 0; h < nh; ++h)
        for (const auto& o : fwd) {
          const long d2 = long(d) + o[0];
          const long h2 = long(h) + o[1];
          if (!inside(d2, h2)) continue;
          cliques.push_back({std::uint32_t(grid.index(d, h)), std::uint32_t(grid.index(std::size_t(d2), std::size_t(h2))),
                             raw(o[0], o[1])});
        }

    const std::size_t n = grid.size();
    auto row_sums = [&](const std::vector<double>& scale) {
      std::vector<double> sums(n, 0.0);
      for (const auto& c : cliques) {
        sums[c.s] += c.weight * scale[c.r];
        sums[c.r] += c.weight * scale[c.s];
      }
      return sums;
    };
    std::vector<double> scale(n, 1.0);
    bool balanced = false;
    if (nd > 1 && nh > 1) {
      for (int it = 0; it < 5000 && !balanced; ++it) {
        const auto sums = row_sums(scale);
        double worst = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
          worst = std::max(worst, std::abs(scale[v] * sums[v] - 1.0));
          scale[v] = std::sqrt(scale[v] / sums[v]);
        }
        balanced = worst < 1e-13;
      }
    }
    if (balanced) {
      for (auto& c : cliques) c.weight *= scale[c.s] * scale[c.r];
    } else {
      const auto total = row_sums(std::vector<double>(n, 1.0));
      for (auto& c : cliques) c.weight = 0.5 * (c.weight / total[c.s] + c.weight / total[c.r]);
    }
    return NeighborhoodSystem(n, std::move(cliques));
  }

  std::size_t voxels() const { return n_; }
  std::span<const Clique> cliques() const { return cliques_; }

 private:
  std::size_t n_ = 0;
  std::vector<Clique> cliques_;
};

/// Per-voxel m_s values. Depth is measured from the grid's first depth row
/// and normalized by the deepest row.
class DepthWeightMap {
 public:
  DepthWeightMap() = default;
  DepthWeightMap(const VoxelGrid& grid, double m, double a) : values_(grid.size()) {
    const double max_depth = grid.pitch * static_cast<double>(grid.n_depth - 1);
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const double depth = grid.pitch * static_cast<double>(grid.depth_index(v));
      values_[v] = max_depth > 0.0 ? depth_weight(depth, max_depth, m, a) : 1.0;
    }
  }
  explicit DepthWeightMap(std::vector<double> values) : values_(std::move(values)) {}

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t v) const { return values_[v]; }

 private:
  std::vector<double> values_;
};

/// The full prior energy sum_{s,r} b_{s,r} rho(x_s - x_r; sigma_{s,r}) with
/// per-voxel adjacency for coordinate updates.
class PriorModel {
 public:
  struct Neighbor {
    std::uint32_t voxel;
    double weight;
    double sigma;
    double inv_ts;  // 1 / (T sigma)
    double lead;    // (T sigma)^(p - 2) / (2 sigma^p)
  };

  PriorModel() = default;
  PriorModel(NeighborhoodSystem cliques, const DepthWeightMap& depth, QGGMRFParams params)
      : params_(params), cliques_(std::move(cliques)) {
    params_.validate();
    const std::size_t n = cliques_.voxels();
    detail::require_dims(depth.values().size() == n, "depth map size mismatch");
    sigmas_.reserve(cliques_.cliques().size());
    offsets_.assign(n + 1, 0);
    for (const auto& c : cliques_.cliques()) {
      sigmas_.push_back(pair_sigma(depth[c.s], depth[c.r], params_.sigma0));
      ++offsets_[c.s + 1];
      ++offsets_[c.r + 1];
    }
    for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] += offsets_[v];
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> next(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < cliques_.cliques().size(); ++i) {
      const auto& c = cliques_.cliques()[i];
      const double ts = params_.T * sigmas_[i];
      const double lead = std::pow(ts, params_.p - 2.0) / (2.0 * std::pow(sigmas_[i], params_.p));
      adjacency_[next[c.s]++] = {c.r, c.weight, sigmas_[i], 1.0 / ts, lead};
      adjacency_[next[c.r]++] = {c.s, c.weight, sigmas_[i], 1.0 / ts, lead};
    }
  }

  /// Standard construction: 8-neighborhood plus depth-modulated scale.
  static PriorModel for_grid(const VoxelGrid& grid, const QGGMRFParams& params) {
    params.validate();
    return PriorModel(NeighborhoodSystem::eight_connected(grid), DepthWeightMap(grid, params.m, params.a), params);
  }

  const QGGMRFParams& params() const { return params_; }
  std::size_t voxels() const { return cliques_.voxels(); }
  const NeighborhoodSystem& neighborhood() const { return cliques_; }
  std::span<const double> clique_sigmas() const { return sigmas_; }

  std::span<const Neighbor> neighbors(std::size_t v) const {
    return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }

  /// influence_coefficient for one neighbour with its scale terms
  /// precomputed; q = 2 leaves a single power per call.
  double influence(const Neighbor& nb, double delta) const {
    const double u = std::pow(std::abs(delta) * nb.inv_ts, 2.0 - params_.p);
    return nb.lead / (1.0 + u) * (1.0 + (2.0 - params_.p) / (params_.p * (1.0 + u)));
  }

  double energy(std::span<const double> x) const {
    detail::require_dims(x.size() == voxels(), "prior energy: image size mismatch");
    double e = 0.0;
    const auto cl = cliques_.cliques();
    for (std::size_t i = 0; i < cl.size(); ++i)
      e += cl[i].weight * potential(x[cl[i].s] - x[cl[i].r], sigmas_[i], params_);
    return e;
  }

 private:
  QGGMRFParams params_;
  NeighborhoodSystem cliques_;
  std::vector<double> sigmas_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
};

}  // namespace umbir

#endif  // UMBIR_PRIOR_MODEL_HPP
