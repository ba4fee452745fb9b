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

#ifndef UMBIR_SAFT_HPP
#define UMBIR_SAFT_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/fft.hpp"
#include "umbir/system_model.hpp"
#include "umbir/wave_geometry.hpp"

namespace umbir {

enum class Interpolation { nearest, linear };

/// Multi-layer delay-and-sum settings.
struct SaftConfig {
  bool use_envelope = false;
  double apodization_beta = 0.0;  // 0 disables apodization
  Interpolation interpolation = Interpolation::linear;
  /// Added to every computed delay; aligns the pulse onset with its peak.
  double time_reference = 0.0;
  /// Remove the least-squares direct-arrival fit before summation.
  bool subtract_direct = true;

  void validate() const { detail::require(apodization_beta >= 0.0, "SAFT apodization exponent must be non-negative"); }
};

namespace detail {

inline double sample_trace(std::span<const double> trace, double position, Interpolation mode) {
  if (position < 0.0) return 0.0;
  if (mode == Interpolation::nearest) {
    const auto i = static_cast<std::size_t>(std::floor(position + 0.5));
    return i < trace.size() ? trace[i] : 0.0;
  }
  const auto i = static_cast<std::size_t>(position);
  if (i >= trace.size()) return 0.0;
  const double f = position - static_cast<double>(i);
  const double b = i + 1 < trace.size() ? trace[i + 1] : 0.0;
  return (1.0 - f) * trace[i] + f * b;
}

}  // namespace detail

/// x(v) = sum_k w_k(v) y_k(T_k(v) + t_ref). Voxels no ray can reach stay 0.
inline std::vector<double> saft_reconstruct(const Measurements& y, const VoxelGrid& grid, const LayerStack& stack,
                                            const TransducerGeometry& geom, const SaftConfig& cfg,
                                            const DirectArrivalBasis* direct = nullptr) {
  y.validate();
  grid.validate();
  geom.validate();
  cfg.validate();
  detail::require_dims(y.receivers == geom.receivers.size(), "measurement receiver count differs from geometry");

  std::vector<double> traces = y.data;
  if (cfg.subtract_direct && direct != nullptr) {
    detail::require_dims(direct->receivers() == y.receivers && direct->samples() == y.samples,
                         "direct-arrival basis shape mismatch");
    const auto g = direct->fit(traces);
    std::vector<double> fit(traces.size(), 0.0);
    direct->apply_add(g, fit);
    for (std::size_t i = 0; i < traces.size(); ++i) traces[i] -= fit[i];
  }
  if (cfg.use_envelope) {
    for (std::size_t k = 0; k < y.receivers; ++k) {
      std::span<double> tr(traces.data() + k * y.samples, y.samples);
      const auto env = analytic_envelope(tr);
      std::copy(env.begin(), env.end(), tr.begin());
    }
  }

  std::vector<double> image(grid.size(), 0.0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Point2 voxel = grid.center(v);
    double acc = 0.0;
    for (std::size_t k = 0; k < y.receivers; ++k) {
      const std::span<const double> tr(traces.data() + k * y.samples, y.samples);
      for (const auto& src : geom.sources) {
        EchoGeometry echo;
        try {
          echo = echo_geometry(src, voxel, geom.receivers[k], stack, geom.firing_tilt);
        } catch (const Unreachable&) {
          continue;
        }
        const double w = apodization(echo.beam_angle_tx, echo.beam_angle_rx, cfg.apodization_beta);
        if (w == 0.0) continue;
        acc += w * detail::sample_trace(tr, (echo.delay + cfg.time_reference) * y.sample_rate, cfg.interpolation);
      }
    }
    image[v] = acc;
  }
  return image;
}

}  // namespace umbir

#endif  // UMBIR_SAFT_HPP
