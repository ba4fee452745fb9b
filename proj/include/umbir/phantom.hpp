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

#ifndef UMBIR_PHANTOM_HPP
#define UMBIR_PHANTOM_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/pulse_response.hpp"
#include "umbir/system_model.hpp"
#include "umbir/wave_geometry.hpp"

namespace umbir {

struct PointScatterer {
  Point2 position;
  double reflectivity = 1.0;  // m^-3
};

/// Thin reflector at constant depth spanning [height_min, height_max].
struct ReflectorSegment {
  std::string label;
  double depth = 0.0;
  double height_min = 0.0;
  double height_max = 0.0;
  double reflectivity = 1.0;
};

struct Phantom {
  std::vector<PointScatterer> points;
  std::vector<ReflectorSegment> segments;
  double pitch = 1e-3;  // rasterization pitch, m

  void validate(const LayerStack& stack) const {
    detail::require(pitch > 0.0, "phantom pitch must be positive");
    for (const auto& p : points)
      detail::require(stack.in_image_layer(p.position.depth), "point scatterer outside the image layer");
    for (const auto& s : segments) {
      detail::require(stack.in_image_layer(s.depth), "reflector segment '" + s.label + "' outside the image layer");
      detail::require(s.height_min <= s.height_max, "reflector segment has inverted height range");
    }
  }

  /// Nonzero voxels on the lattice pitch * Z^2; segments are one voxel thick.
  std::vector<std::pair<Point2, double>> rasterize(double raster_pitch) const {
    detail::require(raster_pitch > 0.0, "raster pitch must be positive");
    std::vector<std::pair<Point2, double>> voxels;
    auto snap = [&](double v) { return std::round(v / raster_pitch) * raster_pitch; };
    for (const auto& s : segments) {
      const double depth = snap(s.depth);
      const auto lo = static_cast<long>(std::ceil(s.height_min / raster_pitch - 1e-9));
      const auto hi = static_cast<long>(std::floor(s.height_max / raster_pitch + 1e-9));
      for (long j = lo; j <= hi; ++j)
        voxels.push_back({{depth, static_cast<double>(j) * raster_pitch}, s.reflectivity});
    }
    for (const auto& p : points) voxels.push_back({{snap(p.position.depth), snap(p.position.height)}, p.reflectivity});
    return voxels;
  }
};

/// Phantom together with the acquisition it is imaged with.
struct Scene {
  Phantom phantom;
  LayerStack stack;
  TransducerGeometry geometry;
};

/// Planar desk-scale layout of the concrete-cylinder specimen: borehole
/// water, a Plexiglas liner, then concrete out to the backwall. Depths are
/// radii from the borehole centre, where the sensor assembly sits.
struct CylinderLayout {
  double water_thickness = 0.045;
  double liner_thickness = 0.005;
  double concrete_thickness = 0.205;
  double water_speed = 1500.0;
  double liner_speed = 2820.0;
  double concrete_speed = 2620.0;
  double water_density = 997.0;
  double liner_density = 1180.0;
  double concrete_density = 1970.0;
  // Attenuation per unit frequency (s/m); quoted per MHz and scaled to SI.
  double water_attenuation = 2e-6;
  double liner_attenuation = 0.0;
  double concrete_attenuation = 30e-6;

  std::size_t receivers = 15;
  double receiver_spacing = 0.01;
  double receiver_first_height = -0.07;
  double source_height = 0.0;
  double firing_tilt_deg = 5.0;

  double groove_depth = 0.188;
  double backwall_depth = 0.238;
  double groove_height_min = -0.02;
  double groove_height_max = 0.06;
  double reflector_height_min = -0.06;
  double reflector_height_max = 0.12;
  double reflectivity = 1.0;
  double pitch = 1e-3;

  friend bool operator==(const CylinderLayout&, const CylinderLayout&) = default;
};

inline LayerStack cylinder_stack(const CylinderLayout& L) {
  return LayerStack({{L.water_thickness, L.water_speed, L.water_attenuation, L.water_density, {}},
                     {L.liner_thickness, L.liner_speed, L.liner_attenuation, L.liner_density, {}},
                     {L.concrete_thickness, L.concrete_speed, L.concrete_attenuation, L.concrete_density, {}}},
                    2);
}

inline TransducerGeometry cylinder_geometry(const CylinderLayout& L) {
  TransducerGeometry g;
  g.sources = {{0.0, L.source_height}};
  for (std::size_t k = 0; k < L.receivers; ++k)
    g.receivers.push_back({0.0, L.receiver_first_height + L.receiver_spacing * static_cast<double>(k)});
  g.firing_tilt = L.firing_tilt_deg * std::numbers::pi / 180.0;
  return g;
}

/// Groove and backwall segments; with the groove present the backwall is
/// split around the groove's height range.
inline Phantom cc_phantom(bool with_groove, const CylinderLayout& L = {}) {
  Phantom ph;
  ph.pitch = L.pitch;
  if (!with_groove) {
    ph.segments.push_back({"backwall", L.backwall_depth, L.reflector_height_min, L.reflector_height_max,
                           L.reflectivity});
  } else {
    ph.segments.push_back({"groove", L.groove_depth, L.groove_height_min, L.groove_height_max, L.reflectivity});
    if (L.reflector_height_min < L.groove_height_min)
      ph.segments.push_back({"backwall", L.backwall_depth, L.reflector_height_min, L.groove_height_min - L.pitch,
                             L.reflectivity});
    if (L.reflector_height_max > L.groove_height_max)
      ph.segments.push_back({"backwall", L.backwall_depth, L.groove_height_max + L.pitch, L.reflector_height_max,
                             L.reflectivity});
  }
  return ph;
}

inline Scene make_cc_phantom(bool with_groove, const CylinderLayout& L = {}) {
  Scene scene{cc_phantom(with_groove, L), cylinder_stack(L), cylinder_geometry(L)};
  scene.phantom.validate(scene.stack);
  return scene;
}

struct ForwardParams {
  double beta = 8.0;
  double t0 = 0.0;              // s; 0 selects the 99.9 % energy window
  std::size_t gamma_grid = 256;
  std::size_t samples = 800;    // M

  double window_length(const Pulse& pulse) const { return t0 > 0.0 ? t0 : default_window_length(pulse); }
};

/// A_fine x_fine + D g_true, where A_fine is the system matrix on the
/// phantom's fine lattice restricted to its nonzero voxels.
inline Measurements synthesize_noiseless(const Phantom& phantom, const LayerStack& stack, const TransducerGeometry& geom,
                                         const Pulse& pulse, const ForwardParams& fwd, double fine_pitch,
                                         double reconstruction_pitch, std::span<const double> g_true) {
  detail::require(fine_pitch < reconstruction_pitch, "synthesis pitch must be finer than the reconstruction pitch");
  phantom.validate(stack);
  geom.validate();
  pulse.validate();
  const std::size_t K = geom.receivers.size();
  const std::size_t M = fwd.samples;
  detail::require_dims(g_true.size() == K, "g_true must hold one gain per receiver");

  const auto voxels = phantom.rasterize(fine_pitch);
  double gmax = 0.0;
  for (const auto& [pos, value] : voxels)
    for (const auto& src : geom.sources)
      for (const auto& rcv : geom.receivers) {
        try {
          gmax = std::max(gmax, echo_geometry(src, pos, rcv, stack, geom.firing_tilt).gamma);
        } catch (const Unreachable&) {
        }
      }
  const ResponseTable table(pulse, gmax, fwd.gamma_grid, fwd.window_length(pulse));

  Measurements out;
  out.receivers = K;
  out.samples = M;
  out.sample_rate = pulse.sample_rate;
  out.data.assign(K * M, 0.0);
  for (const auto& [pos, value] : voxels) {
    if (!stack.in_image_layer(pos.depth)) continue;
    for (const auto& [row, a] : system_column(pos, geom, stack, table, fwd.beta, M)) out.data[row] += a * value;
  }
  build_direct_arrival_basis(geom, stack, table, M).apply_add(g_true, out.data);
  return out;
}

/// Adds w ~ N(0, sigma^2 I). Receiver k draws from a generator seeded by
/// (seed, k), so traces are independent of evaluation order.
inline void add_noise(Measurements& y, double noise_sigma, std::uint64_t seed) {
  detail::require(noise_sigma >= 0.0, "noise sigma must be non-negative");
  if (noise_sigma == 0.0) return;
  for (std::size_t k = 0; k < y.receivers; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, noise_sigma);
    for (std::size_t m = 0; m < y.samples; ++m) y.data[k * y.samples + m] += normal(rng);
  }
}

inline Measurements synthesize(const Phantom& phantom, const LayerStack& stack, const TransducerGeometry& geom,
                               const Pulse& pulse, const ForwardParams& fwd, double fine_pitch,
                               double reconstruction_pitch, double noise_sigma, std::span<const double> g_true,
                               std::uint64_t seed) {
  Measurements y = synthesize_noiseless(phantom, stack, geom, pulse, fwd, fine_pitch, reconstruction_pitch, g_true);
  add_noise(y, noise_sigma, seed);
  return y;
}

/// 10 log10(||signal||^2 / (n sigma^2))
inline double snr_db(std::span<const double> signal, double noise_sigma) {
  double e = 0.0;
  for (double v : signal) e += v * v;
  return 10.0 * std::log10(e / (static_cast<double>(signal.size()) * noise_sigma * noise_sigma));
}

}  // namespace umbir

#endif  // UMBIR_PHANTOM_HPP
