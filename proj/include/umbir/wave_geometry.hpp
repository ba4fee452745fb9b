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

#ifndef UMBIR_WAVE_GEOMETRY_HPP
#define UMBIR_WAVE_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "umbir/errors.hpp"

namespace umbir {

/// Position in the imaging plane. Depth runs away from the transducer
/// plane (depth 0) through the layers; height runs along the receiver array.
struct Point2 {
  double depth = 0.0;
  double height = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// One planar acoustic layer.
///
/// Attenuation is expressed per unit frequency so that the amplitude decay
/// along a leg of duration t is exp(-speed * attenuation * t * |f|).
struct Layer {
  double thickness = 0.0;     // m
  double speed = 0.0;         // m/s
  double attenuation = 0.0;   // s/m
  double density = 0.0;       // kg/m^3
  std::optional<double> transmittance;  // front surface; derived when unset

  double impedance() const { return density * speed; }

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered stack of layers, transducer side first.
class LayerStack {
 public:
  LayerStack() = default;

  LayerStack(std::vector<Layer> layers, std::size_t image_layer)
      : layers_(std::move(layers)), image_layer_(image_layer) {
    detail::require(!layers_.empty(), "layer stack needs at least one layer");
    detail::require(image_layer_ < layers_.size(), "image layer index out of range");
    front_.resize(layers_.size());
    transmittance_.resize(layers_.size());
    double depth = 0.0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      const std::string where = "layer " + std::to_string(l) + ": ";
      detail::require(layer.thickness > 0.0, where + "thickness must be positive");
      detail::require(layer.speed > 0.0, where + "speed must be positive");
      detail::require(layer.attenuation >= 0.0, where + "attenuation must be non-negative");
      detail::require(layer.density > 0.0, where + "density must be positive");
      front_[l] = depth;
      depth += layer.thickness;
      if (layer.transmittance) {
        transmittance_[l] = *layer.transmittance;
      } else if (l == 0) {
        transmittance_[l] = 1.0;
      } else {
        // Normal-incidence pressure transmission across the front interface.
        const double z_prev = layers_[l - 1].impedance();
        const double z = layer.impedance();
        transmittance_[l] = 2.0 * z / (z + z_prev);
      }
      detail::require(transmittance_[l] > 0.0 && transmittance_[l] <= 2.0,
                      where + "transmittance must lie in (0, 2]");
    }
    total_depth_ = depth;
  }

  std::span<const Layer> layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }
  const Layer& operator[](std::size_t l) const { return layers_[l]; }
  std::size_t image_layer() const { return image_layer_; }

  double front_depth(std::size_t l) const { return front_[l]; }
  double back_depth(std::size_t l) const { return front_[l] + layers_[l].thickness; }
  double total_depth() const { return total_depth_; }

  double transmittance(std::size_t l) const { return transmittance_[l]; }

  /// Product of front-surface transmittances down to and including the image layer.
  double path_transmittance() const {
    double tau = 1.0;
    for (std::size_t l = 0; l <= image_layer_; ++l) tau *= transmittance_[l];
    return tau;
  }

  bool in_image_layer(double depth) const {
    return depth >= front_depth(image_layer_) && depth <= back_depth(image_layer_);
  }

  /// Depth legs eta_l travelled in each layer from the transducer plane down
  /// to `depth`. The last entry belongs to the layer containing `depth`.
  std::vector<double> legs_to(double depth) const {
    detail::require(depth > 0.0 && depth <= total_depth_,
                    "depth " + std::to_string(depth) + " is outside the layer stack");
    std::vector<double> legs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (depth <= back_depth(l)) {
        legs.push_back(depth - front_[l]);
        break;
      }
      legs.push_back(layers_[l].thickness);
    }
    return legs;
  }

  friend bool operator==(const LayerStack& a, const LayerStack& b) {
    return a.layers_ == b.layers_ && a.image_layer_ == b.image_layer_;
  }

 private:
  std::vector<Layer> layers_;
  std::size_t image_layer_ = 0;
  std::vector<double> front_;
  std::vector<double> transmittance_;
  double total_depth_ = 0.0;
};

/// Transducers sit on the plane depth = 0.
struct TransducerGeometry {
  std::vector<Point2> sources;
  std::vector<Point2> receivers;
  double firing_tilt = 0.0;  // rad, positive tilts the beam toward +height
  int rotation_index = 0;

  void validate() const {
    detail::require(!sources.empty(), "geometry needs at least one source");
    detail::require(!receivers.empty(), "geometry needs at least one receiver");
    for (const auto& p : sources) detail::require(p.depth == 0.0, "sources must lie on the transducer plane");
    for (std::size_t k = 0; k < receivers.size(); ++k) {
      detail::require(receivers[k].depth == 0.0, "receivers must lie on the transducer plane");
      for (std::size_t j = 0; j < k; ++j)
        detail::require(!(receivers[j] == receivers[k]), "receiver positions must be distinct");
    }
    detail::require(std::abs(firing_tilt) < std::numbers::pi / 2, "firing tilt must lie in (-pi/2, pi/2)");
  }
};

/// A refracted one-way ray from the transducer plane to a point.
struct RayPath {
  std::vector<double> angles;       // theta_l, rad, in [0, pi/2)
  std::vector<double> legs;         // eta_l, m
  std::vector<double> offsets;      // z_l = +-eta_l tan(theta_l), m
  std::vector<double> layer_times;  // s
  double travel_time = 0.0;         // s

  double angle_sum() const {
    double s = 0.0;
    for (double a : angles) s += a;
    return s;
  }
};

// sin(pi/2 - 1e-9) rounds to 1 in double precision, so the grazing margin
// is applied to the sine: chained angles stay below pi/2 - ~3e-8.
inline constexpr double kSineMargin = 4.0 * std::numeric_limits<double>::epsilon();
inline constexpr int kBisectionIterations = 60;
inline constexpr double kHeightTolerance = 1e-7;

/// Snell refraction of a ray crossing from speed c_prev into speed c_next.
inline double refract_angle(double theta_prev, double c_prev, double c_next) {
  detail::require(c_prev > 0.0 && c_next > 0.0, "speeds must be positive");
  const double s = std::sin(theta_prev) * c_next / c_prev;
  if (s > 1.0) throw TotalInternalReflection("ray is totally reflected at the interface");
  return std::asin(s);
}

/// Lateral distance covered by a ray launched at theta_1 through `legs`.
inline double path_height(double theta_1, const LayerStack& stack, std::span<const double> legs) {
  detail::require(legs.size() <= stack.size(), "more legs than layers");
  double theta = theta_1;
  double height = 0.0;
  for (std::size_t l = 0; l < legs.size(); ++l) {
    if (l > 0) theta = refract_angle(theta, stack[l - 1].speed, stack[l].speed);
    if (theta >= std::numbers::pi / 2) throw TotalInternalReflection("ray grazes the interface");
    height += legs[l] * std::tan(theta);
  }
  return height;
}

/// Supremum launch angle keeping every chained angle strictly below pi/2.
inline double incident_angle_cap(const LayerStack& stack, std::size_t n_layers) {
  double ratio = 1.0;
  for (std::size_t l = 1; l < n_layers; ++l) ratio = std::min(ratio, stack[0].speed / stack[l].speed);
  return std::asin(ratio * (1.0 - kSineMargin));
}

/// Bisection on the launch angle. path_height is strictly increasing in
/// theta_1 below the cap, so the bracket [0, cap) always holds the root.
inline double solve_incident_angle(double target_height, const LayerStack& stack,
                                   std::span<const double> legs, double tol = kHeightTolerance) {
  detail::require(target_height >= 0.0, "target height must be non-negative");
  detail::require(tol > 0.0, "tolerance must be positive");
  if (target_height == 0.0) return 0.0;
  const double cap = incident_angle_cap(stack, legs.size());
  if (target_height > path_height(cap, stack, legs))
    throw Unreachable("target lies beyond the refraction-limited aperture");
  // No refraction along the way: the ray is straight.
  bool uniform = true;
  double depth = 0.0;
  for (std::size_t l = 0; l < legs.size(); ++l) {
    uniform = uniform && stack[l].speed == stack[0].speed;
    depth += legs[l];
  }
  if (uniform && depth > 0.0) return std::min(std::atan2(target_height, depth), cap);
  double lo = 0.0;
  double hi = cap;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < kBisectionIterations; ++it) {
    mid = 0.5 * (lo + hi);
    const double h = path_height(mid, stack, legs);
    if (std::abs(h - target_height) <= tol) break;
    if (h < target_height) lo = mid;
    else hi = mid;
  }
  return mid;
}

/// Ray through `legs` covering a signed lateral distance. Negative distances
/// mirror the upward solution.
inline RayPath trace_ray(const LayerStack& stack, std::span<const double> legs, double lateral,
                         double tol = kHeightTolerance) {
  const double sign = lateral < 0.0 ? -1.0 : 1.0;
  RayPath ray;
  double theta = solve_incident_angle(std::abs(lateral), stack, legs, tol);
  ray.angles.reserve(legs.size());
  for (std::size_t l = 0; l < legs.size(); ++l) {
    if (l > 0) theta = refract_angle(theta, stack[l - 1].speed, stack[l].speed);
    const double z = legs[l] * std::tan(theta);
    const double t = std::hypot(z, legs[l]) / stack[l].speed;
    ray.angles.push_back(theta);
    ray.legs.push_back(legs[l]);
    ray.offsets.push_back(sign * z);
    ray.layer_times.push_back(t);
    ray.travel_time += t;
  }
  return ray;
}

/// One-way refracted ray from a transducer-plane endpoint to `target`.
inline RayPath one_way_path(const Point2& endpoint, const Point2& target, const LayerStack& stack) {
  const std::vector<double> legs = stack.legs_to(target.depth - endpoint.depth);
  return trace_ray(stack, legs, target.height - endpoint.height);
}

/// Two-way travel time a -> voxel -> b.
inline double travel_time(const Point2& a, const Point2& voxel, const Point2& b, const LayerStack& stack) {
  return one_way_path(a, voxel, stack).travel_time + one_way_path(b, voxel, stack).travel_time;
}

/// Beam weighting cos^beta(sum_tx) * cos^beta(sum_rx). Angle sums at or
/// beyond pi/2 fall outside the beam and weigh zero unless beta is zero.
inline double apodization(double theta_sum_tx, double theta_sum_rx, double beta) {
  detail::require(beta >= 0.0, "apodization exponent must be non-negative");
  if (beta == 0.0) return 1.0;
  const double half_pi = std::numbers::pi / 2;
  if (std::abs(theta_sum_tx) >= half_pi || std::abs(theta_sum_rx) >= half_pi) return 0.0;
  return std::pow(std::cos(theta_sum_tx), beta) * std::pow(std::cos(theta_sum_rx), beta);
}

/// Everything the forward model needs about one source/voxel/receiver triple.
struct EchoGeometry {
  RayPath transmit;
  RayPath receive;
  double delay = 0.0;       // two-way travel time, s
  double gamma = 0.0;       // sum over legs of c_l alpha_l T_l, s
  double beam_angle_tx = 0.0;  // transmit angle sum measured from the tilted beam axis
  double beam_angle_rx = 0.0;
};

namespace detail {

inline double attenuation_exponent(const RayPath& ray, const LayerStack& stack) {
  double gamma = 0.0;
  for (std::size_t l = 0; l < ray.layer_times.size(); ++l)
    gamma += stack[l].speed * stack[l].attenuation * ray.layer_times[l];
  return gamma;
}

}  // namespace detail

/// Solves both legs of an echo. Throws Unreachable when either leg cannot
/// reach the voxel. The firing tilt only enters the transmit beam angle:
/// the lateral target is offset by depth * tan(tilt) before solving.
inline EchoGeometry echo_geometry(const Point2& source, const Point2& voxel, const Point2& receiver,
                                  const LayerStack& stack, double firing_tilt) {
  EchoGeometry echo;
  echo.transmit = one_way_path(source, voxel, stack);
  echo.receive = (receiver == source) ? echo.transmit : one_way_path(receiver, voxel, stack);
  echo.delay = echo.transmit.travel_time + echo.receive.travel_time;
  echo.gamma = detail::attenuation_exponent(echo.transmit, stack) +
               detail::attenuation_exponent(echo.receive, stack);
  echo.beam_angle_rx = echo.receive.angle_sum();
  if (firing_tilt == 0.0) {
    echo.beam_angle_tx = echo.transmit.angle_sum();
  } else {
    const double depth = voxel.depth - source.depth;
    const double lateral = voxel.height - source.height - depth * std::tan(firing_tilt);
    try {
      echo.beam_angle_tx = trace_ray(stack, echo.transmit.legs, lateral).angle_sum();
    } catch (const Unreachable&) {
      echo.beam_angle_tx = std::numbers::pi / 2;
    }
  }
  return echo;
}

}  // namespace umbir

#endif  // UMBIR_WAVE_GEOMETRY_HPP
