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

#ifndef UMBIR_POLAR_HPP
#define UMBIR_POLAR_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/io.hpp"

namespace umbir {

/// Radial profiles from several rotational views, ordered by angle and
/// resampled `factor` times more densely in angle.
struct PolarComposite {
  std::vector<double> angles_deg;             // output angular samples
  std::size_t radial_samples = 0;
  std::vector<double> values;                 // angle-major: a * radial_samples + r
  std::size_t factor = 1;

  std::span<const double> profile(std::size_t a) const { return {values.data() + a * radial_samples, radial_samples}; }
};

/// Values of height column `height_row` along depth.
inline std::vector<double> extract_height_row(const Image& img, std::size_t height_row) {
  detail::require(height_row < img.grid.n_height, "height row outside the image grid");
  std::vector<double> out(img.grid.n_depth);
  for (std::size_t d = 0; d < img.grid.n_depth; ++d) out[d] = img.values[d * img.grid.n_height + height_row];
  return out;
}

/// Linear interpolation between angularly adjacent views; factor 1 keeps
/// the views unchanged. Output holds factor * (views - 1) + 1 profiles.
inline PolarComposite compose_polar(std::vector<std::pair<double, std::vector<double>>> views, std::size_t factor) {
  detail::require(views.size() >= 2, "a polar composite needs at least two views");
  detail::require(factor >= 1, "angular interpolation factor must be at least 1");
  std::stable_sort(views.begin(), views.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t R = views.front().second.size();
  for (std::size_t i = 0; i < views.size(); ++i) {
    detail::require_dims(views[i].second.size() == R, "views have different radial lengths");
    if (i > 0) detail::require(views[i].first > views[i - 1].first, "two views share the same angle");
  }

  PolarComposite out;
  out.factor = factor;
  out.radial_samples = R;
  const std::size_t n = factor * (views.size() - 1) + 1;
  out.angles_deg.reserve(n);
  out.values.reserve(n * R);
  for (std::size_t i = 0; i + 1 < views.size(); ++i) {
    const auto& [a0, p0] = views[i];
    const auto& [a1, p1] = views[i + 1];
    for (std::size_t s = 0; s < factor; ++s) {
      const double w = static_cast<double>(s) / static_cast<double>(factor);
      out.angles_deg.push_back(a0 + w * (a1 - a0));
      for (std::size_t r = 0; r < R; ++r) out.values.push_back((1.0 - w) * p0[r] + w * p1[r]);
    }
  }
  out.angles_deg.push_back(views.back().first);
  out.values.insert(out.values.end(), views.back().second.begin(), views.back().second.end());
  return out;
}

/// Composite as an image: depth down the rows, angle across the columns.
/// The height axis of the grid carries the angle in degrees.
inline Image polar_image(const PolarComposite& pc, double depth_origin, double depth_pitch) {
  const std::size_t A = pc.angles_deg.size();
  Image img;
  img.grid.n_depth = pc.radial_samples;
  img.grid.n_height = A;
  img.grid.pitch = depth_pitch;
  img.grid.origin = {depth_origin, pc.angles_deg.front()};
  img.values.resize(A * pc.radial_samples);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t r = 0; r < pc.radial_samples; ++r) img.values[r * A + a] = pc.values[a * pc.radial_samples + r];
  return img;
}

}  // namespace umbir

#endif  // UMBIR_POLAR_HPP
