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

#ifndef UMBIR_RENDER_HPP
#define UMBIR_RENDER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/io.hpp"

namespace umbir {

enum class Scale { linear, db };

inline Scale parse_scale(const std::string& s) {
  if (s == "linear") return Scale::linear;
  if (s == "db") return Scale::db;
  throw ValidationError("scale must be 'linear' or 'db'");
}

/// 8-bit grayscale raster, row-major, rows along depth.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Linear maps [min, max] onto [0, 255]; db maps 20 log10(|v| / max|v|) over
/// `db_range` decibels onto [0, 255]. Flat images render black.
inline Raster render_image(const Image& img, Scale scale, double db_range = 40.0) {
  detail::require_dims(img.values.size() == img.grid.size(), "image payload size mismatch");
  detail::require(db_range > 0.0, "dB range must be positive");
  Raster r{img.grid.n_height, img.grid.n_depth, std::vector<std::uint8_t>(img.values.size(), 0)};
  if (img.values.empty()) return r;
  if (scale == Scale::linear) {
    const auto [lo, hi] = std::minmax_element(img.values.begin(), img.values.end());
    const double span = *hi - *lo;
    if (span > 0.0)
      for (std::size_t i = 0; i < img.values.size(); ++i)
        r.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (img.values[i] - *lo) / span));
  } else {
    double peak = 0.0;
    for (double v : img.values) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
      for (std::size_t i = 0; i < img.values.size(); ++i) {
        const double a = std::abs(img.values[i]);
        if (a == 0.0) continue;
        const double db = std::max(20.0 * std::log10(a / peak), -db_range);
        r.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 + db / db_range)));
      }
  }
  return r;
}

/// Dashed white lines along each reflector segment and dots at point scatterers.
inline void overlay_markers(Raster& r, const VoxelGrid& grid, const Phantom& ph) {
  auto pixel = [&](double depth, double height, std::size_t& row, std::size_t& col) {
    const double d = std::round((depth - grid.origin.depth) / grid.pitch);
    const double h = std::round((height - grid.origin.height) / grid.pitch);
    if (d < 0.0 || h < 0.0 || d >= static_cast<double>(grid.n_depth) || h >= static_cast<double>(grid.n_height))
      return false;
    row = static_cast<std::size_t>(d);
    col = static_cast<std::size_t>(h);
    return true;
  };
  for (const auto& s : ph.segments) {
    const auto lo = static_cast<long>(std::ceil((s.height_min - grid.origin.height) / grid.pitch - 1e-9));
    const auto hi = static_cast<long>(std::floor((s.height_max - grid.origin.height) / grid.pitch + 1e-9));
    for (long j = std::max(lo, 0L); j <= hi; ++j) {
      if ((j / 2) % 2 != 0) continue;
      std::size_t row = 0;
      std::size_t col = 0;
      if (pixel(s.depth, grid.origin.height + static_cast<double>(j) * grid.pitch, row, col))
        r.pixels[row * r.width + col] = 255;
    }
  }
  for (const auto& p : ph.points) {
    std::size_t row = 0;
    std::size_t col = 0;
    if (pixel(p.position.depth, p.position.height, row, col)) r.pixels[row * r.width + col] = 255;
  }
}

/// Binary portable graymap (P5).
inline void write_pgm(std::ostream& os, const Raster& r) {
  os << "P5\n" << r.width << ' ' << r.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
}

inline void write_pgm(const std::filesystem::path& path, const Raster& r) {
  auto os = detail::open_out(path);
  write_pgm(os, r);
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace umbir

#endif  // UMBIR_RENDER_HPP
