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

#ifndef UMBIR_PIPELINE_HPP
#define UMBIR_PIPELINE_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "umbir/config.hpp"
#include "umbir/io.hpp"
#include "umbir/phantom.hpp"
#include "umbir/prior_model.hpp"
#include "umbir/reconstruction.hpp"
#include "umbir/saft.hpp"
#include "umbir/system_model.hpp"

namespace umbir {

/// Rotation angle of view i when `views` scans cover `span_deg`.
inline double view_angle_deg(const RunConfig& c, std::size_t i) {
  if (c.simulate.views <= 1) return 0.0;
  return c.simulate.span_deg * static_cast<double>(i) / static_cast<double>(c.simulate.views - 1);
}

inline std::string view_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03zu", i);
  return buf;
}

inline CylinderLayout make_layout(const RunConfig& c) {
  CylinderLayout L;
  L.groove_depth = c.phantom.groove_depth_m;
  L.backwall_depth = c.phantom.backwall_depth_m;
  L.groove_height_min = c.phantom.groove_height_min_m;
  L.groove_height_max = c.phantom.groove_height_max_m;
  L.reflector_height_min = c.phantom.reflector_height_min_m;
  L.reflector_height_max = c.phantom.reflector_height_max_m;
  L.reflectivity = c.phantom.reflectivity;
  L.pitch = c.simulate.fine_pitch_m;
  return L;
}

/// Phantom seen by view i: the groove faces the array only within
/// groove_half_width_deg of groove_center_deg.
inline Phantom view_phantom(const RunConfig& c, std::size_t i) {
  const bool groove = std::abs(view_angle_deg(c, i) - c.phantom.groove_center_deg) <= c.phantom.groove_half_width_deg;
  Phantom ph = cc_phantom(groove, make_layout(c));
  ph.validate(make_stack(c));
  return ph;
}

/// Config-derived objects shared by every view.
struct Session {
  RunConfig config;
  Pulse pulse;
  LayerStack stack;
  TransducerGeometry geometry;
  VoxelGrid grid;
  ForwardParams forward;
  ResponseTable table;
  DirectArrivalBasis direct;

  explicit Session(RunConfig c)
      : config(std::move(c)),
        pulse(make_pulse(config)),
        stack(make_stack(config)),
        geometry(make_geometry(config)),
        grid(make_grid(config)),
        forward(make_forward_params(config)),
        table(pulse, max_gamma(grid, geometry, stack), forward.gamma_grid, forward.window_length(pulse)),
        direct(build_direct_arrival_basis(geometry, stack, table, forward.samples)) {}

  /// Key over everything A depends on.
  std::uint64_t matrix_key() const {
    RunConfig k;
    k.layers = config.layers;
    k.image_layer = config.image_layer;
    k.geometry = config.geometry;
    k.pulse = config.pulse;
    k.grid = config.grid;
    k.forward = config.forward;
    std::uint64_t h = fnv1a(serialize_config(k));
    return fnv1a({reinterpret_cast<const unsigned char*>(pulse.samples.data()), pulse.samples.size() * sizeof(double)},
                 h);
  }

  SystemMatrix build_matrix(std::size_t threads = 0) const {
    return build_system_matrix(grid, geometry, stack, table, forward.beta, forward.samples, pulse.sample_rate, threads);
  }

  /// Loads A from `cache` when its key matches, otherwise builds and stores it.
  SystemMatrix matrix(const std::filesystem::path& cache, std::size_t threads = 0, std::ostream* log = nullptr) const {
    const auto key = matrix_key();
    if (std::filesystem::exists(cache)) {
      if (auto A = read_system_matrix_cache(cache, key)) return std::move(*A);
      if (log) *log << "warning: system matrix cache " << cache.string() << " is stale; rebuilding\n";
    }
    SystemMatrix A = build_matrix(threads);
    write_system_matrix_cache(cache, A, key);
    return A;
  }

  PriorModel prior() const { return PriorModel::for_grid(grid, config.prior); }

  Measurements simulate_view(std::size_t i) const {
    const Phantom ph = view_phantom(config, i);
    const std::vector<double> gains(geometry.receivers.size(), config.simulate.direct_gain);
    const std::uint64_t seed = config.simulate.seed * 1000003ull + i;
    Measurements y = synthesize(ph, stack, geometry, pulse, forward, config.simulate.fine_pitch_m, grid.pitch,
                                config.simulate.noise_sigma, gains, seed);
    y.rotation_deg = view_angle_deg(config, i);
    return y;
  }

  void check_measurements(const Measurements& y) const {
    y.validate();
    detail::require_dims(y.receivers == geometry.receivers.size() && y.samples == forward.samples,
                         "measurement shape does not match the config");
    detail::require(std::abs(y.sample_rate - pulse.sample_rate) <= 1e-9 * pulse.sample_rate,
                    "measurement sample rate does not match the config");
  }

  SolverState reconstruct_umbir(const SystemMatrix& A, const PriorModel& prior, const Measurements& y) const {
    check_measurements(y);
    const MAPProblem pb{A, direct, y.data, config.solver.noise_sigma, prior};
    SolverOptions opt;
    opt.max_passes = config.solver.max_passes;
    opt.rel_tol = config.solver.rel_tol;
    opt.seed = config.solver.seed;
    return reconstruct(pb, opt);
  }

  std::vector<double> reconstruct_saft(const Measurements& y) const {
    check_measurements(y);
    return saft_reconstruct(y, grid, stack, geometry, make_saft_config(config, pulse), &direct);
  }
};

}  // namespace umbir

#endif  // UMBIR_PIPELINE_HPP
