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

#ifndef UMBIR_CONFIG_HPP
#define UMBIR_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/io.hpp"
#include "umbir/phantom.hpp"
#include "umbir/prior_model.hpp"
#include "umbir/saft.hpp"

namespace umbir {

inline constexpr int kConfigSchemaVersion = 1;

struct LayerSpec {
  std::string name;
  double thickness_m = 0.0;
  double speed_mps = 0.0;
  double attenuation_spm = 0.0;
  double density_kgpm3 = 0.0;
  std::optional<double> transmittance;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Complete parameter set of a run. Defaults describe the desk-scale
/// concrete-cylinder experiment.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;

  std::vector<LayerSpec> layers{{"water", 0.045, 1500.0, 2e-6, 997.0, {}},
                                {"plexiglas", 0.005, 2820.0, 0.0, 1180.0, {}},
                                {"concrete", 0.205, 2620.0, 30e-6, 1970.0, {}}};
  std::size_t image_layer = 2;

  struct Geometry {
    double source_height_m = 0.0;
    std::size_t receiver_count = 15;
    double receiver_first_height_m = -0.07;
    double receiver_spacing_m = 0.01;
    double firing_tilt_deg = 5.0;
    friend bool operator==(const Geometry&, const Geometry&) = default;
  } geometry;

  struct PulseSpec {
    std::string kind = "gaussian";  // gaussian | csv
    std::string csv_path;
    double sample_rate_hz = 2e6;
    double center_frequency_hz = 58e3;
    double envelope_cycles = 1.0;
    double amplitude_pa = 0.01;
    friend bool operator==(const PulseSpec&, const PulseSpec&) = default;
  } pulse;

  struct GridSpec {
    double pitch_m = 0.003;
    double depth_min_m = 0.052;
    double depth_max_m = 0.250;
    double height_min_m = -0.06;
    double height_max_m = 0.12;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
  } grid;

  struct Forward {
    double beta = 8.0;
    double t0_s = 0.0;  // 0 selects the 99.9 % energy window
    std::size_t gamma_grid = 256;
    std::size_t samples = 800;
    friend bool operator==(const Forward&, const Forward&) = default;
  } forward;

  QGGMRFParams prior;

  struct Solver {
    double noise_sigma = 0.01;
    std::size_t max_passes = 50;
    double rel_tol = 1e-4;
    std::uint64_t seed = 1;
    friend bool operator==(const Solver&, const Solver&) = default;
  } solver;

  struct Saft {
    bool envelope = false;
    double beta = 0.0;
    std::string interpolation = "linear";
    bool subtract_direct = true;
    friend bool operator==(const Saft&, const Saft&) = default;
  } saft;

  struct Simulate {
    std::size_t views = 37;
    double span_deg = 180.0;
    double fine_pitch_m = 0.001;
    double noise_sigma = 0.0007;
    double direct_gain = 0.5;
    std::uint64_t seed = 2022;
    friend bool operator==(const Simulate&, const Simulate&) = default;
  } simulate;

  struct PhantomSpec {
    double groove_depth_m = 0.188;
    double backwall_depth_m = 0.238;
    double groove_height_min_m = -0.02;
    double groove_height_max_m = 0.06;
    double reflector_height_min_m = -0.06;
    double reflector_height_max_m = 0.12;
    double reflectivity = 1.0;
    double groove_center_deg = 90.0;
    double groove_half_width_deg = 20.0;
    friend bool operator==(const PhantomSpec&, const PhantomSpec&) = default;
  } phantom;

  std::string out_dir = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ValidationError("config key '" + key + "': expected a number, got '" + text + "'");
  return v;
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& text) {
  U v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ValidationError("config key '" + key + "': expected a non-negative integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ValidationError("config key '" + key + "': expected true or false, got '" + text + "'");
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename F>
Field real_at(F access) {
  return {[access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& s) { access(c) = parse_double("", s); }};
}

template <typename F>
Field count_at(F access) {
  return {[access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& s) {
            using T = std::remove_reference_t<decltype(access(c))>;
            access(c) = parse_unsigned<T>("", s);
          }};
}

template <typename F>
Field flag_at(F access) {
  return {[access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [access](RunConfig& c, const std::string& s) { access(c) = parse_bool("", s); }};
}

template <typename F>
Field text_at(F access) {
  return {[access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, const std::string& s) { access(c) = s; }};
}

/// Fixed (non-layer) keys in serialization order.
inline const std::vector<std::pair<std::string, Field>>& fixed_fields() {
  static const std::vector<std::pair<std::string, Field>> fields = {
      {"stack.image_layer", count_at([](RunConfig& c) -> std::size_t& { return c.image_layer; })},
      {"geometry.source_height_m", real_at([](RunConfig& c) -> double& { return c.geometry.source_height_m; })},
      {"geometry.receiver_count", count_at([](RunConfig& c) -> std::size_t& { return c.geometry.receiver_count; })},
      {"geometry.receiver_first_height_m",
       real_at([](RunConfig& c) -> double& { return c.geometry.receiver_first_height_m; })},
      {"geometry.receiver_spacing_m", real_at([](RunConfig& c) -> double& { return c.geometry.receiver_spacing_m; })},
      {"geometry.firing_tilt_deg", real_at([](RunConfig& c) -> double& { return c.geometry.firing_tilt_deg; })},
      {"pulse.kind", text_at([](RunConfig& c) -> std::string& { return c.pulse.kind; })},
      {"pulse.csv_path", text_at([](RunConfig& c) -> std::string& { return c.pulse.csv_path; })},
      {"pulse.sample_rate_hz", real_at([](RunConfig& c) -> double& { return c.pulse.sample_rate_hz; })},
      {"pulse.center_frequency_hz", real_at([](RunConfig& c) -> double& { return c.pulse.center_frequency_hz; })},
      {"pulse.envelope_cycles", real_at([](RunConfig& c) -> double& { return c.pulse.envelope_cycles; })},
      {"pulse.amplitude_pa", real_at([](RunConfig& c) -> double& { return c.pulse.amplitude_pa; })},
      {"grid.pitch_m", real_at([](RunConfig& c) -> double& { return c.grid.pitch_m; })},
      {"grid.depth_min_m", real_at([](RunConfig& c) -> double& { return c.grid.depth_min_m; })},
      {"grid.depth_max_m", real_at([](RunConfig& c) -> double& { return c.grid.depth_max_m; })},
      {"grid.height_min_m", real_at([](RunConfig& c) -> double& { return c.grid.height_min_m; })},
      {"grid.height_max_m", real_at([](RunConfig& c) -> double& { return c.grid.height_max_m; })},
      {"forward.beta", real_at([](RunConfig& c) -> double& { return c.forward.beta; })},
      {"forward.t0_s", real_at([](RunConfig& c) -> double& { return c.forward.t0_s; })},
      {"forward.gamma_grid", count_at([](RunConfig& c) -> std::size_t& { return c.forward.gamma_grid; })},
      {"forward.samples", count_at([](RunConfig& c) -> std::size_t& { return c.forward.samples; })},
      {"prior.p", real_at([](RunConfig& c) -> double& { return c.prior.p; })},
      {"prior.q", real_at([](RunConfig& c) -> double& { return c.prior.q; })},
      {"prior.T", real_at([](RunConfig& c) -> double& { return c.prior.T; })},
      {"prior.sigma0", real_at([](RunConfig& c) -> double& { return c.prior.sigma0; })},
      {"prior.m", real_at([](RunConfig& c) -> double& { return c.prior.m; })},
      {"prior.a", real_at([](RunConfig& c) -> double& { return c.prior.a; })},
      {"solver.noise_sigma", real_at([](RunConfig& c) -> double& { return c.solver.noise_sigma; })},
      {"solver.max_passes", count_at([](RunConfig& c) -> std::size_t& { return c.solver.max_passes; })},
      {"solver.rel_tol", real_at([](RunConfig& c) -> double& { return c.solver.rel_tol; })},
      {"solver.seed", count_at([](RunConfig& c) -> std::uint64_t& { return c.solver.seed; })},
      {"saft.envelope", flag_at([](RunConfig& c) -> bool& { return c.saft.envelope; })},
      {"saft.beta", real_at([](RunConfig& c) -> double& { return c.saft.beta; })},
      {"saft.interpolation", text_at([](RunConfig& c) -> std::string& { return c.saft.interpolation; })},
      {"saft.subtract_direct", flag_at([](RunConfig& c) -> bool& { return c.saft.subtract_direct; })},
      {"simulate.views", count_at([](RunConfig& c) -> std::size_t& { return c.simulate.views; })},
      {"simulate.span_deg", real_at([](RunConfig& c) -> double& { return c.simulate.span_deg; })},
      {"simulate.fine_pitch_m", real_at([](RunConfig& c) -> double& { return c.simulate.fine_pitch_m; })},
      {"simulate.noise_sigma", real_at([](RunConfig& c) -> double& { return c.simulate.noise_sigma; })},
      {"simulate.direct_gain", real_at([](RunConfig& c) -> double& { return c.simulate.direct_gain; })},
      {"simulate.seed", count_at([](RunConfig& c) -> std::uint64_t& { return c.simulate.seed; })},
      {"phantom.groove_depth_m", real_at([](RunConfig& c) -> double& { return c.phantom.groove_depth_m; })},
      {"phantom.backwall_depth_m", real_at([](RunConfig& c) -> double& { return c.phantom.backwall_depth_m; })},
      {"phantom.groove_height_min_m", real_at([](RunConfig& c) -> double& { return c.phantom.groove_height_min_m; })},
      {"phantom.groove_height_max_m", real_at([](RunConfig& c) -> double& { return c.phantom.groove_height_max_m; })},
      {"phantom.reflector_height_min_m",
       real_at([](RunConfig& c) -> double& { return c.phantom.reflector_height_min_m; })},
      {"phantom.reflector_height_max_m",
       real_at([](RunConfig& c) -> double& { return c.phantom.reflector_height_max_m; })},
      {"phantom.reflectivity", real_at([](RunConfig& c) -> double& { return c.phantom.reflectivity; })},
      {"phantom.groove_center_deg", real_at([](RunConfig& c) -> double& { return c.phantom.groove_center_deg; })},
      {"phantom.groove_half_width_deg",
       real_at([](RunConfig& c) -> double& { return c.phantom.groove_half_width_deg; })},
      {"paths.out", text_at([](RunConfig& c) -> std::string& { return c.out_dir; })},
  };
  return fields;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Writes every parameter, defaults included, as `key = value` lines.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "schema_version = " << c.schema_version << '\n';
  os << "stack.layer_count = " << c.layers.size() << '\n';
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    const auto& L = c.layers[l];
    const std::string p = "layer." + std::to_string(l) + ".";
    os << p << "name = " << L.name << '\n';
    os << p << "thickness_m = " << detail::format_double(L.thickness_m) << '\n';
    os << p << "speed_mps = " << detail::format_double(L.speed_mps) << '\n';
    os << p << "attenuation_spm = " << detail::format_double(L.attenuation_spm) << '\n';
    os << p << "density_kgpm3 = " << detail::format_double(L.density_kgpm3) << '\n';
    if (L.transmittance) os << p << "transmittance = " << detail::format_double(*L.transmittance) << '\n';
  }
  for (const auto& [key, field] : detail::fixed_fields()) os << key << " = " << field.get(c) << '\n';
  return os.str();
}

/// Parses `key = value` lines over the defaults. '#' starts a comment.
/// Unknown keys, duplicate keys and an unsupported schema version are errors.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!kv.emplace(key, value).second) throw ValidationError("config key '" + key + "' given twice");
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto wrap = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      const auto pos = msg.find("config key ''");
      if (pos != std::string::npos) msg.replace(pos, 13, "config key '" + key + "'");
      throw ValidationError(msg);
    }
  };

  if (auto v = take("schema_version")) {
    wrap("schema_version", [&] { c.schema_version = detail::parse_unsigned<int>("schema_version", *v); });
    if (c.schema_version != kConfigSchemaVersion)
      throw ValidationError("unsupported config schema version " + std::to_string(c.schema_version));
  }
  if (auto v = take("stack.layer_count")) {
    const auto n = detail::parse_unsigned<std::size_t>("stack.layer_count", *v);
    detail::require(n >= 1, "stack.layer_count must be at least 1");
    std::vector<LayerSpec> layers(n);
    for (std::size_t l = 0; l < n; ++l) {
      const std::string p = "layer." + std::to_string(l) + ".";
      auto need = [&](const std::string& k) {
        auto s = take(p + k);
        if (!s) throw ValidationError("config is missing '" + p + k + "'");
        return *s;
      };
      if (auto s = take(p + "name")) layers[l].name = *s;
      layers[l].thickness_m = detail::parse_double(p + "thickness_m", need("thickness_m"));
      layers[l].speed_mps = detail::parse_double(p + "speed_mps", need("speed_mps"));
      layers[l].attenuation_spm = detail::parse_double(p + "attenuation_spm", need("attenuation_spm"));
      layers[l].density_kgpm3 = detail::parse_double(p + "density_kgpm3", need("density_kgpm3"));
      if (auto s = take(p + "transmittance")) layers[l].transmittance = detail::parse_double(p + "transmittance", *s);
    }
    c.layers = std::move(layers);
  }
  for (const auto& [key, field] : detail::fixed_fields()) {
    if (auto v = take(key)) wrap(key, [&] { field.set(c, *v); });
  }
  if (!kv.empty()) throw ValidationError("unknown config key '" + kv.begin()->first + "'");
  return c;
}

inline LayerStack make_stack(const RunConfig& c) {
  std::vector<Layer> layers;
  for (const auto& L : c.layers)
    layers.push_back({L.thickness_m, L.speed_mps, L.attenuation_spm, L.density_kgpm3, L.transmittance});
  return LayerStack(std::move(layers), c.image_layer);
}

inline TransducerGeometry make_geometry(const RunConfig& c, int rotation_index = 0) {
  TransducerGeometry g;
  g.sources = {{0.0, c.geometry.source_height_m}};
  for (std::size_t k = 0; k < c.geometry.receiver_count; ++k)
    g.receivers.push_back(
        {0.0, c.geometry.receiver_first_height_m + c.geometry.receiver_spacing_m * static_cast<double>(k)});
  g.firing_tilt = c.geometry.firing_tilt_deg * std::numbers::pi / 180.0;
  g.rotation_index = rotation_index;
  return g;
}

inline VoxelGrid make_grid(const RunConfig& c) {
  detail::require(c.grid.pitch_m > 0.0, "grid.pitch_m must be positive");
  detail::require(c.grid.depth_max_m >= c.grid.depth_min_m && c.grid.height_max_m >= c.grid.height_min_m,
                  "grid extents are inverted");
  VoxelGrid g;
  g.pitch = c.grid.pitch_m;
  g.n_depth = static_cast<std::size_t>(std::floor((c.grid.depth_max_m - c.grid.depth_min_m) / g.pitch + 1e-6)) + 1;
  g.n_height = static_cast<std::size_t>(std::floor((c.grid.height_max_m - c.grid.height_min_m) / g.pitch + 1e-6)) + 1;
  g.origin = {c.grid.depth_min_m, c.grid.height_min_m};
  return g;
}

inline Pulse make_pulse(const RunConfig& c) {
  Pulse p;
  if (c.pulse.kind == "gaussian") {
    p = Pulse::gaussian_tone(c.pulse.center_frequency_hz, c.pulse.sample_rate_hz, c.pulse.envelope_cycles);
  } else if (c.pulse.kind == "csv") {
    p.samples = read_pulse_csv(c.pulse.csv_path);
    p.sample_rate = c.pulse.sample_rate_hz;
    p.center_frequency = c.pulse.center_frequency_hz;
  } else {
    throw ValidationError("pulse.kind must be 'gaussian' or 'csv'");
  }
  for (double& v : p.samples) v *= c.pulse.amplitude_pa;
  p.validate();
  return p;
}

inline ForwardParams make_forward_params(const RunConfig& c) {
  return {c.forward.beta, c.forward.t0_s, c.forward.gamma_grid, c.forward.samples};
}

inline SaftConfig make_saft_config(const RunConfig& c, const Pulse& pulse) {
  SaftConfig s;
  s.use_envelope = c.saft.envelope;
  s.apodization_beta = c.saft.beta;
  if (c.saft.interpolation == "linear") s.interpolation = Interpolation::linear;
  else if (c.saft.interpolation == "nearest") s.interpolation = Interpolation::nearest;
  else throw ValidationError("saft.interpolation must be 'linear' or 'nearest'");
  s.subtract_direct = c.saft.subtract_direct;
  // Align each delay with the pulse's strongest sample.
  std::size_t peak = 0;
  for (std::size_t i = 1; i < pulse.samples.size(); ++i)
    if (std::abs(pulse.samples[i]) > std::abs(pulse.samples[peak])) peak = i;
  s.time_reference = static_cast<double>(peak) / pulse.sample_rate;
  return s;
}

/// Applies every owning module's validator. Also checks that a CSV pulse exists.
inline void validate_config(const RunConfig& c) {
  (void)make_stack(c);
  make_geometry(c).validate();
  make_grid(c).validate();
  c.prior.validate();
  detail::require(c.pulse.amplitude_pa > 0.0, "pulse.amplitude_pa must be positive");
  if (c.pulse.kind == "csv")
    detail::require(std::filesystem::exists(c.pulse.csv_path), "pulse CSV '" + c.pulse.csv_path + "' does not exist");
  (void)make_pulse(c);
  detail::require(c.forward.beta >= 0.0, "forward.beta must be non-negative");
  detail::require(c.forward.t0_s >= 0.0, "forward.t0_s must be non-negative");
  detail::require(c.forward.gamma_grid >= 2, "forward.gamma_grid must be at least 2");
  detail::require(c.forward.samples >= 1, "forward.samples must be at least 1");
  detail::require(c.solver.noise_sigma > 0.0, "solver.noise_sigma must be positive");
  detail::require(c.solver.max_passes >= 1, "solver.max_passes must be at least 1");
  detail::require(c.solver.rel_tol >= 0.0, "solver.rel_tol must be non-negative");
  detail::require(c.simulate.views >= 1, "simulate.views must be at least 1");
  detail::require(c.simulate.fine_pitch_m > 0.0 && c.simulate.fine_pitch_m < c.grid.pitch_m,
                  "simulate.fine_pitch_m must be positive and finer than grid.pitch_m");
  detail::require(c.simulate.noise_sigma >= 0.0, "simulate.noise_sigma must be non-negative");
  (void)make_saft_config(c, make_pulse(c));
  const auto stack = make_stack(c);
  const auto grid = make_grid(c);
  for (std::size_t v : {std::size_t{0}, grid.size() - 1})
    detail::require(stack.in_image_layer(grid.center(v).depth), "voxel grid extends outside the image layer");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  RunConfig c = parse_config(ss.str());
  // Relative pulse paths resolve against the config's directory.
  if (c.pulse.kind == "csv" && !c.pulse.csv_path.empty() && std::filesystem::path(c.pulse.csv_path).is_relative())
    c.pulse.csv_path = (path.parent_path() / c.pulse.csv_path).string();
  validate_config(c);
  return c;
}

}  // namespace umbir

#endif  // UMBIR_CONFIG_HPP
