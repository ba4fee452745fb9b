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

#ifndef UMBIR_IO_HPP
#define UMBIR_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "umbir/errors.hpp"
#include "umbir/phantom.hpp"
#include "umbir/pulse_response.hpp"
#include "umbir/reconstruction.hpp"
#include "umbir/system_model.hpp"

namespace umbir {

/// Runtime I/O failure (missing file, truncated payload, bad header).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Reconstructed cross-section on a voxel grid.
struct Image {
  VoxelGrid grid;
  std::vector<double> values;
};

namespace detail {

inline void put_f32(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  const char bytes[4] = {char(bits & 0xff), char((bits >> 8) & 0xff), char((bits >> 16) & 0xff), char(bits >> 24)};
  os.write(bytes, 4);
}

inline std::vector<double> get_f32(std::istream& is, std::size_t count) {
  std::vector<unsigned char> raw(count * 4);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) throw IoError("payload is truncated");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = std::uint32_t(raw[4 * i]) | (std::uint32_t(raw[4 * i + 1]) << 8) |
                               (std::uint32_t(raw[4 * i + 2]) << 16) | (std::uint32_t(raw[4 * i + 3]) << 24);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

/// The JSON header occupies the first line; the payload follows the newline.
inline nlohmann::ordered_json read_header(std::istream& is, const std::string& what) {
  std::string line;
  if (!std::getline(is, line)) throw IoError(what + ": missing header");
  try {
    return nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(what + ": malformed header: " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Measurement files: {"receivers","samples","sample_rate_hz","rotation_deg"}
// header line, then K*M little-endian float32 samples, receiver-major.

inline void write_measurements(std::ostream& os, const Measurements& y) {
  y.validate();
  nlohmann::ordered_json h;
  h["receivers"] = y.receivers;
  h["samples"] = y.samples;
  h["sample_rate_hz"] = y.sample_rate;
  h["rotation_deg"] = y.rotation_deg;
  os << h.dump() << '\n';
  for (double v : y.data) detail::put_f32(os, v);
}

inline void write_measurements(const std::filesystem::path& path, const Measurements& y) {
  auto os = detail::open_out(path);
  write_measurements(os, y);
}

inline Measurements read_measurements(std::istream& is) {
  const auto h = detail::read_header(is, "measurement file");
  Measurements y;
  try {
    y.receivers = h.at("receivers").get<std::size_t>();
    y.samples = h.at("samples").get<std::size_t>();
    y.sample_rate = h.at("sample_rate_hz").get<double>();
    y.rotation_deg = h.at("rotation_deg").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("measurement header: ") + e.what());
  }
  y.data = detail::get_f32(is, y.receivers * y.samples);
  y.validate();
  return y;
}

inline Measurements read_measurements(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  return read_measurements(is);
}

// ---------------------------------------------------------------------------
// Image files: {"n_depth","n_height","pitch_m","origin":[depth,height]} header
// line, then float32 payload indexed i_depth * n_height + i_height.

inline void write_image(std::ostream& os, const Image& img, const nlohmann::ordered_json& extra = {}) {
  detail::require_dims(img.values.size() == img.grid.size(), "image payload size mismatch");
  nlohmann::ordered_json h;
  h["n_depth"] = img.grid.n_depth;
  h["n_height"] = img.grid.n_height;
  h["pitch_m"] = img.grid.pitch;
  h["origin"] = {img.grid.origin.depth, img.grid.origin.height};
  for (const auto& [k, v] : extra.items()) h[k] = v;
  os << h.dump() << '\n';
  for (double v : img.values) detail::put_f32(os, v);
}

inline void write_image(const std::filesystem::path& path, const Image& img, const nlohmann::ordered_json& extra = {}) {
  auto os = detail::open_out(path);
  write_image(os, img, extra);
}

inline Image read_image(std::istream& is, nlohmann::ordered_json* header_out = nullptr) {
  const auto h = detail::read_header(is, "image file");
  Image img;
  try {
    img.grid.n_depth = h.at("n_depth").get<std::size_t>();
    img.grid.n_height = h.at("n_height").get<std::size_t>();
    img.grid.pitch = h.at("pitch_m").get<double>();
    img.grid.origin = {h.at("origin").at(0).get<double>(), h.at("origin").at(1).get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("image header: ") + e.what());
  }
  img.values = detail::get_f32(is, img.grid.size());
  if (header_out != nullptr) *header_out = h;
  return img;
}

inline Image read_image(const std::filesystem::path& path, nlohmann::ordered_json* header_out = nullptr) {
  auto is = detail::open_in(path);
  return read_image(is, header_out);
}

// ---------------------------------------------------------------------------

inline void write_cost_history(const std::filesystem::path& path, std::span<const CostTerms> history) {
  auto os = detail::open_out(path);
  os << "pass,cost,data_term,prior_term\n";
  os.precision(17);
  for (std::size_t i = 0; i < history.size(); ++i)
    os << i << ',' << history[i].total() << ',' << history[i].data << ',' << history[i].prior << '\n';
}

/// Single-column CSV of pulse samples. Blank lines and '#' comments are skipped.
inline std::vector<double> read_pulse_csv(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  std::vector<double> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      std::size_t used = 0;
      samples.push_back(std::stod(line.substr(first), &used));
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return samples;
}

inline nlohmann::ordered_json phantom_to_json(const Phantom& ph, double rotation_deg) {
  nlohmann::ordered_json j;
  j["rotation_deg"] = rotation_deg;
  j["pitch_m"] = ph.pitch;
  j["segments"] = nlohmann::ordered_json::array();
  for (const auto& s : ph.segments)
    j["segments"].push_back({{"label", s.label},
                             {"depth_m", s.depth},
                             {"height_min_m", s.height_min},
                             {"height_max_m", s.height_max},
                             {"reflectivity", s.reflectivity}});
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : ph.points)
    j["points"].push_back({{"depth_m", p.position.depth}, {"height_m", p.position.height}, {"reflectivity", p.reflectivity}});
  return j;
}

inline Phantom phantom_from_json(const nlohmann::ordered_json& j) {
  Phantom ph;
  try {
    ph.pitch = j.at("pitch_m").get<double>();
    for (const auto& s : j.at("segments"))
      ph.segments.push_back({s.at("label").get<std::string>(), s.at("depth_m").get<double>(),
                             s.at("height_min_m").get<double>(), s.at("height_max_m").get<double>(),
                             s.at("reflectivity").get<double>()});
    for (const auto& p : j.at("points"))
      ph.points.push_back({{p.at("depth_m").get<double>(), p.at("height_m").get<double>()},
                           p.at("reflectivity").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("phantom sidecar: ") + e.what());
  }
  return ph;
}

inline void write_phantom_sidecar(const std::filesystem::path& path, const Phantom& ph, double rotation_deg) {
  auto os = detail::open_out(path);
  os << phantom_to_json(ph, rotation_deg).dump(2) << '\n';
}

inline Phantom read_phantom_sidecar(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  try {
    return phantom_from_json(nlohmann::ordered_json::parse(is));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// System-matrix cache: magic, 64-bit content key, shape, then CSC arrays in
// native byte order. Only ever read back by the machine that wrote it.

inline constexpr char kCacheMagic[8] = {'U', 'M', 'B', 'S', 'M', 'X', '0', '1'};

inline std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a({reinterpret_cast<const unsigned char*>(s.data()), s.size()}, h);
}

namespace detail {

template <typename T>
void put_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_raw_span(std::ostream& os, std::span<const T> v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T get_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("cache file is truncated");
  return v;
}

template <typename T>
std::vector<T> get_raw_vec(std::istream& is, std::size_t n) {
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!is) throw IoError("cache file is truncated");
  return v;
}

}  // namespace detail

inline void write_system_matrix_cache(const std::filesystem::path& path, const SystemMatrix& A, std::uint64_t key) {
  auto os = detail::open_out(path);
  os.write(kCacheMagic, sizeof kCacheMagic);
  const auto& S = A.matrix();
  detail::put_raw<std::uint64_t>(os, key);
  detail::put_raw<std::uint64_t>(os, A.receivers());
  detail::put_raw<std::uint64_t>(os, A.samples());
  detail::put_raw<std::uint64_t>(os, A.cols());
  detail::put_raw<std::uint64_t>(os, S.nnz());
  detail::put_raw<double>(os, A.sample_rate());
  detail::put_raw_span(os, S.col_ptr());
  detail::put_raw_span(os, S.row_indices());
  detail::put_raw_span(os, S.values());
}

/// Returns nullopt when the file is absent, foreign, or keyed differently.
inline std::optional<SystemMatrix> read_system_matrix_cache(const std::filesystem::path& path, std::uint64_t key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[sizeof kCacheMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return std::nullopt;
  try {
    if (detail::get_raw<std::uint64_t>(is) != key) return std::nullopt;
    const auto K = detail::get_raw<std::uint64_t>(is);
    const auto M = detail::get_raw<std::uint64_t>(is);
    const auto N = detail::get_raw<std::uint64_t>(is);
    const auto nnz = detail::get_raw<std::uint64_t>(is);
    const auto fs = detail::get_raw<double>(is);
    auto col_ptr = detail::get_raw_vec<std::size_t>(is, N + 1);
    auto rows = detail::get_raw_vec<SparseMatrix::Index>(is, nnz);
    auto vals = detail::get_raw_vec<double>(is, nnz);
    return SystemMatrix(SparseMatrix(K * M, N, std::move(col_ptr), std::move(rows), std::move(vals)), K, M, fs);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace umbir

#endif  // UMBIR_IO_HPP
