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


#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "umbir/phantom.hpp"
#include "umbir/saft.hpp"

using namespace umbir;

namespace {

Measurements blank(std::size_t K, std::size_t M) {
  Measurements y;
  y.receivers = K;
  y.samples = M;
  y.sample_rate = 2e6;
  y.data.assign(K * M, 0.0);
  return y;
}

Measurements noise(std::size_t K, std::size_t M, std::uint64_t seed) {
  auto y = blank(K, M);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (double& v : y.data) v = n(rng);
  return y;
}

std::size_t peak_sample(const Pulse& p) {
  return std::size_t(std::max_element(p.samples.begin(), p.samples.end(),
                                      [](double a, double b) { return std::abs(a) < std::abs(b); }) -
                     p.samples.begin());
}

}  // namespace

TEST(Saft, ZeroDataGivesZeroImage) {
  const auto scene = make_cc_phantom(false);
  const VoxelGrid grid{5, 5, 0.01, {0.1, 0.0}};
  const auto img = saft_reconstruct(blank(15, 400), grid, scene.stack, scene.geometry, {});
  for (double v : img) EXPECT_EQ(v, 0.0);
}

TEST(Saft, LinearWithoutEnvelope) {
  const auto scene = make_cc_phantom(false);
  const VoxelGrid grid{6, 4, 0.01, {0.1, 0.0}};
  const auto a = noise(15, 600, 1);
  const auto b = noise(15, 600, 2);
  auto c = blank(15, 600);
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] = 2.5 * a.data[i] - 0.75 * b.data[i];
  SaftConfig cfg;
  cfg.apodization_beta = 4.0;
  const auto ia = saft_reconstruct(a, grid, scene.stack, scene.geometry, cfg);
  const auto ib = saft_reconstruct(b, grid, scene.stack, scene.geometry, cfg);
  const auto ic = saft_reconstruct(c, grid, scene.stack, scene.geometry, cfg);
  for (std::size_t v = 0; v < grid.size(); ++v) EXPECT_NEAR(ic[v], 2.5 * ia[v] - 0.75 * ib[v], 1e-12);
}

TEST(Saft, EnvelopeImageIsNonNegative) {
  const auto scene = make_cc_phantom(false);
  const VoxelGrid grid{6, 4, 0.01, {0.1, 0.0}};
  SaftConfig cfg;
  cfg.use_envelope = true;
  for (double v : saft_reconstruct(noise(15, 512, 3), grid, scene.stack, scene.geometry, cfg)) EXPECT_GE(v, 0.0);
}

TEST(Saft, OneLayerDelaysAreStraightLineTimes) {
  const LayerStack water({{0.4, 1480.0, 0.0, 1000.0, {}}}, 0);
  const TransducerGeometry geom{{{0.0, 0.0}}, {{0.0, -0.02}, {0.0, 0.0}, {0.0, 0.03}}, 0.0, 0};
  const VoxelGrid grid{5, 6, 0.01, {0.05, -0.02}};
  // A ramp trace turns each sample lookup into its own fractional position.
  auto y = blank(3, 2000);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t m = 0; m < 2000; ++m) y.data[k * 2000 + m] = double(m);
  SaftConfig cfg;
  cfg.time_reference = 1e-5;
  const auto img = saft_reconstruct(y, grid, water, geom, cfg);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const auto p = grid.center(v);
    double expected = 0.0;
    for (const auto& r : geom.receivers) {
      const double t = (std::hypot(p.depth, p.height) + std::hypot(p.depth, p.height - r.height)) / 1480.0;
      expected += (t + cfg.time_reference) * 2e6;
    }
    EXPECT_NEAR(img[v], expected, 1e-8 * expected);
  }
  cfg.interpolation = Interpolation::nearest;
  const auto rounded = saft_reconstruct(y, grid, water, geom, cfg);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    EXPECT_NEAR(rounded[v], img[v], 1.5);
    EXPECT_EQ(rounded[v], std::round(rounded[v]));
  }
}

TEST(Saft, SingleScattererPeaksAtItsVoxel) {
  const auto scene = make_cc_phantom(false);
  const Pulse pulse = Pulse::gaussian_tone(58e3, 2e6);
  const VoxelGrid grid{9, 9, 0.005, {0.11, -0.01}};
  const std::size_t truth = grid.index(5, 4);
  Phantom ph;
  ph.points.push_back({grid.center(truth), 1.0});
  const std::vector<double> g(15, 0.0);
  const auto y = synthesize_noiseless(ph, scene.stack, scene.geometry, pulse, {}, 0.001, 0.005, g);
  SaftConfig cfg;
  cfg.time_reference = double(peak_sample(pulse)) / pulse.sample_rate;
  const auto img = saft_reconstruct(y, grid, scene.stack, scene.geometry, cfg);
  EXPECT_EQ(std::size_t(std::max_element(img.begin(), img.end()) - img.begin()), truth);
}

TEST(Saft, DirectArrivalsAreRemoved) {
  const auto scene = make_cc_phantom(false);
  const Pulse pulse = Pulse::gaussian_tone(58e3, 2e6);
  const ResponseTable table(pulse, 1e-4, 64, default_window_length(pulse));
  const auto D = build_direct_arrival_basis(scene.geometry, scene.stack, table, 500);
  auto y = blank(15, 500);
  D.apply_add(std::vector<double>(15, 3.0), y.data);
  const VoxelGrid grid{5, 5, 0.01, {0.06, 0.0}};
  const auto img = saft_reconstruct(y, grid, scene.stack, scene.geometry, {}, &D);
  for (double v : img) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Saft, Errors) {
  const auto scene = make_cc_phantom(false);
  const VoxelGrid grid{2, 2, 0.01, {0.1, 0.0}};
  EXPECT_THROW(saft_reconstruct(blank(3, 100), grid, scene.stack, scene.geometry, {}), DimensionMismatch);
  SaftConfig bad;
  bad.apodization_beta = -1.0;
  EXPECT_THROW(saft_reconstruct(blank(15, 100), grid, scene.stack, scene.geometry, bad), ValidationError);
}
