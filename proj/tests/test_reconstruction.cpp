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
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles/dense_map.hpp"
#include "oracles/random_map.hpp"
#include "umbir/phantom.hpp"
#include "umbir/reconstruction.hpp"

using namespace umbir;

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d) / norm2(b);
}

std::vector<double> joined(const SolverState& s) {
  std::vector<double> z(s.x);
  z.insert(z.end(), s.g.begin(), s.g.end());
  return z;
}

}  // namespace

TEST(MapCost, ZeroAtOrigin) {
  auto in = oracle::random_instance({});
  std::fill(in->y.begin(), in->y.end(), 0.0);
  const std::vector<double> x(in->grid.size(), 0.0);
  const std::vector<double> g(3, 0.0);
  const auto c = map_cost(x, g, in->problem());
  EXPECT_EQ(c.data, 0.0);
  EXPECT_EQ(c.prior, 0.0);
}

TEST(MapCost, ConstantShiftOnlyMovesDataTerm) {
  auto in = oracle::random_instance({.seed = 4});
  auto x = in->x_true;
  const auto before = map_cost(x, in->g_true, in->problem());
  for (double& v : x) v += 0.7;
  const auto after = map_cost(x, in->g_true, in->problem());
  EXPECT_NEAR(after.prior, before.prior, 1e-12 * before.prior);
  EXPECT_GT(std::abs(after.data - before.data), 1e-3);
}

TEST(MapCost, MatchesDenseEvaluation) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto in = oracle::random_instance({.seed = seed});
    const auto dm = oracle::densify(in->problem());
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> n;
    std::vector<double> z(dm.n + dm.k);
    for (double& v : z) v = n(rng);
    const std::vector<double> x(z.begin(), z.begin() + long(dm.n));
    const std::vector<double> g(z.begin() + long(dm.n), z.end());
    EXPECT_NEAR(map_cost(x, g, in->problem()).total(), dm.cost(z), 1e-11 * dm.cost(z));
  }
}

TEST(MapCost, RejectsBadShapes) {
  auto in = oracle::random_instance({});
  const std::vector<double> x(in->grid.size() + 1, 0.0);
  EXPECT_THROW(map_cost(x, in->g_true, in->problem()), DimensionMismatch);
}

TEST(IcdUpdate, ZeroColumnWithEqualNeighborsIsStationary) {
  const VoxelGrid grid{3, 3, 0.003, {0.1, 0.0}};
  const std::size_t K = 2, M = 10, center = grid.index(1, 1);
  std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
  for (std::size_t c = 0; c < grid.size(); ++c)
    if (c != center) trip.emplace_back(c % (K * M), c, 1.0 + double(c));
  const SystemMatrix A(SparseMatrix::from_triplets(K * M, grid.size(), trip), K, M, 2e6);
  std::vector<double> templ(K * M, 0.0);
  templ[0] = templ[M] = 1.0;
  const DirectArrivalBasis D(K, M, templ);
  const auto prior = PriorModel::for_grid(grid, {});
  const std::vector<double> y(K * M, 0.3);
  const MAPProblem pb{A, D, y, 0.1, prior};

  SolverState s;
  s.x.assign(grid.size(), 0.42);
  s.g.assign(K, 0.0);
  s.residual = compute_residual(pb, s.x, s.g);
  icd_voxel_update(center, s, pb);
  EXPECT_EQ(s.x[center], 0.42);
}

TEST(IcdUpdate, SingleVoxelIsScalarLeastSquares) {
  const VoxelGrid grid{1, 1, 0.003, {0.1, 0.0}};
  const std::size_t K = 2, M = 6;
  std::vector<std::tuple<std::size_t, std::size_t, double>> trip{{1, 0, 2.0}, {4, 0, -1.0}, {9, 0, 0.5}};
  const SystemMatrix A(SparseMatrix::from_triplets(K * M, 1, trip), K, M, 2e6);
  std::vector<double> templ(K * M, 0.0);
  templ[0] = 1.0;
  templ[M + 2] = 1.0;
  const DirectArrivalBasis D(K, M, templ);
  const auto prior = PriorModel::for_grid(grid, {});
  ASSERT_TRUE(prior.neighborhood().cliques().empty());
  std::vector<double> y{0.1, 0.9, -0.2, 0.3, 0.4, 0.0, 0.2, -0.1, 0.5, 1.1, 0.0, 0.6};
  const MAPProblem pb{A, D, y, 0.1, prior};

  SolverState s;
  s.x = {0.0};
  s.g = {0.25, -0.5};
  s.residual = compute_residual(pb, s.x, s.g);
  icd_voxel_update(0, s, pb);
  // <a, y - Dg> / |a|^2 with a = (2, -1, 0.5) on rows 1, 4, 9
  const double expected = (2.0 * 0.9 - 1.0 * 0.4 + 0.5 * 1.1) / (4.0 + 1.0 + 0.25);
  EXPECT_NEAR(s.x[0], expected, 1e-15);
  const auto exact = compute_residual(pb, s.x, s.g);
  for (std::size_t i = 0; i < exact.size(); ++i) EXPECT_NEAR(s.residual[i], exact[i], 1e-15);
}

TEST(IcdUpdate, TenVoxelsMatchGradientOracle) {
  for (std::uint64_t seed : {3u, 8u, 21u}) {
    auto in = oracle::random_instance({.n_depth = 2, .n_height = 5, .seed = seed});
    const auto pb = in->problem();
    const auto z = oracle::minimize(oracle::densify(pb), 40000);
    const auto s = reconstruct(pb, {.max_passes = 500, .rel_tol = 0.0, .seed = seed});
    const std::vector<double> x_ref(z.begin(), z.begin() + 10);
    EXPECT_LT(rel_diff(s.x, x_ref), 1e-5) << "seed " << seed;
  }
}

TEST(UpdateGains, RecoversExactGains) {
  auto in = oracle::random_instance({.seed = 5});
  std::fill(in->y.begin(), in->y.end(), 0.0);
  in->D.apply_add(in->g_true, in->y);
  const auto pb = in->problem();
  SolverState s;
  s.x.assign(in->grid.size(), 0.0);
  s.g.assign(3, 0.0);
  s.residual = compute_residual(pb, s.x, s.g);
  update_gains(s, pb);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.g[k], in->g_true[k], 1e-13 * std::abs(in->g_true[k]));
}

TEST(UpdateGains, OrthogonalDataGivesZero) {
  auto in = oracle::random_instance({.seed = 6});
  const auto fit = in->D.fit(in->y);
  std::vector<double> minus(fit.size());
  for (std::size_t k = 0; k < fit.size(); ++k) minus[k] = -fit[k];
  in->D.apply_add(minus, in->y);
  const auto pb = in->problem();
  SolverState s;
  s.x.assign(in->grid.size(), 0.0);
  s.g.assign(3, 0.0);
  s.residual = compute_residual(pb, s.x, s.g);
  update_gains(s, pb);
  for (double g : s.g) EXPECT_NEAR(g, 0.0, 1e-13);
}

TEST(UpdateGains, FortyDecibelRecovery) {
  std::size_t within = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto in = oracle::random_instance({.samples = 200, .seed = seed});
    std::vector<double> clean(in->y.size(), 0.0);
    in->D.apply_add(in->g_true, clean);
    const double sigma = norm2(clean) / std::sqrt(double(clean.size())) * 0.01;
    std::mt19937_64 rng(seed * 7);
    std::normal_distribution<double> n(0.0, sigma);
    in->y = clean;
    for (double& v : in->y) v += n(rng);
    const auto pb = in->problem();
    SolverState s;
    s.x.assign(in->grid.size(), 0.0);
    s.g.assign(3, 0.0);
    s.residual = compute_residual(pb, s.x, s.g);
    update_gains(s, pb);
    within += rel_diff(s.g, in->g_true) < 0.01;
  }
  EXPECT_EQ(within, 20u);
}

TEST(Reconstruct, PassContract) {
  auto in = oracle::random_instance({.seed = 2});
  EXPECT_THROW(reconstruct(in->problem(), {.max_passes = 0}), ValidationError);
  const auto s = reconstruct(in->problem(), {.max_passes = 1, .rel_tol = 0.0});
  EXPECT_EQ(s.passes, 1u);
  EXPECT_EQ(s.history.size(), 2u);
  EXPECT_LT(s.history[1].total(), s.history[0].total());
}

TEST(Reconstruct, StopsOnRelativeChange) {
  auto in = oracle::random_instance({.seed = 2});
  const auto s = reconstruct(in->problem(), {.max_passes = 10000, .rel_tol = 1e-3});
  EXPECT_LT(s.passes, 10000u);
  EXPECT_GT(s.passes, 1u);
}

TEST(Reconstruct, MonotoneResidualExactDescentEverywhere) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto in = oracle::random_instance({.n_depth = 5, .n_height = 6, .seed = seed});
    const auto s = reconstruct(in->problem(), {.max_passes = 60, .rel_tol = 0.0, .seed = seed, .check_descent = true});
    EXPECT_EQ(s.descent_violations, 0u);
    EXPECT_LT(s.max_residual_drift, 1e-9);
    // Once converged, the recomputed cost only moves by summation round-off.
    for (std::size_t i = 1; i < s.history.size(); ++i)
      EXPECT_LE(s.history[i].total(), s.history[i - 1].total() * (1.0 + 1e-13)) << "pass " << i;
    const auto exact = compute_residual(in->problem(), s.x, s.g);
    EXPECT_LT(rel_diff(s.residual, exact), 1e-9);
  }
}

TEST(Reconstruct, SweepOrderDoesNotChangeOptimum) {
  auto in = oracle::random_instance({.n_depth = 6, .n_height = 6, .seed = 12});
  const auto a = reconstruct(in->problem(), {.max_passes = 3000, .rel_tol = 0.0, .seed = 1});
  const auto b = reconstruct(in->problem(), {.max_passes = 3000, .rel_tol = 0.0, .seed = 99});
  const double fa = a.history.back().total();
  const double fb = b.history.back().total();
  EXPECT_NEAR(fa, fb, 1e-8 * fa);
}

TEST(Reconstruct, DenseOracleObjective) {
  auto in = oracle::random_instance({.n_depth = 4, .n_height = 6, .seed = 30});
  const auto dm = oracle::densify(in->problem());
  const auto z = oracle::minimize(dm, 40000);
  const auto s = reconstruct(in->problem(), {.max_passes = 3000, .rel_tol = 0.0});
  const double f_ref = dm.cost(z);
  EXPECT_LE(s.history.back().total(), f_ref * (1.0 + 1e-6));
  EXPECT_NEAR(dm.cost(joined(s)), s.history.back().total(), 1e-10 * f_ref);
}

TEST(Reconstruct, SingleScattererPeaksAtTrueVoxel) {
  const Pulse pulse = Pulse::gaussian_tone(58e3, 2e6);
  const Scene scene = make_cc_phantom(false);
  // Heights kept inside the tilted beam; voxels it barely reaches are left to the prior.
  const VoxelGrid grid{6, 5, 0.01, {0.1, -0.01}};
  const ResponseTable table(pulse, max_gamma(grid, scene.geometry, scene.stack), 256, default_window_length(pulse));
  const auto A = build_system_matrix(grid, scene.geometry, scene.stack, table, 8.0, 800, 2e6);
  const auto D = build_direct_arrival_basis(scene.geometry, scene.stack, table, 800);
  QGGMRFParams prm;
  prm.sigma0 = 100.0;
  const auto prior = PriorModel::for_grid(grid, prm);
  const std::size_t truth = grid.index(3, 2);
  std::vector<double> e(grid.size(), 0.0);
  e[truth] = 1.0;
  const auto y = forward_project(A, e);
  const MAPProblem pb{A, D, y, 0.01, prior};
  const auto s = reconstruct(pb, {.max_passes = 50});
  const auto peak = std::max_element(s.x.begin(), s.x.end()) - s.x.begin();
  EXPECT_EQ(std::size_t(peak), truth);
}

TEST(Reconstruct, NonFiniteCostIsDivergence) {
  auto in = oracle::random_instance({.seed = 2});
  in->y[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(reconstruct(in->problem(), {.max_passes = 2}), SolverDivergence);
}

TEST(Reconstruct, ResumeContinuesTheHistory) {
  auto in = oracle::random_instance({.seed = 14});
  const auto pb = in->problem();
  auto s = reconstruct(pb, {.max_passes = 5, .rel_tol = 0.0});
  s = resume(pb, std::move(s), {.max_passes = 7, .rel_tol = 0.0, .seed = 2});
  EXPECT_EQ(s.passes, 12u);
  EXPECT_EQ(s.history.size(), 13u);
  for (std::size_t i = 1; i < s.history.size(); ++i) EXPECT_LE(s.history[i].total(), s.history[i - 1].total() * (1.0 + 1e-13));
  SolverState bad = s;
  bad.x.pop_back();
  EXPECT_THROW(resume(pb, bad, {}), DimensionMismatch);
}
