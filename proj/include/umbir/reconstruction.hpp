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

#ifndef UMBIR_RECONSTRUCTION_HPP
#define UMBIR_RECONSTRUCTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/prior_model.hpp"
#include "umbir/system_model.hpp"

namespace umbir {

/// Everything the MAP objective
///   (1 / 2 sigma^2) ||y - A x - D g||^2 + sum_{s,r} b_{s,r} rho(x_s - x_r)
/// depends on. The problem borrows its operators; they must outlive it.
struct MAPProblem {
  const SystemMatrix& A;
  const DirectArrivalBasis& D;
  std::span<const double> y;
  double noise_sigma;
  const PriorModel& prior;

  void validate() const {
    detail::require(noise_sigma > 0.0, "noise sigma must be positive");
    detail::require_dims(y.size() == A.rows(), "measurement length must equal K*M");
    detail::require_dims(D.receivers() * D.samples() == A.rows(), "direct-arrival basis shape mismatch");
    detail::require_dims(prior.voxels() == A.cols(), "prior and system matrix disagree on voxel count");
  }
};

struct CostTerms {
  double data = 0.0;
  double prior = 0.0;
  double total() const { return data + prior; }
};

struct SolverOptions {
  std::size_t max_passes = 50;
  double rel_tol = 1e-4;
  std::uint64_t seed = 1;
  bool estimate_gains = true;
  /// Evaluates the exact cost change of every update and counts increases.
  bool check_descent = false;
};

struct SolverState {
  std::vector<double> x;
  std::vector<double> g;
  std::vector<double> residual;  // y - A x - D g
  std::vector<CostTerms> history;  // entry 0 is the initial state, then one per pass
  std::size_t passes = 0;
  std::size_t descent_violations = 0;
  double max_residual_drift = 0.0;  // relative, measured at each pass end
};

inline std::vector<double> compute_residual(const MAPProblem& pb, std::span<const double> x, std::span<const double> g) {
  std::vector<double> r(pb.y.begin(), pb.y.end());
  std::vector<double> model(pb.A.rows(), 0.0);
  pb.A.matrix().multiply_add(x, model);
  pb.D.apply_add(g, model);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= model[i];
  return r;
}

/// Objective evaluated from scratch.
inline CostTerms map_cost(std::span<const double> x, std::span<const double> g, const MAPProblem& pb) {
  detail::require_dims(x.size() == pb.A.cols() && g.size() == pb.D.receivers(), "map_cost: dimension mismatch");
  const auto r = compute_residual(pb, x, g);
  double rr = 0.0;
  for (double v : r) rr += v * v;
  return {rr / (2.0 * pb.noise_sigma * pb.noise_sigma), pb.prior.energy(x)};
}

/// Objective using the state's maintained residual.
inline CostTerms map_cost(const SolverState& s, const MAPProblem& pb) {
  double rr = 0.0;
  for (double v : s.residual) rr += v * v;
  return {rr / (2.0 * pb.noise_sigma * pb.noise_sigma), pb.prior.energy(s.x)};
}

/// x = 0 and, when requested, g fitted to the raw data.
inline SolverState initial_state(const MAPProblem& pb, bool estimate_gains = true) {
  pb.validate();
  SolverState s;
  s.x.assign(pb.A.cols(), 0.0);
  s.g = estimate_gains ? pb.D.fit(pb.y) : std::vector<double>(pb.D.receivers(), 0.0);
  s.residual = compute_residual(pb, s.x, s.g);
  s.history.push_back(map_cost(s, pb));
  return s;
}

/// Minimizes the quadratic substitute of the objective in x_v. The data term
/// is exact; each neighbor potential is replaced by its symmetric quadratic
/// majorizer at the current difference.
inline void icd_voxel_update(std::size_t v, SolverState& s, const MAPProblem& pb, bool check_descent = false) {
  const auto rows = pb.A.matrix().column_rows(v);
  const auto vals = pb.A.matrix().column_values(v);
  double ae = 0.0;
  double aa = 0.0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    ae += vals[j] * s.residual[rows[j]];
    aa += vals[j] * vals[j];
  }
  const double inv_var = 1.0 / (pb.noise_sigma * pb.noise_sigma);
  const double theta1 = -ae * inv_var;
  const double theta2 = aa * inv_var;
  const double xs = s.x[v];
  const auto& prm = pb.prior.params();

  double num = theta2 * xs - theta1;
  double den = theta2;
  for (const auto& nb : pb.prior.neighbors(v)) {
    const double c = 2.0 * nb.weight * pb.prior.influence(nb, xs - s.x[nb.voxel]);
    num += c * s.x[nb.voxel];
    den += c;
  }
  if (den <= 0.0) return;  // unobservable and unconstrained
  const double x_new = num / den;
  const double delta = x_new - xs;
  if (delta == 0.0) return;

  if (check_descent) {
    double change = 0.5 * inv_var * (delta * delta * aa - 2.0 * delta * ae);
    double scale = 0.5 * inv_var * (delta * delta * aa + 2.0 * std::abs(delta * ae));
    for (const auto& nb : pb.prior.neighbors(v)) {
      const double before = nb.weight * potential(xs - s.x[nb.voxel], nb.sigma, prm);
      const double after = nb.weight * potential(x_new - s.x[nb.voxel], nb.sigma, prm);
      change += after - before;
      scale += before + after;
    }
    if (change > 1e-12 * scale) ++s.descent_violations;
  }

  s.x[v] = x_new;
  for (std::size_t j = 0; j < rows.size(); ++j) s.residual[rows[j]] -= vals[j] * delta;
}

/// Closed-form gain update; D has orthonormal columns with disjoint supports.
inline void update_gains(SolverState& s, const MAPProblem& pb) {
  const std::size_t M = pb.D.samples();
  for (std::size_t k = 0; k < pb.D.receivers(); ++k) {
    const auto col = pb.D.column(k);
    double c = 0.0;
    for (std::size_t m = 0; m < M; ++m) c += col[m] * s.residual[k * M + m];
    if (c == 0.0) continue;
    s.g[k] += c;
    for (std::size_t m = 0; m < M; ++m) s.residual[k * M + m] -= col[m] * c;
  }
}

/// Continues iterative coordinate descent from `s`. One pass is a sweep over
/// every voxel in a fresh random order followed by a gain update. Stops after
/// `max_passes` more passes or once the relative image change of a pass drops
/// below `rel_tol`.
inline SolverState resume(const MAPProblem& pb, SolverState s, const SolverOptions& opt = {}) {
  pb.validate();
  detail::require(opt.max_passes >= 1, "max_passes must be at least 1");
  detail::require(opt.rel_tol >= 0.0, "rel_tol must be non-negative");
  detail::require_dims(s.x.size() == pb.A.cols() && s.g.size() == pb.D.receivers() && s.residual.size() == pb.A.rows(),
                       "solver state does not fit the problem");
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(pb.A.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> previous;

  double y_norm = 0.0;
  for (double v : pb.y) y_norm += v * v;
  y_norm = std::sqrt(y_norm);

  for (std::size_t pass = 0; pass < opt.max_passes; ++pass) {
    previous = s.x;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t v : order) icd_voxel_update(v, s, pb, opt.check_descent);
    if (opt.estimate_gains) update_gains(s, pb);

    // Refresh the incrementally maintained residual to stop round-off drift.
    auto exact = compute_residual(pb, s.x, s.g);
    double drift = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) drift = std::max(drift, std::abs(exact[i] - s.residual[i]));
    if (y_norm > 0.0) s.max_residual_drift = std::max(s.max_residual_drift, drift / y_norm);
    s.residual = std::move(exact);

    const CostTerms cost = map_cost(s, pb);
    if (!std::isfinite(cost.total())) throw SolverDivergence("objective became non-finite");
    s.history.push_back(cost);
    ++s.passes;

    double dx = 0.0;
    double xx = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      dx += (s.x[i] - previous[i]) * (s.x[i] - previous[i]);
      xx += s.x[i] * s.x[i];
    }
    const double change = xx > 0.0 ? std::sqrt(dx / xx) : std::sqrt(dx);
    if (change < opt.rel_tol) break;
  }
  return s;
}

/// ICD from x = 0 and least-squares gains.
inline SolverState reconstruct(const MAPProblem& pb, const SolverOptions& opt = {}) {
  detail::require(opt.max_passes >= 1, "max_passes must be at least 1");
  detail::require(opt.rel_tol >= 0.0, "rel_tol must be non-negative");
  return resume(pb, initial_state(pb, opt.estimate_gains), opt);
}

}  // namespace umbir

#endif  // UMBIR_RECONSTRUCTION_HPP
