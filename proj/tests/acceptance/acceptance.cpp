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


// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles/dense_map.hpp"
#include "oracles/echo.hpp"
#include "oracles/fermat.hpp"
#include "oracles/random_map.hpp"
#include "umbir/pipeline.hpp"

using namespace umbir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double one_way_oracle(const Point2& a, const Point2& v, const LayerStack& stack) {
  std::vector<oracle::Medium> media;
  for (double leg : stack.legs_to(v.depth - a.depth)) media.push_back({leg, stack[media.size()].speed});
  return oracle::fermat_time(media, a.height, v.height);
}

// ---------------------------------------------------------------------------

Outcome travel_time_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20220);
  std::uniform_int_distribution<int> n_layers(1, 4);
  std::uniform_real_distribution<double> speed(1000.0, 4000.0), thick(0.005, 0.08), height(-0.1, 0.1), unit(0.05, 0.95);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int s = 0; s < 200; ++s) {
    std::vector<Layer> layers;
    const int n = n_layers(rng);
    for (int l = 0; l < n; ++l) layers.push_back({l + 1 == n ? 0.3 : thick(rng), speed(rng), 0.0, 1000.0, {}});
    const LayerStack stack(layers, std::size_t(n - 1));
    const double top = stack.front_depth(std::size_t(n - 1));
    for (int p = 0; p < 3; ++p) {
      const Point2 src{0.0, height(rng)}, rcv{0.0, height(rng)};
      const Point2 vox{top + unit(rng) * 0.3, height(rng)};
      const double t = travel_time(src, vox, rcv, stack);
      const double ref = one_way_oracle(src, vox, stack) + one_way_oracle(rcv, vox, stack);
      worst = std::max(worst, std::abs(t - ref) / ref);
      ++pairs;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("200 stacks, %zu pairs, max rel err %.2e (limit 1e-4), %.1f s (limit 30 s)", pairs, worst, secs)};
}

Outcome forward_model_consistency() {
  const Pulse pulse = Pulse::gaussian_tone(58e3, 2e6);
  const Scene scene = make_cc_phantom(false);
  const VoxelGrid grid{4, 5, 0.01, {0.1, -0.02}};
  const double t0 = default_window_length(pulse);
  const ResponseTable table(pulse, max_gamma(grid, scene.geometry, scene.stack), 256, t0);
  const auto A = build_system_matrix(grid, scene.geometry, scene.stack, table, 8.0, 800, 2e6);
  oracle::EchoModel model(pulse, {table.gamma_max(), 256, t0});
  double peak = 0.0;
  for (double v : A.matrix().values()) peak = std::max(peak, std::abs(v));
  double err = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    std::vector<double> e(grid.size(), 0.0);
    e[v] = 1.0;
    const auto col = forward_project(A, e);
    const auto ref = model.column(grid.center(v), scene.geometry, scene.stack, 8.0, 800);
    for (std::size_t i = 0; i < col.size(); ++i) err = std::max(err, std::abs(col[i] - ref[i]));
  }
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  double adj = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(A.cols()), r(A.rows());
    for (double& v : x) v = n(rng);
    for (double& v : r) v = n(rng);
    const auto Ax = forward_project(A, x);
    const auto Atr = adjoint_project(A, r);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) lhs += Ax[i] * r[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * Atr[i];
    adj = std::max(adj, std::abs(lhs - rhs) / std::abs(lhs));
  }
  return {err < 1e-9 * peak && adj < 1e-12,
          fmt("20 voxels, max |A e_v - model| / peak = %.2e (limit 1e-9), adjoint rel err %.2e (limit 1e-12)",
              err / peak, adj)};
}

// Runs ICD in blocks until one block lowers the cost by less than 1e-12
// relative. Poorly conditioned instances need 1e5+ passes to settle.
SolverState icd_to_plateau(const MAPProblem& pb, std::uint64_t seed, std::size_t& passes_used) {
  constexpr std::size_t block = 5000, cap = 1'500'000;
  auto s = reconstruct(pb, {.max_passes = block, .rel_tol = 0.0, .seed = seed});
  while (s.passes < cap) {
    const double before = s.history.back().total();
    s = resume(pb, std::move(s), {.max_passes = block, .rel_tol = 0.0, .seed = seed + s.passes});
    if (before - s.history.back().total() < 1e-12 * before) break;
  }
  passes_used = std::max(passes_used, s.passes);
  return s;
}

Outcome icd_correctness() {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<std::size_t> side(2, 14), K(2, 4), M(30, 60);
  double worst_obj = 0.0, worst_seed = 0.0, worst_rise = 0.0;
  std::size_t largest = 0, passes = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    std::size_t nd = side(rng), nh = side(rng);
    while (nd * nh > 200) nh = std::max<std::size_t>(2, nh - 1), nd = nd * nh > 200 ? nd - 1 : nd;
    largest = std::max(largest, nd * nh);
    auto in = oracle::random_instance({.n_depth = nd, .n_height = nh, .receivers = K(rng), .samples = M(rng), .seed = 500 + i});
    const auto pb = in->problem();
    const auto dm = oracle::densify(pb);
    const double f_ref = dm.cost(oracle::minimize(dm, 10000));
    const auto a = icd_to_plateau(pb, 1, passes);
    const auto b = icd_to_plateau(pb, 1000 + i, passes);
    const double fa = a.history.back().total();
    const double fb = b.history.back().total();
    worst_obj = std::max(worst_obj, std::abs(fa - f_ref) / f_ref);
    worst_seed = std::max(worst_seed, std::abs(fa - fb) / fa);
    for (const auto* s : {&a, &b})
      for (std::size_t p = 1; p < s->history.size(); ++p)
        worst_rise = std::max(worst_rise, (s->history[p].total() - s->history[p - 1].total()) / s->history[p - 1].total());
  }
  // Recorded costs are recomputed from scratch each pass, so a converged run
  // can wobble at the level of summation round-off.
  const bool monotone = worst_rise <= 1e-13;
  return {worst_obj < 1e-6 && worst_seed < 1e-8 && monotone,
          fmt("20 instances (N <= %zu, up to %zu passes), objective vs oracle %.2e (limit 1e-6), seed spread %.2e (limit 1e-8), "
              "largest cost rise %.2e (round-off allowance 1e-13)",
              largest, passes, worst_obj, worst_seed, worst_rise)};
}

Outcome prior_analytics() {
  const QGGMRFParams prm;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> logmag(-4.0, 2.0), logsig(-1.0, 1.0), sign(-1.0, 1.0);
  double fd_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double d = std::copysign(std::pow(10.0, logmag(rng)), sign(rng));
    const double sigma = std::pow(10.0, logsig(rng));
    const double h = 1e-5 * std::abs(d);
    const double fd = (potential(d + h, sigma, prm) - potential(d - h, sigma, prm)) / (2.0 * h);
    const double an = potential_derivative(d, sigma, prm);
    fd_err = std::max(fd_err, std::abs(fd - an) / std::abs(an));
  }
  double asym_err = 0.0, at = 0.0;
  for (double sigma : {0.1, 1.0, 5.0})
    for (double r = 100.0; r <= 1e6; r *= 1.25) {
      const double d = r * prm.T * sigma;
      const double approx = std::pow(d, prm.p) / (prm.p * std::pow(sigma, prm.p));
      const double e = std::abs(potential(d, sigma, prm) - approx) / approx;
      if (e > asym_err) asym_err = e, at = r;
    }
  auto rejects = [](double p, double q) {
    QGGMRFParams bad;
    bad.p = p;
    bad.q = q;
    try {
      bad.validate();
    } catch (const ValidationError&) {
      return true;
    }
    return false;
  };
  const bool validator = rejects(1.0, 2.0) && rejects(0.8, 2.0) && rejects(1.1, 1.9) && rejects(1.1, 2.1) &&
                         !rejects(1.1, 2.0);
  return {fd_err < 1e-6 && asym_err < 0.01 && validator,
          fmt("rho' vs finite differences %.2e (limit 1e-6); asymptote worst rel err %.4f at |delta| = %.0f T sigma "
              "(limit 0.01; the potential's ratio is u/(1+u), u = (|delta|/T sigma)^(q-p), which is 0.9844 at 100 T sigma); "
              "validator %s",
              fd_err, asym_err, at, validator ? "ok" : "wrong")};
}

// ---------------------------------------------------------------------------
// Shared desk-scale concrete cylinder runs.

struct Cylinder {
  Session session{RunConfig{}};
  SystemMatrix A;
  PriorModel prior;
  std::size_t groove_view = 18;  // 90 degrees of 0..180 in 37 views
  std::size_t plain_view = 0;
  Measurements y_groove, y_plain;
  std::vector<double> umbir_groove, umbir_plain, saft_groove, saft_plain;

  Cylinder() {
    A = session.build_matrix();
    prior = session.prior();
    y_groove = session.simulate_view(groove_view);
    y_plain = session.simulate_view(plain_view);
    umbir_groove = session.reconstruct_umbir(A, prior, y_groove).x;
    umbir_plain = session.reconstruct_umbir(A, prior, y_plain).x;
    saft_groove = session.reconstruct_saft(y_groove);
    saft_plain = session.reconstruct_saft(y_plain);
  }

  /// Recon-grid voxels on the reflector loci of view i.
  std::vector<bool> locus(std::size_t view) const {
    const auto& g = session.grid;
    std::vector<bool> on(g.size(), false);
    for (const auto& s : view_phantom(session.config, view).segments) {
      const long d = std::lround((s.depth - g.origin.depth) / g.pitch);
      if (d < 0 || d >= long(g.n_depth)) continue;
      for (std::size_t h = 0; h < g.n_height; ++h) {
        const double height = g.origin.height + double(h) * g.pitch;
        if (height >= s.height_min - 0.5 * g.pitch && height <= s.height_max + 0.5 * g.pitch)
          on[g.index(std::size_t(d), h)] = true;
      }
    }
    return on;
  }

  /// Depth of the strongest row when the image is summed over the height
  /// span of one reflector segment.
  double peak_depth(const std::vector<double>& x, const ReflectorSegment& s) const {
    const auto& g = session.grid;
    double best = -1e300, depth = 0.0;
    for (std::size_t d = 0; d < g.n_depth; ++d) {
      double sum = 0.0;
      for (std::size_t h = 0; h < g.n_height; ++h) {
        const double height = g.origin.height + double(h) * g.pitch;
        if (height >= s.height_min && height <= s.height_max) sum += x[g.index(d, h)];
      }
      if (sum > best) best = sum, depth = g.origin.depth + double(d) * g.pitch;
    }
    return depth;
  }

  double artifact_fraction(const std::vector<double>& x, std::size_t view) const {
    const auto& g = session.grid;
    const auto on = locus(view);
    double inside = 0.0, total = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
      const long d0 = long(g.depth_index(v)), h0 = long(g.height_index(v));
      bool near = false;
      for (long dd = -3; dd <= 3 && !near; ++dd)
        for (long dh = -3; dh <= 3 && !near; ++dh) {
          const long d = d0 + dd, h = h0 + dh;
          near = d >= 0 && h >= 0 && d < long(g.n_depth) && h < long(g.n_height) && on[g.index(std::size_t(d), std::size_t(h))];
        }
      total += x[v] * x[v];
      if (near) inside += x[v] * x[v];
    }
    return (total - inside) / total;
  }

  double echo_snr_db(std::size_t view) const {
    const std::vector<double> none(session.geometry.receivers.size(), 0.0);
    const auto clean = synthesize_noiseless(view_phantom(session.config, view), session.stack, session.geometry,
                                            session.pulse, session.forward, session.config.simulate.fine_pitch_m,
                                            session.grid.pitch, none);
    return snr_db(clean.data, session.config.simulate.noise_sigma);
  }
};

Outcome localization(const Cylinder& cc) {
  const auto groove_ph = view_phantom(cc.session.config, cc.groove_view);
  const auto plain_ph = view_phantom(cc.session.config, cc.plain_view);
  const auto& groove = *std::find_if(groove_ph.segments.begin(), groove_ph.segments.end(),
                                     [](const auto& s) { return s.label == "groove"; });
  const auto& wall = plain_ph.segments.front();
  const double dg = cc.peak_depth(cc.umbir_groove, groove);
  const double dw = cc.peak_depth(cc.umbir_plain, wall);
  const double snr = std::min(cc.echo_snr_db(cc.groove_view), cc.echo_snr_db(cc.plain_view));
  const double tol = cc.session.grid.pitch * (1.0 + 1e-9);
  return {std::abs(dg - 0.188) <= tol && std::abs(dw - 0.238) <= tol && snr >= 30.0,
          fmt("groove peak %.4f m (0.188), backwall peak %.4f m (0.238), tolerance %.3f m, echo SNR %.1f dB (>= 30)", dg,
              dw, cc.session.grid.pitch, snr)};
}

Outcome artifact_inequality(const Cylinder& cc) {
  const double ug = cc.artifact_fraction(cc.umbir_groove, cc.groove_view);
  const double sg = cc.artifact_fraction(cc.saft_groove, cc.groove_view);
  const double up = cc.artifact_fraction(cc.umbir_plain, cc.plain_view);
  const double sp = cc.artifact_fraction(cc.saft_plain, cc.plain_view);
  return {ug < sg && up < sp,
          fmt("artifact energy fraction, groove view: UMBIR %.3f vs SAFT %.3f; backwall view: UMBIR %.3f vs SAFT %.3f", ug,
              sg, up, sp)};
}

Outcome direct_arrival_recovery(const Cylinder& cc) {
  const auto& D = cc.session.direct;
  const std::size_t K = D.receivers();
  double mean_err = 0.0, worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> gain(0.2, 1.0);
    std::vector<double> g_true(K);
    for (double& g : g_true) g = gain(rng);
    Measurements y;
    y.receivers = K;
    y.samples = D.samples();
    y.sample_rate = cc.session.pulse.sample_rate;
    y.data.assign(K * y.samples, 0.0);
    D.apply_add(g_true, y.data);
    double e = 0.0;
    for (double v : y.data) e += v * v;
    add_noise(y, std::sqrt(e / double(y.data.size())) * 0.01, seed + 77);  // 40 dB
    const auto st = cc.session.reconstruct_umbir(cc.A, cc.prior, y);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      num += (st.g[k] - g_true[k]) * (st.g[k] - g_true[k]);
      den += g_true[k] * g_true[k];
    }
    const double err = std::sqrt(num / den);
    mean_err += err / 20.0;
    worst = std::max(worst, err);
  }
  return {mean_err < 0.01, fmt("x* = 0, 40 dB, 20 seeds: mean rel l2 gain error %.2e, worst %.2e (limit 1e-2)", mean_err, worst)};
}

Outcome performance() {
  RunConfig c;
  c.layers[2].thickness_m = 0.4;
  c.grid = {0.003, 0.052, 0.349, -0.15, 0.147};
  c.forward.samples = 2000;
  const Session s(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto A = s.build_matrix();
  const double build = seconds_since(t0);
  const auto y = s.simulate_view(0);
  SolverOptions opt;
  opt.max_passes = 50;
  opt.rel_tol = 0.0;
  const auto prior = s.prior();
  const MAPProblem pb{A, s.direct, y.data, c.solver.noise_sigma, prior};
  const auto t1 = std::chrono::steady_clock::now();
  const auto st = reconstruct(pb, opt);
  const double solve = seconds_since(t1);
  return {build < 60.0 && solve < 120.0 && st.passes == 50,
          fmt("%zu voxels, %zu receivers, %zu samples, %.2e nonzeros, %u hardware threads: build %.1f s (limit 60), "
              "50 passes %.1f s (limit 120)",
              s.grid.size(), A.receivers(), A.samples(), double(A.matrix().nnz()), std::thread::hardware_concurrency(),
              build, solve)};
}

Outcome determinism() {
  auto run = [](std::size_t threads) {
    RunConfig c;
    const Session s(c);
    const auto A = s.build_matrix(threads);
    const auto y = s.simulate_view(18);
    const auto st = s.reconstruct_umbir(A, s.prior(), y);
    std::ostringstream img, meas;
    write_measurements(meas, y);
    write_image(img, {s.grid, st.x});
    return std::pair{meas.str(), img.str()};
  };
  const auto a = run(1);
  const auto b = run(4);
  return {a == b, fmt("two simulate + reconstruct runs (1 and 4 build threads): measurements %s, image payload %s",
                      a.first == b.first ? "identical" : "DIFFER", a.second == b.second ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };

  report(1, "travel-time oracle equivalence", travel_time_oracle);
  report(2, "forward-model consistency", forward_model_consistency);
  report(3, "ICD correctness", icd_correctness);
  report(4, "prior analytics", prior_analytics);
  std::unique_ptr<Cylinder> cc;
  try {
    cc = std::make_unique<Cylinder>();
  } catch (const std::exception& e) {
    std::printf("cylinder setup failed: %s\n", e.what());
  }
  auto with_cc = [&](Outcome (*fn)(const Cylinder&)) {
    return [&, fn] { return cc ? fn(*cc) : Outcome{false, "no cylinder run"}; };
  };
  report(5, "phantom localization", with_cc(localization));
  report(6, "UMBIR vs SAFT artifact energy", with_cc(artifact_inequality));
  report(7, "direct-arrival recovery", with_cc(direct_arrival_recovery));
  cc.reset();
  report(8, "performance", performance);
  report(9, "determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
