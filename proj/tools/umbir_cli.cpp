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

// umbir command-line front end.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "umbir/umbir.hpp"

namespace fs = std::filesystem;
using namespace umbir;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::size_t> views;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

RunConfig load(const Common& opt) {
  RunConfig c = load_config(opt.config);
  if (!opt.out.empty()) c.out_dir = opt.out;
  if (opt.views) {
    detail::require(*opt.views >= 1, "--views must be at least 1");
    c.simulate.views = *opt.views;
  }
  return c;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void for_each_view(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t w = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (w == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

int cmd_simulate(const Common& opt) {
  RunConfig c = load(opt);
  if (opt.seed) c.simulate.seed = *opt.seed;
  const Session session(c);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  std::mutex log;
  for_each_view(c.simulate.views, opt.jobs, [&](std::size_t i) {
    const Measurements y = session.simulate_view(i);
    const auto stem = view_stem(i);
    write_measurements(dir / (stem + ".meas"), y);
    write_phantom_sidecar(dir / (stem + ".phantom.json"), view_phantom(c, i), y.rotation_deg);
    std::lock_guard lock(log);
    std::cout << stem << ".meas  rotation " << y.rotation_deg << " deg\n";
  });
  return 0;
}

int cmd_reconstruct(const Common& opt, const std::string& method, const std::string& input) {
  if (method != "umbir" && method != "saft") throw ValidationError("unknown method '" + method + "'");
  RunConfig c = load(opt);
  if (opt.seed) c.solver.seed = *opt.seed;
  const Session session(c);
  const fs::path in_dir = input.empty() ? fs::path(c.out_dir) : fs::path(input);
  const fs::path out_dir = c.out_dir;
  fs::create_directories(out_dir);

  std::vector<std::size_t> views;
  for (std::size_t i = 0; i < c.simulate.views; ++i)
    if (fs::exists(in_dir / (view_stem(i) + ".meas"))) views.push_back(i);
  if (views.empty()) throw IoError("no measurement files found in " + in_dir.string());

  std::optional<SystemMatrix> A;
  std::optional<PriorModel> prior;
  if (method == "umbir") {
    const auto t0 = std::chrono::steady_clock::now();
    A.emplace(session.matrix(out_dir / "system_matrix.cache", 0, &std::cerr));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "system matrix " << A->rows() << " x " << A->cols() << ", " << A->matrix().nnz() << " nonzeros ("
              << secs << " s)\n";
    prior.emplace(session.prior());
  }

  std::mutex log;
  for_each_view(views.size(), opt.jobs, [&](std::size_t j) {
    const auto stem = view_stem(views[j]);
    const Measurements y = read_measurements(in_dir / (stem + ".meas"));
    Image img{session.grid, {}};
    nlohmann::ordered_json extra{{"rotation_deg", y.rotation_deg}, {"method", method}};
    std::string note;
    if (method == "umbir") {
      const SolverState s = session.reconstruct_umbir(*A, *prior, y);
      img.values = s.x;
      write_cost_history(out_dir / (stem + ".umbir.cost.csv"), s.history);
      note = std::to_string(s.passes) + " passes";
    } else {
      img.values = session.reconstruct_saft(y);
    }
    write_image(out_dir / (stem + "." + method + ".img"), img, extra);
    std::lock_guard lock(log);
    std::cout << stem << "." << method << ".img" << (note.empty() ? "" : "  " + note) << '\n';
  });
  return 0;
}

int cmd_compose_polar(const std::string& input, const std::string& method, std::size_t row, std::size_t factor,
                      const std::string& output) {
  std::vector<std::pair<double, std::vector<double>>> views;
  std::optional<VoxelGrid> grid;
  std::vector<fs::path> files;
  const std::string suffix = "." + method + ".img";
  for (const auto& e : fs::directory_iterator(input)) {
    const auto name = e.path().filename().string();
    if (name.starts_with("view_") && name.ends_with(suffix)) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    nlohmann::ordered_json header;
    const Image img = read_image(f, &header);
    if (!header.contains("rotation_deg")) throw IoError(f.string() + " carries no rotation_deg");
    if (grid && !(*grid == img.grid)) throw ValidationError("views use different grids");
    grid = img.grid;
    views.emplace_back(header["rotation_deg"].get<double>(), extract_height_row(img, row));
  }
  if (views.size() < 2) throw IoError("compose-polar needs at least two " + suffix + " views in " + input);
  const PolarComposite pc = compose_polar(std::move(views), factor);
  write_image(output, polar_image(pc, grid->origin.depth, grid->pitch),
              {{"kind", "polar"},
               {"height_row", row},
               {"factor", factor},
               {"angle_first_deg", pc.angles_deg.front()},
               {"angle_last_deg", pc.angles_deg.back()},
               {"angle_samples", pc.angles_deg.size()}});
  std::cout << output << "  " << pc.angles_deg.size() << " angles x " << pc.radial_samples << " depths\n";
  return 0;
}

int cmd_render(const std::string& input, const std::string& scale, const std::string& output,
               const std::string& sidecar) {
  const Scale s = parse_scale(scale);
  const Image img = read_image(input);
  Raster r = render_image(img, s);
  if (!sidecar.empty()) overlay_markers(r, img.grid, read_phantom_sidecar(sidecar));
  write_pgm(output, r);
  std::cout << output << "  " << r.width << " x " << r.height << '\n';
  return 0;
}

int cmd_info(const Common& opt) {
  const RunConfig c = load(opt);
  const Session session(c);
  std::cout << serialize_config(c);
  std::cout << "# grid " << session.grid.n_depth << " x " << session.grid.n_height << " = " << session.grid.size()
            << " voxels\n";
  std::cout << "# pulse " << session.pulse.samples.size() << " samples, response window "
            << session.table.response_length() << " samples\n";
  std::cout << "# gamma max " << session.table.gamma_max() << " s\n";
  std::cout << "# path transmittance " << session.stack.path_transmittance() << '\n';
  return 0;
}

void add_common(CLI::App* sub, Common& opt, bool pipeline) {
  sub->add_option("--config", opt.config, "run configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", opt.out, "output directory (overrides paths.out)");
  if (pipeline) {
    sub->add_option("--views", opt.views, "number of rotational views");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--jobs", opt.jobs, "views processed concurrently")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasonic model-based iterative reconstruction"};
  app.require_subcommand(1);

  Common sim;
  auto* simulate = app.add_subcommand("simulate", "synthesize measurements for every view");
  add_common(simulate, sim, true);

  Common rec;
  std::string method = "umbir";
  std::string rec_input;
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct every measured view");
  add_common(reconstruct, rec, true);
  reconstruct->add_option("--method", method, "umbir or saft");
  reconstruct->add_option("--input", rec_input, "measurement directory (default: output directory)");

  Common saft;
  std::string saft_input;
  auto* saft_cmd = app.add_subcommand("saft", "delay-and-sum reconstruction of every measured view");
  add_common(saft_cmd, saft, true);
  saft_cmd->add_option("--input", saft_input, "measurement directory (default: output directory)");

  std::string polar_input;
  std::string polar_method = "umbir";
  std::string polar_output;
  std::size_t polar_row = 0;
  std::size_t polar_factor = 5;
  std::string polar_config;
  auto* polar = app.add_subcommand("compose-polar", "stack one height row of every view by angle");
  polar->add_option("--input", polar_input, "directory holding view images")->required()->check(CLI::ExistingDirectory);
  polar->add_option("--row", polar_row, "height row index")->required();
  polar->add_option("--factor", polar_factor, "angular interpolation factor");
  polar->add_option("--method", polar_method, "which reconstructions to compose");
  polar->add_option("--output", polar_output, "composite image file")->required();
  polar->add_option("--config", polar_config, "accepted for symmetry; unused");

  std::string render_input;
  std::string render_scale = "linear";
  std::string render_output;
  std::string render_sidecar;
  std::string render_config;
  auto* render = app.add_subcommand("render", "write an image file as an 8-bit PGM");
  render->add_option("--input", render_input, "image file")->required()->check(CLI::ExistingFile);
  render->add_option("--scale", render_scale, "linear or db");
  render->add_option("--output", render_output, "PGM file")->required();
  render->add_option("--sidecar", render_sidecar, "phantom sidecar for ground-truth markers")
      ->check(CLI::ExistingFile);
  render->add_option("--config", render_config, "accepted for symmetry; unused");

  Common inf;
  auto* info = app.add_subcommand("info", "print the resolved configuration");
  add_common(info, inf, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*reconstruct) return cmd_reconstruct(rec, method, rec_input);
    if (*saft_cmd) return cmd_reconstruct(saft, "saft", saft_input);
    if (*polar) return cmd_compose_polar(polar_input, polar_method, polar_row, polar_factor, polar_output);
    if (*render) return cmd_render(render_input, render_scale, render_output, render_sidecar);
    if (*info) return cmd_info(inf);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
