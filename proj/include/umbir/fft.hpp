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

#ifndef UMBIR_FFT_HPP
#define UMBIR_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

namespace umbir {

namespace detail {

// FFTW's planner is not thread safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Next power of two >= n.
inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Real-to-complex / complex-to-real transform pair of a fixed length.
/// The inverse is normalized, so inverse(forward(x)) == x.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), real_(n), spectrum_(n / 2 + 1) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* cplx = reinterpret_cast<fftw_complex*>(spectrum_.data());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_.data(), cplx, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), cplx, real_.data(), FFTW_ESTIMATE);
  }

  ~RealFft() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }

  /// Zero-pads (or truncates) `signal` to the transform length.
  std::vector<std::complex<double>> forward(std::span<const double> signal) {
    std::fill(real_.begin(), real_.end(), 0.0);
    std::copy_n(signal.begin(), std::min(signal.size(), n_), real_.begin());
    fftw_execute(forward_);
    return spectrum_;
  }

  std::vector<double> inverse(std::span<const std::complex<double>> spectrum) {
    std::copy_n(spectrum.begin(), spectrum_.size(), spectrum_.begin());
    fftw_execute(inverse_);
    std::vector<double> out(real_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (double& v : out) v *= scale;
    return out;
  }

 private:
  std::size_t n_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// Magnitude of the analytic signal (discrete Hilbert transform).
inline std::vector<double> analytic_envelope(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n == 0) return {};
  std::vector<std::complex<double>> full(n);
  for (std::size_t i = 0; i < n; ++i) full[i] = signal[i];
  std::vector<std::complex<double>> out(n);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    auto* in_ptr = reinterpret_cast<fftw_complex*>(full.data());
    auto* out_ptr = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), in_ptr, out_ptr, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_1d(static_cast<int>(n), out_ptr, in_ptr, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    // One-sided spectrum: keep DC and Nyquist, double positive frequencies.
    for (std::size_t k = 1; k < n; ++k) {
      if (2 * k < n) out[k] *= 2.0;
      else if (2 * k > n) out[k] = 0.0;
    }
    fftw_execute(inv);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(full[i]) / static_cast<double>(n);
  return env;
}

}  // namespace umbir

#endif  // UMBIR_FFT_HPP
