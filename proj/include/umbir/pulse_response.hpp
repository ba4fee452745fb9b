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

#ifndef UMBIR_PULSE_RESPONSE_HPP
#define UMBIR_PULSE_RESPONSE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "umbir/errors.hpp"
#include "umbir/fft.hpp"

namespace umbir {

/// Transmitted waveform s(t), sampled from t = 0.
struct Pulse {
  std::vector<double> samples;
  double sample_rate = 0.0;       // Hz
  double center_frequency = 0.0;  // Hz

  void validate() const {
    detail::require(sample_rate > 2.0 * center_frequency, "pulse sample rate must exceed twice the center frequency");
    detail::require(center_frequency > 0.0, "pulse center frequency must be positive");
    double energy = 0.0;
    for (double s : samples) energy += s * s;
    detail::require(energy > 0.0, "pulse has zero energy");
  }

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  /// Gaussian-windowed cosine exp(-((t - tc)/w)^2) cos(2 pi f0 (t - tc)) with
  /// w = envelope_cycles / f0, tc = 3w, sampled over [0, 6w).
  static Pulse gaussian_tone(double center_frequency, double sample_rate, double envelope_cycles = 1.0) {
    detail::require(envelope_cycles > 0.0, "envelope width must be positive");
    Pulse p;
    p.center_frequency = center_frequency;
    p.sample_rate = sample_rate;
    const double w = envelope_cycles / center_frequency;
    const double tc = 3.0 * w;
    const auto n = static_cast<std::size_t>(std::ceil(6.0 * w * sample_rate));
    p.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate - tc;
      p.samples[i] = std::exp(-(t / w) * (t / w)) * std::cos(2.0 * std::numbers::pi * center_frequency * t);
    }
    p.validate();
    return p;
  }
};

/// Transform length used for attenuation filtering: power of two >= 4x the pulse.
inline std::size_t response_transform_length(const Pulse& pulse) {
  return next_pow2(4 * pulse.samples.size());
}

/// Inverse transform of S(f) * tau * exp(-gamma |f|). The result spans one
/// full period of the padded transform; the filter is even in f, so the
/// output is real.
inline std::vector<double> attenuated_response(const Pulse& pulse, double gamma, double tau) {
  detail::require(gamma >= 0.0, "gamma must be non-negative");
  detail::require(tau > 0.0, "transmittance must be positive");
  RealFft fft(response_transform_length(pulse));
  auto spectrum = fft.forward(pulse.samples);
  const double df = pulse.sample_rate / static_cast<double>(fft.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    spectrum[k] *= tau * std::exp(-gamma * df * static_cast<double>(k));
  return fft.inverse(spectrum);
}

/// Number of samples kept by the window [0, t0).
inline std::size_t window_samples(double t0, double sample_rate) {
  detail::require(t0 > 0.0, "window length must be positive");
  return static_cast<std::size_t>(std::ceil(t0 * sample_rate - 1e-9));
}

/// h(t) rect(t/t0 - 1/2), truncated to ceil(t0 fs) samples.
inline std::vector<double> window_response(std::span<const double> h, double t0, double sample_rate) {
  std::vector<double> out(window_samples(t0, sample_rate), 0.0);
  std::copy_n(h.begin(), std::min(h.size(), out.size()), out.begin());
  return out;
}

/// Smallest window retaining `fraction` of the unattenuated response energy.
inline double default_window_length(const Pulse& pulse, double fraction = 0.999) {
  detail::require(fraction > 0.0 && fraction <= 1.0, "energy fraction must lie in (0, 1]");
  double total = 0.0;
  for (double s : pulse.samples) total += s * s;
  double acc = 0.0;
  std::size_t n = 0;
  while (n < pulse.samples.size() && acc < fraction * total) {
    acc += pulse.samples[n] * pulse.samples[n];
    ++n;
  }
  return static_cast<double>(std::max<std::size_t>(n, 1)) / pulse.sample_rate;
}

/// Windowed responses h~(gamma, t) precomputed on a uniform gamma grid.
/// Lookups interpolate linearly between bracketing grid rows.
class ResponseTable {
 public:
  ResponseTable() = default;

  ResponseTable(const Pulse& pulse, double gamma_max, std::size_t n_grid, double t0)
      : gamma_max_(gamma_max), t0_(t0), sample_rate_(pulse.sample_rate) {
    pulse.validate();
    detail::require(n_grid >= 2, "gamma grid needs at least two points");
    detail::require(gamma_max >= 0.0, "gamma_max must be non-negative");
    length_ = window_samples(t0, sample_rate_);
    step_ = gamma_max / static_cast<double>(n_grid - 1);
    grid_.resize(n_grid);
    rows_.resize(n_grid * length_);

    RealFft fft(response_transform_length(pulse));
    const auto spectrum = fft.forward(pulse.samples);
    const double df = sample_rate_ / static_cast<double>(fft.size());
    std::vector<std::complex<double>> filtered(spectrum.size());
    for (std::size_t i = 0; i < n_grid; ++i) {
      grid_[i] = step_ * static_cast<double>(i);
      for (std::size_t k = 0; k < spectrum.size(); ++k)
        filtered[k] = spectrum[k] * std::exp(-grid_[i] * df * static_cast<double>(k));
      const auto h = fft.inverse(filtered);
      std::copy_n(h.begin(), std::min(h.size(), length_), rows_.begin() + static_cast<std::ptrdiff_t>(i * length_));
    }
  }

  std::span<const double> gamma_grid() const { return grid_; }
  double gamma_max() const { return gamma_max_; }
  double window_length() const { return t0_; }
  double sample_rate() const { return sample_rate_; }
  std::size_t response_length() const { return length_; }

  std::span<const double> row(std::size_t i) const { return {rows_.data() + i * length_, length_}; }

  /// Writes h~(gamma, .) into `out` (response_length() samples).
  void lookup_into(double gamma, std::span<double> out) const {
    detail::require_dims(out.size() == length_, "lookup buffer has the wrong length");
    if (gamma < 0.0 || gamma > gamma_max_ * (1.0 + 1e-12))
      throw GammaOutOfRange("gamma " + std::to_string(gamma) + " outside table range [0, " +
                            std::to_string(gamma_max_) + "]");
    if (step_ == 0.0) {
      std::copy_n(row(0).begin(), length_, out.begin());
      return;
    }
    const double u = std::min(gamma / step_, static_cast<double>(grid_.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(u), grid_.size() - 2);
    const double w = u - static_cast<double>(i);
    const auto a = row(i);
    const auto b = row(i + 1);
    for (std::size_t t = 0; t < length_; ++t) out[t] = (1.0 - w) * a[t] + w * b[t];
  }

  std::vector<double> lookup(double gamma) const {
    std::vector<double> out(length_);
    lookup_into(gamma, out);
    return out;
  }

 private:
  double gamma_max_ = 0.0;
  double t0_ = 0.0;
  double sample_rate_ = 0.0;
  double step_ = 0.0;
  std::size_t length_ = 0;
  std::vector<double> grid_;
  std::vector<double> rows_;
};

}  // namespace umbir

#endif  // UMBIR_PULSE_RESPONSE_HPP
