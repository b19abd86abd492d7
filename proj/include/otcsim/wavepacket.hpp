// Copyright 2026 The otcsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Temporal detector envelopes and the overlap that sets xi for a clock
// offset dT:
//
//   xi = Int G1(t + dT) G2(t) dt / Int G1(t) G2(t) dt.
//
// Envelopes are real, unit-norm Gaussian amplitudes.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "otcsim/timelike.hpp"

namespace otcsim::wavepacket {

struct WavePacket {
  double center = 0.0;
  double width = 1.0;  // standard deviation of the amplitude

  WavePacket() = default;
  WavePacket(double c, double w) : center(c), width(w) {
    otcsim::detail::require(std::isfinite(c), "WavePacket: center must be finite");
    otcsim::detail::require(std::isfinite(w) && w > 0.0, "WavePacket: width must be positive");
  }

  /// Amplitude with Int G(t)^2 dt = 1.
  double operator()(double t) const {
    const double z = (t - center) / width;
    return std::exp(-0.5 * z * z - 0.5 * std::log(width) - 0.25 * std::log(kPi));
  }
};

inline bool same_shape(const WavePacket& a, const WavePacket& b) {
  return a.center == b.center && a.width == b.width;
}

namespace detail {

/// Int a(t + shift) b(t) dt by adaptive Gauss-Kronrod on a window around the
/// peak of the integrand.
inline double overlap_integral(const WavePacket& a, const WavePacket& b, double shift) {
  const double sa = a.width * a.width, sb = b.width * b.width;
  const double peak = ((a.center - shift) * sb + b.center * sa) / (sa + sb);
  const double spread = std::sqrt(sa * sb / (sa + sb));
  auto f = [&](double t) { return a(t + shift) * b(t); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, peak - 40.0 * spread, peak + 40.0 * spread, 15, 1e-12, &err);
}

}  // namespace detail

/// The unclamped ratio; may exceed 1 when the packets differ in center.
inline double xi_overlap_raw(const WavePacket& g1, const WavePacket& g2, double delta_t) {
  otcsim::detail::require(std::isfinite(delta_t), "xi_overlap: time shift must be finite");
  const double den = detail::overlap_integral(g1, g2, 0.0);
  if (!(den >= 1e-12))
    throw std::domain_error("xi_overlap: packets overlap too little for the ratio to be defined");
  return detail::overlap_integral(g1, g2, delta_t) / den;
}

/// xi in [0, 1].
inline double xi_overlap(const WavePacket& g1, const WavePacket& g2, double delta_t) {
  return std::clamp(xi_overlap_raw(g1, g2, delta_t), 0.0, 1.0);
}

/// Value of the ratio for Gaussian amplitudes, evaluated analytically.
inline double xi_closed_form(const WavePacket& g1, const WavePacket& g2, double delta_t) {
  const double s = g1.width * g1.width + g2.width * g2.width;
  const double c = g2.center - g1.center;
  const double shifted = c + delta_t;
  return std::exp(-(shifted * shifted - c * c) / (2.0 * s));
}

inline OtcElement xi_to_map(double xi, std::vector<std::size_t> modes) {
  otcsim::detail::require(xi >= 0.0 && xi <= 1.0, "xi_to_map: xi must lie in [0, 1]");
  return OtcElement{std::move(modes), xi, 0.0};
}

/// OTC element for a packet pair separated by `delta_t`; the offset is
/// recorded on the element.
inline OtcElement otc_for_shift(const WavePacket& g1, const WavePacket& g2, double delta_t,
                                std::vector<std::size_t> modes) {
  OtcElement e = xi_to_map(xi_overlap(g1, g2, delta_t), std::move(modes));
  e.time_shift = delta_t;
  return e;
}

}  // namespace otcsim::wavepacket
