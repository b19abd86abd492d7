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

// Open-timelike-curve elements and circuits that contain them.
//
// An open timelike curve (OTC) on a set of modes S is simulated through its
// equivalent circuit: the state is tensored with an independent copy of
// itself, each mode of S is swapped with its copy, and the copy is traced
// out. The result is the product of the S marginal and the complement
// marginal. The generalized element replaces the swap by a coupler of
// reflectivity xi, so xi = 0 is the full OTC and xi = 1 the identity.

#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "otcsim/gaussian.hpp"

namespace otcsim {

struct OtcElement {
  std::vector<std::size_t> modes;
  double xi = 0.0;
  // Clock offset accumulated along the curve. Carried as metadata; it only
  // enters the dynamics through wavepacket::xi_overlap.
  double time_shift = 0.0;
};

using CircuitElement = std::variant<Displacement, Rotation, Squeezer, BeamSplitter, OtcElement>;

namespace detail {

inline std::vector<std::size_t> complement(std::span<const std::size_t> modes, std::size_t n) {
  std::vector<bool> in(n, false);
  for (auto m : modes) in[m] = true;
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < n; ++m)
    if (!in[m]) out.push_back(m);
  return out;
}

inline void check_mode_set(std::span<const std::size_t> modes, std::size_t n) {
  require(!modes.empty(), "timelike element: empty mode set");
  std::vector<bool> seen(n, false);
  for (auto m : modes) {
    require(m < n, "timelike element: mode index out of range");
    require(!seen[m], "timelike element: duplicate mode");
    seen[m] = true;
  }
}

}  // namespace detail

/// Coupler between a mode and its copy used by xi_map, on (a, a_copy):
///   a_out = e^{-i phi} (sqrt(xi) a + i sqrt(1-xi) a_copy),
///   a_copy_out = i sqrt(1-xi) a + sqrt(xi) a_copy,
/// with phi = atan2(sqrt(1-xi), sqrt(xi)) so that a_out has unit total weight
/// on (a, a_copy) and coherent means pass through unchanged.
inline CMat xi_coupler(double xi) {
  detail::require(xi >= 0.0 && xi <= 1.0, "xi must lie in [0, 1]");
  const double t = std::sqrt(xi), r = std::sqrt(1.0 - xi);
  const cplx i(0.0, 1.0);
  const cplx phase = std::exp(-i * std::atan2(r, t));
  CMat u(2, 2);
  u << phase * t, phase * i * r, i * r, t;
  return u;
}

/// Full OTC on `modes`: cross-covariances between `modes` and the rest are
/// removed; means and both diagonal blocks are untouched.
inline GaussianState otc_map(const GaussianState& state, std::span<const std::size_t> modes) {
  const auto n = state.num_modes();
  detail::check_mode_set(modes, n);
  std::vector<bool> in(n, false);
  for (auto m : modes) in[m] = true;
  RMat cov = state.cov();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (in[a] != in[b]) cov.block<2, 2>(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b)).setZero();
  return GaussianState(state.mean(), std::move(cov));
}

inline GaussianState otc_map(const GaussianState& state, std::initializer_list<std::size_t> modes) {
  std::vector<std::size_t> v(modes);
  return otc_map(state, std::span<const std::size_t>(v));
}

/// Generalized OTC of reflectivity xi, built literally on the doubled system.
inline GaussianState xi_map(const GaussianState& state, std::span<const std::size_t> modes,
                            double xi) {
  const auto n = state.num_modes();
  detail::check_mode_set(modes, n);
  const CMat u = xi_coupler(xi);
  GaussianState doubled = tensor(state, state);
  for (auto m : modes) {
    const std::size_t pair[] = {m, m + n};
    doubled = apply_passive(doubled, u, pair);
  }
  std::vector<std::size_t> keep(n);
  for (std::size_t k = 0; k < n; ++k) keep[k] = k;
  return partial_trace(doubled, keep);
}

inline GaussianState xi_map(const GaussianState& state, std::initializer_list<std::size_t> modes,
                            double xi) {
  std::vector<std::size_t> v(modes);
  return xi_map(state, std::span<const std::size_t>(v), xi);
}

inline GaussianState apply_otc(const GaussianState& state, const OtcElement& otc) {
  if (otc.xi == 0.0) return otc_map(state, otc.modes);
  return xi_map(state, otc.modes, otc.xi);
}

class Circuit {
 public:
  explicit Circuit(std::size_t num_modes) : num_modes_(num_modes) {
    detail::require(num_modes >= 1, "Circuit: need at least one mode");
  }

  std::size_t num_modes() const { return num_modes_; }
  const std::vector<CircuitElement>& elements() const { return elements_; }
  bool empty() const { return elements_.empty(); }

  Circuit& add(CircuitElement e) {
    validate(e);
    elements_.push_back(std::move(e));
    return *this;
  }

  Circuit& append(const Circuit& other) {
    detail::require(other.num_modes_ == num_modes_, "Circuit::append: arity mismatch");
    for (const auto& e : other.elements_) elements_.push_back(e);
    return *this;
  }

  /// Sum of OTC clock offsets along the circuit.
  double total_time_shift() const {
    double t = 0.0;
    for (const auto& e : elements_)
      if (const auto* o = std::get_if<OtcElement>(&e)) t += o->time_shift;
    return t;
  }

 private:
  void validate(const CircuitElement& e) const {
    std::visit(
        [&](const auto& g) {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, OtcElement>) {
            detail::check_mode_set(g.modes, num_modes_);
            detail::require(g.xi >= 0.0 && g.xi <= 1.0, "otc: xi must lie in [0, 1]");
          } else {
            detail::check_gate(SymplecticGate(g), num_modes_);
          }
        },
        e);
  }

  std::size_t num_modes_;
  std::vector<CircuitElement> elements_;
};

inline GaussianState run_circuit(const Circuit& circuit, const GaussianState& input) {
  detail::require(circuit.num_modes() == input.num_modes(), "run_circuit: arity mismatch");
  GaussianState s = input;
  for (const auto& e : circuit.elements()) {
    s = std::visit(
        [&](const auto& g) -> GaussianState {
          using G = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<G, OtcElement>) {
            return apply_otc(s, g);
          } else {
            return apply_gate(s, SymplecticGate(g));
          }
        },
        e);
  }
  return s;
}

inline GaussianState run_circuit(const Circuit& circuit) {
  return run_circuit(circuit, GaussianState(circuit.num_modes()));
}

}  // namespace otcsim
