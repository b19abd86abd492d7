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

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "otcsim/fock.hpp"
#include "otcsim/timelike.hpp"

namespace otcsim::fock {

inline FockState apply_element(const FockState& s, const CircuitElement& element,
                       const TruncationGuard& guard = {}) {
  const auto d = s.cutoff();
  return std::visit(
      [&](const auto& g) -> FockState {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Displacement>) {
          return apply_unitary(s, {g.mode}, displacement_matrix(g.alpha, d), guard);
        } else if constexpr (std::is_same_v<G, Rotation>) {
          return apply_unitary(s, {g.mode}, rotation_matrix(g.angle, d), guard);
        } else if constexpr (std::is_same_v<G, Squeezer>) {
          return apply_unitary(s, {g.mode}, squeezing_matrix(g.r, g.angle, d), guard);
        } else if constexpr (std::is_same_v<G, BeamSplitter>) {
          return apply_unitary(s, {g.mode_a, g.mode_b},
                               passive_two_mode(beamsplitter_unitary(g.transmissivity), d), guard);
        } else {
          if (g.xi == 0.0) return otc_map_fock(s, g.modes);
          return xi_map_fock(s, g.modes, g.xi, guard);
        }
      },
      element);
}

/// Runs a circuit on the truncated Fock engine.
inline FockState run_circuit(const Circuit& circuit, const FockState& input,
                             const TruncationGuard& guard = {}) {
  detail::require(circuit.num_modes() == input.num_modes(), "run_circuit: arity mismatch");
  FockState s = input;
  for (const auto& e : circuit.elements()) s = apply_element(s, e, guard);
  return s;
}

namespace detail {

/// Local operator and modes of a gate element.
inline std::pair<CMat, std::vector<std::size_t>> gate_operator(const CircuitElement& element,
                                                               std::size_t d) {
  return std::visit(
      [&](const auto& g) -> std::pair<CMat, std::vector<std::size_t>> {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Displacement>) {
          return {displacement_matrix(g.alpha, d), {g.mode}};
        } else if constexpr (std::is_same_v<G, Rotation>) {
          return {rotation_matrix(g.angle, d), {g.mode}};
        } else if constexpr (std::is_same_v<G, Squeezer>) {
          return {squeezing_matrix(g.r, g.angle, d), {g.mode}};
        } else if constexpr (std::is_same_v<G, BeamSplitter>) {
          return {passive_two_mode(beamsplitter_unitary(g.transmissivity), d), {g.mode_a, g.mode_b}};
        } else {
          throw std::logic_error("gate_operator: not a gate");
        }
      },
      element);
}

}  // namespace detail

/// Runs a circuit from the vacuum. Leading gates act on the state vector;
/// the density matrix is formed at the first timelike element.
inline FockState run_circuit(const Circuit& circuit, std::size_t cutoff,
                             const TruncationGuard& guard = {}) {
  const std::size_t n = circuit.num_modes();
  const FockState vac(n, cutoff);
  CMat psi = CMat::Zero(static_cast<Eigen::Index>(vac.dim()), 1);
  psi(0, 0) = 1.0;
  double discarded = 0.0;
  const auto& elements = circuit.elements();
  std::size_t k = 0;
  for (; k < elements.size() && !std::holds_alternative<OtcElement>(elements[k]); ++k) {
    const auto [op, modes] = detail::gate_operator(elements[k], cutoff);
    detail::check_modes(modes, n);
    detail::left_apply(psi, n, cutoff, modes, op);
    const double norm2 = psi.squaredNorm();
    const double lost = std::max(0.0, 1.0 - norm2);
    if (lost > guard.max_loss)
      throw TruncationError("apply_unitary: weight pushed above the Fock cutoff", lost);
    psi /= std::sqrt(norm2);
    discarded += lost;
  }
  FockState s(n, cutoff, psi * psi.adjoint(), discarded);
  for (; k < elements.size(); ++k) s = apply_element(s, elements[k], guard);
  return s;
}

}  // namespace otcsim::fock
