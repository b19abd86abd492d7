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

#include <gtest/gtest.h>

#include <random>

#include "otcsim/gaussian.hpp"
#include "otcsim/timelike.hpp"

namespace otcsim::test {

inline void expect_states_near(const GaussianState& a, const GaussianState& b, double tol) {
  ASSERT_EQ(a.num_modes(), b.num_modes());
  EXPECT_LE((a.mean() - b.mean()).cwiseAbs().maxCoeff(), tol);
  EXPECT_LE((a.cov() - b.cov()).cwiseAbs().maxCoeff(), tol);
}

/// Bounds for random gates.
struct Envelope {
  double alpha = 1.0;
  double r = 0.8;
};

template <class G>
SymplecticGate random_gate(G& gen, std::size_t n, Envelope env = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> mode(0, n - 1);
  const std::size_t a = mode(gen);
  const int kind = static_cast<int>(u(gen) * (n > 1 ? 4 : 3));
  switch (kind) {
    case 0: return Displacement{a, std::polar(env.alpha * u(gen), 2 * kPi * u(gen))};
    case 1: return Rotation{a, 2 * kPi * u(gen)};
    case 2: return Squeezer{a, env.r * u(gen), kPi * u(gen)};
    default: {
      std::size_t b = mode(gen);
      while (b == a) b = mode(gen);
      return BeamSplitter{a, b, u(gen)};
    }
  }
}

template <class G>
GaussianState random_state(G& gen, std::size_t n, int depth, Envelope env = {}) {
  GaussianState s(n);
  for (int k = 0; k < depth; ++k) s = apply_gate(s, random_gate(gen, n, env));
  return s;
}

inline CircuitElement as_element(const SymplecticGate& g) {
  return std::visit([](const auto& x) -> CircuitElement { return x; }, g);
}

/// Random gates with OTC elements mixed in. xi is drawn from {0, U(0,1), 1}.
template <class G>
Circuit random_circuit(G& gen, std::size_t n, int depth, Envelope env = {}, double otc_rate = 0.25) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Circuit c(n);
  for (int k = 0; k < depth; ++k) {
    if (u(gen) < otc_rate) {
      std::vector<std::size_t> modes;
      for (std::size_t m = 0; m < n; ++m)
        if (u(gen) < 0.5) modes.push_back(m);
      if (modes.empty()) modes.push_back(static_cast<std::size_t>(u(gen) * n) % n);
      const double pick = u(gen);
      const double xi = pick < 0.4 ? 0.0 : pick < 0.5 ? 1.0 : u(gen);
      c.add(OtcElement{modes, xi, 0.0});
    } else {
      c.add(as_element(random_gate(gen, n, env)));
    }
  }
  return c;
}

}  // namespace otcsim::test
