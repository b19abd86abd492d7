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

#include <gtest/gtest.h>

#include <random>

#include "otcsim/timelike.hpp"
#include "test_util.hpp"

using namespace otcsim;

namespace {

RMat block(const GaussianState& s, std::size_t a, std::size_t b) {
  return s.cov().block(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b), 2, 2);
}

std::vector<std::size_t> random_subset(std::mt19937_64& gen, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < n; ++m)
    if (coin(gen)) out.push_back(m);
  if (out.empty()) out.push_back(n - 1);
  return out;
}

}  // namespace

TEST(OtcMap, TwoModeSqueezedBecomesThermalProduct) {
  const double r = 0.6;
  const auto out = otc_map(two_mode_squeezed(r), {0});
  RMat want = RMat::Identity(4, 4) * std::cosh(2 * r);
  EXPECT_LT((out.cov() - want).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(OtcMap, ProductStateUnchanged) {
  const auto s = tensor(squeeze(GaussianState(1), 0, 0.4, 0.2), displace(GaussianState(1), 0, {0.1, 0.7}));
  test::expect_states_near(otc_map(s, {1}), s, 0.0);
}

TEST(OtcMap, AllModesIsIdentity) {
  std::mt19937_64 gen(7);
  const auto s = test::random_state(gen, 3, 10);
  test::expect_states_near(otc_map(s, {0, 1, 2}), s, 0.0);
}

TEST(OtcMap, RejectsBadModeSets) {
  EXPECT_THROW(otc_map(GaussianState(2), {}), std::invalid_argument);
  EXPECT_THROW(otc_map(GaussianState(2), {2}), std::invalid_argument);
  EXPECT_THROW(otc_map(GaussianState(2), {0, 0}), std::invalid_argument);
}

TEST(OtcProperties, IdempotentMeanAndMarginalPreserving) {
  std::mt19937_64 gen(11);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k % 3;
    const auto s = test::random_state(gen, n, 10);
    const auto modes = random_subset(gen, n);
    const auto once = otc_map(s, modes);
    test::expect_states_near(otc_map(once, modes), once, 0.0);
    EXPECT_EQ(once.mean(), s.mean());
    std::vector<bool> in(n, false);
    for (auto m : modes) in[m] = true;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) {
        if (in[a] == in[b]) {
          EXPECT_EQ(block(once, a, b), block(s, a, b));
        } else {
          EXPECT_EQ(block(once, a, b), RMat::Zero(2, 2));
        }
      }
    EXPECT_GE(once.min_physical_eigenvalue(), -1e-9);
  }
}

TEST(XiMap, EndpointsMatchIdentityAndOtc) {
  std::mt19937_64 gen(13);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + k % 3;
    const auto s = test::random_state(gen, n, 8);
    const auto modes = random_subset(gen, n);
    test::expect_states_near(xi_map(s, modes, 1.0), s, 1e-12);
    test::expect_states_near(xi_map(s, modes, 0.0), otc_map(s, modes), 1e-12);
  }
}

TEST(XiMap, RejectsOutOfRange) {
  EXPECT_THROW(xi_map(GaussianState(1), {0}, -0.1), std::invalid_argument);
  EXPECT_THROW(xi_map(GaussianState(1), {0}, 1.1), std::invalid_argument);
}

TEST(XiProperties, MeansAndComplementPreservedAndPhysical) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k % 3;
    const auto s = test::random_state(gen, n, 10);
    const auto modes = random_subset(gen, n);
    const double xi = u(gen);
    const auto out = xi_map(s, modes, xi);
    EXPECT_LT((out.mean() - s.mean()).cwiseAbs().maxCoeff(), 1e-12);
    const auto rest = detail::complement(modes, n);
    if (!rest.empty()) {
      const auto a = partial_trace(out, rest), b = partial_trace(s, rest);
      EXPECT_LT((a.cov() - b.cov()).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_GE(out.min_physical_eigenvalue(), -1e-9);
  }
}

TEST(XiProperties, CorrelationsShrinkWithXi) {
  // Cross-covariance between the curve mode and its partner of a two-mode
  // squeezed state decreases as the coupling to the copy grows.
  const auto s = two_mode_squeezed(0.5);
  double prev = -1.0;
  for (double xi = 0.0; xi <= 1.0 + 1e-12; xi += 0.1) {
    const double c = block(xi_map(s, {0}, std::min(xi, 1.0)), 0, 1).norm();
    EXPECT_GE(c, prev - 1e-12);
    prev = c;
  }
  EXPECT_NEAR(block(xi_map(s, {0}, 0.0), 0, 1).norm(), 0.0, 1e-12);
}

// Squeezing stage: mode 0 input, fresh X-squeezed ancilla on mode 1, 50:50,
// OTC on mode 0, 50:50. Output X variance is (Var_in + e^{-2r})/2.
TEST(SqueezingStage, VarianceRecursionForArbitraryInputs) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const auto in = test::random_state(gen, 1, 6, {1.5, 1.0});
    const double r = 2.0 * u(gen);
    Circuit c(2);
    c.add(Squeezer{1, r, kOutputX}).add(BeamSplitter{0, 1, 0.5}).add(OtcElement{{0}, 0.0, 0.0}).add(BeamSplitter{0, 1, 0.5});
    const auto out = run_circuit(c, tensor(in, GaussianState(1)));
    const double vin = quad_stats(in, 0, kOutputX).variance;
    EXPECT_NEAR(quad_stats(out, 0, kOutputX).variance, 0.5 * (vin + std::exp(-2 * r)), 1e-11);
    EXPECT_LT((partial_trace(out, {0}).mean() - in.mean()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Circuit, ValidatesElements) {
  Circuit c(2);
  EXPECT_THROW(c.add(Displacement{2, 1.0}), std::invalid_argument);
  EXPECT_THROW(c.add(BeamSplitter{0, 0, 0.5}), std::invalid_argument);
  EXPECT_THROW(c.add(OtcElement{{0}, 1.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(c.add(OtcElement{{}, 0.0, 0.0}), std::invalid_argument);
  EXPECT_TRUE(c.empty());
  EXPECT_THROW(Circuit(0), std::invalid_argument);
}

TEST(Circuit, TimeShiftSums) {
  Circuit c(2);
  c.add(OtcElement{{0}, 0.0, 1.5}).add(Rotation{1, 0.3}).add(OtcElement{{1}, 0.2, -0.25});
  EXPECT_DOUBLE_EQ(c.total_time_shift(), 1.25);
}

TEST(Circuit, TimeShiftDoesNotChangeDynamics) {
  Circuit a(2), b(2);
  a.add(Squeezer{1, 0.5, 0.0}).add(BeamSplitter{0, 1, 0.5}).add(OtcElement{{0}, 0.3, 0.0});
  b.add(Squeezer{1, 0.5, 0.0}).add(BeamSplitter{0, 1, 0.5}).add(OtcElement{{0}, 0.3, 7.0});
  test::expect_states_near(run_circuit(a), run_circuit(b), 0.0);
}

TEST(Circuit, ArityMismatchRejected) {
  EXPECT_THROW(run_circuit(Circuit(2), GaussianState(3)), std::invalid_argument);
}

TEST(Circuit, AppendConcatenates) {
  Circuit a(1), b(1);
  a.add(Displacement{0, 0.5});
  b.add(Displacement{0, 0.25});
  a.append(b);
  EXPECT_EQ(a.elements().size(), 2u);
  EXPECT_NEAR(run_circuit(a).amplitude(0).real(), 0.75, 1e-15);
  EXPECT_THROW(a.append(Circuit(2)), std::invalid_argument);
}
