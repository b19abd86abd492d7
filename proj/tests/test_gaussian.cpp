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

#include "otcsim/fock.hpp"
#include "otcsim/gaussian.hpp"
#include "test_util.hpp"

using namespace otcsim;

TEST(Vacuum, SingleMode) {
  const GaussianState v(1);
  EXPECT_EQ(v.mean(), RVec::Zero(2));
  EXPECT_EQ(v.cov(), RMat::Identity(2, 2));
}

TEST(Vacuum, TwoModesIsTensorOfVacua) {
  const GaussianState v(2);
  EXPECT_EQ(v.mean(), RVec::Zero(4));
  EXPECT_EQ(v.cov(), RMat::Identity(4, 4));
  EXPECT_EQ(tensor(GaussianState(1), GaussianState(1)).cov(), v.cov());
}

TEST(Vacuum, ZeroModesRejected) { EXPECT_THROW(GaussianState(0), std::invalid_argument); }

TEST(Vacuum, UnitVarianceAtEveryAngle) {
  const GaussianState v(1);
  for (double th = 0; th < 2 * kPi; th += 0.1) {
    const auto q = quad_stats(v, 0, th);
    EXPECT_DOUBLE_EQ(q.mean, 0.0);
    EXPECT_NEAR(q.variance, 1.0, 1e-15);
  }
}

TEST(Displace, ZeroIsIdentity) {
  const auto s = squeeze(GaussianState(1), 0, 0.3, 0.2);
  test::expect_states_near(displace(s, 0, 0.0), s, 0.0);
}

// The canonical amplitude convention: <x> = 2 Re(alpha), <p> = 2 Im(alpha),
// so the output X reads 2 Im(alpha) and P reads 2 Re(alpha).
TEST(Displace, FactorTwoMeanConvention) {
  const auto s = displace(GaussianState(1), 0, cplx(1.0, 0.0));
  EXPECT_DOUBLE_EQ(s.mean()(0), 2.0);
  EXPECT_DOUBLE_EQ(s.mean()(1), 0.0);
  EXPECT_EQ(s.cov(), RMat::Identity(2, 2));
  EXPECT_NEAR(quad_stats(s, 0, kOutputP).mean, 2.0, 1e-15);
  EXPECT_NEAR(quad_stats(s, 0, kOutputX).mean, 0.0, 1e-15);
  EXPECT_EQ(s.amplitude(0), cplx(1.0, 0.0));
}

TEST(Displace, MatchesFockExpectation) {
  const cplx alpha(0.8, -0.6);
  const auto g = displace(GaussianState(1), 0, alpha);
  const auto f = fock::coherent(alpha, 40);
  for (double th : {0.0, 0.4, 1.1, kPi / 2, 2.5}) {
    EXPECT_NEAR(quad_stats(g, 0, th).mean, fock::quad_stats_fock(f, 0, th).mean, 1e-9);
    EXPECT_NEAR(fock::quad_stats_fock(f, 0, th).variance, 1.0, 1e-9);
  }
}

TEST(Displace, InverseRestoresVacuum) {
  const cplx a(0.4, 1.3);
  test::expect_states_near(displace(displace(GaussianState(1), 0, a), 0, -a), GaussianState(1), 1e-15);
}

TEST(Squeeze, ZeroIsIdentity) {
  test::expect_states_near(squeeze(GaussianState(2), 1, 0.0, 0.7), GaussianState(2), 0.0);
}

TEST(Squeeze, UnitSqueezingVariances) {
  const auto s = squeeze(GaussianState(1), 0, 1.0, kOutputX);
  EXPECT_NEAR(quad_stats(s, 0, kOutputX).variance, std::exp(-2.0), 1e-14);
  EXPECT_NEAR(quad_stats(s, 0, kOutputP).variance, std::exp(2.0), 1e-13);
  EXPECT_NEAR(std::exp(-2.0), 0.1353, 1e-4);
}

TEST(Squeeze, MatchesFockOracle) {
  // r = 1 needs more than 40 levels to keep the prepared state within 1e-6.
  const auto g = squeeze(GaussianState(1), 0, 1.0, kOutputX);
  const auto f = fock::squeezed_vacuum(1.0, kOutputX, 60);
  for (double th : {kOutputX, kOutputP, 0.3}) {
    EXPECT_NEAR(fock::quad_stats_fock(f, 0, th).variance, quad_stats(g, 0, th).variance, 1e-4);
  }
}

TEST(Squeeze, InverseRestoresVacuum) {
  const auto s = squeeze(squeeze(GaussianState(1), 0, 0.9, 0.3), 0, -0.9, 0.3);
  test::expect_states_near(s, GaussianState(1), 1e-13);
}

TEST(BeamSplitter, FullTransmissionIsIdentity) {
  const auto s = squeeze(displace(GaussianState(2), 0, {0.3, 0.1}), 1, 0.5, 0.2);
  test::expect_states_near(beamsplit(s, 0, 1, 1.0), s, 0.0);
}

TEST(BeamSplitter, HalfSplitsCoherentAmplitude) {
  const auto s = beamsplit(displace(GaussianState(2), 0, 2.0), 0, 1, 0.5);
  EXPECT_NEAR(std::abs(s.amplitude(0)), 2.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(1)), 2.0 / std::sqrt(2.0), 1e-15);
  EXPECT_TRUE(s.cov().isApprox(RMat::Identity(4, 4), 1e-15));
}

TEST(BeamSplitter, VacuumInvariant) {
  for (double eta : {0.0, 0.2, 0.5, 0.93}) test::expect_states_near(beamsplit(GaussianState(2), 0, 1, eta), GaussianState(2), 1e-15);
}

TEST(BeamSplitter, RejectsBadParameters) {
  EXPECT_THROW(beamsplit(GaussianState(2), 0, 0, 0.5), std::invalid_argument);
  EXPECT_THROW(beamsplit(GaussianState(2), 0, 1, 1.5), std::invalid_argument);
  EXPECT_THROW(beamsplit(GaussianState(2), 0, 2, 0.5), std::invalid_argument);
}

TEST(QuadStats, CoherentAmplitudeQuadrature) {
  const double a = 1.7;
  const auto q = quad_stats(displace(GaussianState(1), 0, a), 0, kOutputP);
  EXPECT_NEAR(q.mean, 2.0 * a, 1e-15);
  EXPECT_NEAR(q.variance, 1.0, 1e-15);
}

TEST(QuadStats, SqueezedVacuum) {
  const auto q = quad_stats(squeeze(GaussianState(1), 0, 1.0, kOutputX), 0, kOutputX);
  EXPECT_NEAR(q.mean, 0.0, 1e-15);
  EXPECT_NEAR(q.variance, std::exp(-2.0), 1e-14);
}

TEST(Homodyne, VacuumSampleMean) {
  const auto xs = homodyne_samples(GaussianState(1), 0, 0.3, 100000, 11);
  double m = 0;
  for (double x : xs) m += x;
  EXPECT_NEAR(m / xs.size(), 0.0, 0.02);
}

TEST(Homodyne, SeededSequenceRepeats) {
  const auto s = displace(squeeze(GaussianState(1), 0, 0.4, 0.1), 0, {0.2, 0.5});
  EXPECT_EQ(homodyne_samples(s, 0, 1.0, 500, 99), homodyne_samples(s, 0, 1.0, 500, 99));
  EXPECT_NE(homodyne_samples(s, 0, 1.0, 500, 99), homodyne_samples(s, 0, 1.0, 500, 100));
  EXPECT_EQ(homodyne_sample(s, 0, 1.0, std::uint64_t{5}), homodyne_sample(s, 0, 1.0, std::uint64_t{5}));
}

TEST(Homodyne, SqueezedEmpiricalVariance) {
  const auto s = squeeze(GaussianState(1), 0, 2.0, kOutputX);
  const auto xs = homodyne_samples(s, 0, kOutputX, 100000, 3);
  double m = 0, m2 = 0;
  for (double x : xs) m += x, m2 += x * x;
  const double n = static_cast<double>(xs.size());
  const double var = (m2 - m * m / n) / (n - 1);
  EXPECT_NEAR(var / std::exp(-4.0), 1.0, 0.05);
}

TEST(TensorTrace, TraceRecoversFactor) {
  const auto a = displace(squeeze(GaussianState(1), 0, 0.3, 0.4), 0, {1.0, -0.2});
  const auto b = squeeze(GaussianState(2), 1, 0.6, 0.0);
  const auto ab = tensor(a, b);
  EXPECT_EQ(partial_trace(ab, {0}).mean(), a.mean());
  EXPECT_EQ(partial_trace(ab, {0}).cov(), a.cov());
  EXPECT_EQ(partial_trace(ab, {1, 2}).cov(), b.cov());
}

TEST(TensorTrace, VacuaTensor) {
  test::expect_states_near(tensor(GaussianState(1), GaussianState(1)), GaussianState(2), 0.0);
}

TEST(TensorTrace, TwoModeSqueezedMarginalIsThermal) {
  const double r = 0.7;
  const auto s = two_mode_squeezed(r);
  for (std::size_t m : {0u, 1u}) {
    const auto t = partial_trace(s, {m});
    EXPECT_NEAR(t.cov()(0, 0), std::cosh(2 * r), 1e-13);
    EXPECT_NEAR(t.cov()(1, 1), std::cosh(2 * r), 1e-13);
    EXPECT_NEAR(t.cov()(0, 1), 0.0, 1e-13);
  }
}

TEST(TensorTrace, TwoModeSqueezedMarginalMatchesFock) {
  const double r = 0.4;
  const auto g = two_mode_squeezed(r);
  fock::FockState f(2, 30);
  f = fock::apply_unitary(f, {0}, fock::squeezing_matrix(r, 0.0, 30));
  f = fock::apply_unitary(f, {1}, fock::squeezing_matrix(r, kPi / 2, 30));
  f = fock::apply_unitary(f, {0, 1}, fock::passive_two_mode(beamsplitter_unitary(0.5), 30));
  for (double th : {0.0, kPi / 2, 0.8}) {
    EXPECT_NEAR(fock::quad_stats_fock(f, 1, th).variance, quad_stats(g, 1, th).variance, 1e-3);
    EXPECT_NEAR(fock::quad_stats_fock(f, 1, th).variance, std::cosh(2 * r), 1e-3);
  }
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(GaussianProperties, GateMatricesAreSymplectic) {
  std::mt19937_64 gen(1);
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = 1 + k % 4;
    const auto g = test::random_gate(gen, n);
    const RMat S = symplectic_matrix(g, n);
    const RMat O = symplectic_form(n);
    EXPECT_LT((S * O * S.transpose() - O).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GaussianProperties, GateSequencesStayPhysical) {
  std::mt19937_64 gen(2);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + k % 4;
    GaussianState s(n);
    for (int j = 0; j < 12; ++j) {
      s = apply_gate(s, test::random_gate(gen, n));
      ASSERT_GE(s.min_physical_eigenvalue(), -1e-9);
      ASSERT_LT((s.cov() - s.cov().transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(GaussianProperties, PassiveGatesPreservePhotonNumber) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + k % 3;
    GaussianState s = test::random_state(gen, n, 6);
    const double before = mean_photon_number(s);
    for (int j = 0; j < 6; ++j) {
      const std::size_t a = static_cast<std::size_t>(u(gen) * n) % n;
      const std::size_t b = (a + 1 + static_cast<std::size_t>(u(gen) * (n - 1))) % n;
      s = j % 2 ? rotate(s, a, 2 * kPi * u(gen)) : beamsplit(s, a, b, u(gen));
    }
    EXPECT_NEAR(mean_photon_number(s), before, 1e-10);
  }
}

TEST(GaussianProperties, OppositeAnglesShareVariance) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (int k = 0; k < 100; ++k) {
    const auto s = test::random_state(gen, 2, 5);
    const double th = u(gen);
    const auto a = quad_stats(s, 1, th), b = quad_stats(s, 1, th + kPi);
    EXPECT_NEAR(a.variance, b.variance, 1e-12);
    EXPECT_NEAR(a.mean, -b.mean, 1e-12);
  }
}

TEST(GaussianProperties, HomodyneMomentsConverge) {
  std::mt19937_64 gen(5);
  for (int k = 0; k < 5; ++k) {
    const auto s = test::random_state(gen, 1, 4);
    const double th = 0.3 * k;
    const auto q = quad_stats(s, 0, th);
    const std::size_t n = 40000;
    const auto xs = homodyne_samples(s, 0, th, n, 100 + k);
    double m = 0, m2 = 0;
    for (double x : xs) m += x, m2 += x * x;
    const double mean = m / n, var = (m2 - n * mean * mean) / (n - 1);
    EXPECT_NEAR(mean, q.mean, 5 * std::sqrt(q.variance / n));
    EXPECT_NEAR(var, q.variance, 5 * q.variance * std::sqrt(2.0 / (n - 1)));
  }
}

TEST(GaussianState, RejectsAsymmetricCovariance) {
  RMat c = RMat::Identity(2, 2);
  c(0, 1) = 0.5;
  EXPECT_THROW(GaussianState(RVec::Zero(2), c), std::invalid_argument);
}
