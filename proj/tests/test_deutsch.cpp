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

#include "otcsim/deutsch.hpp"

using namespace otcsim;
using namespace otcsim::fock;

namespace {

// Oracle: explicit partial traces on a d x d bipartite matrix, written
// independently of the library helpers.
CMat oracle_F(const CMat& u, const CMat& rho, const CMat& sigma) {
  const Eigen::Index d = rho.rows();
  CMat joint(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) joint(i * d + k, j * d + l) = rho(i, j) * sigma(k, l);
  joint = u * joint * u.adjoint();
  CMat out = CMat::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l)
      for (Eigen::Index i = 0; i < d; ++i) out(k, l) += joint(i * d + k, i * d + l);
  return out;
}

CMat random_unitary(std::mt19937_64& gen, Eigen::Index n) {
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(gen), g(gen));
  Eigen::HouseholderQR<CMat> qr(a);
  return qr.householderQ();
}

CMat random_density(std::mt19937_64& gen, Eigen::Index d) {
  std::normal_distribution<double> g;
  CMat a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(g(gen), g(gen));
  CMat rho = a * a.adjoint();
  return rho / rho.trace();
}

CMat qubit(double a, double b) {
  CMat m(2, 2);
  m << a, b, b, 1.0 - a;
  return m;
}

CMat swap2() { return swap_unitary(2).matrix; }

CMat cnot() {
  CMat u = CMat::Zero(4, 4);
  u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

CMat pauli_x_on_timelike() {
  CMat u = CMat::Zero(4, 4);
  u(0, 1) = u(1, 0) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

}  // namespace

TEST(Deutsch, SwapIsNonInteracting) {
  const CMat rho = qubit(0.3, 0.2);
  const auto res = deutsch_fixed_point(swap2(), rho);
  EXPECT_TRUE(res.converged);
  EXPECT_LT((res.rho_ctc - rho).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((res.rho_out - rho).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Deutsch, IdentityFixesEveryState) {
  const CMat rho = qubit(0.8, -0.1);
  CMat start = qubit(0.1, 0.05);
  DeutschOptions opt;
  opt.start = start;
  const auto res = deutsch_fixed_point(CMat::Identity(4, 4), rho, opt);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 1u);
  EXPECT_LT((res.rho_ctc - start).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((res.rho_out - rho).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Deutsch, CnotDecoheresInput) {
  const CMat rho = qubit(0.7, 0.4);
  const auto res = deutsch_fixed_point(cnot(), rho);
  EXPECT_TRUE(res.converged);
  CMat diag = CMat::Zero(2, 2);
  diag(0, 0) = 0.7, diag(1, 1) = 0.3;
  EXPECT_LT((res.rho_out - diag).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Deutsch, ConsistencyAgainstOracleForRandomQubits) {
  std::mt19937_64 gen(31);
  for (int k = 0; k < 200; ++k) {
    const CMat u = random_unitary(gen, 4);
    const CMat rho = random_density(gen, 2);
    const auto res = deutsch_fixed_point(u, rho);
    ASSERT_TRUE(res.converged) << k;
    const CMat f = oracle_F(u, rho, res.rho_ctc);
    EXPECT_LT((f - res.rho_ctc).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(res.rho_ctc.trace().real(), 1.0, 1e-12);
    Eigen::SelfAdjointEigenSolver<CMat> es(res.rho_ctc);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_NEAR(res.rho_out.trace().real(), 1.0, 1e-12);
  }
}

TEST(Deutsch, RandomQutritsConverge) {
  std::mt19937_64 gen(37);
  for (int k = 0; k < 50; ++k) {
    const CMat u = random_unitary(gen, 9);
    const CMat rho = random_density(gen, 3);
    const auto res = deutsch_fixed_point(u, rho);
    ASSERT_TRUE(res.converged) << k;
    EXPECT_LT((oracle_F(u, rho, res.rho_ctc) - res.rho_ctc).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Deutsch, OscillationTriggersAveraging) {
  DeutschOptions opt;
  CMat zero = CMat::Zero(2, 2);
  zero(0, 0) = 1.0;
  opt.start = zero;
  const auto res = deutsch_fixed_point(pauli_x_on_timelike(), qubit(0.5, 0.0), opt);
  EXPECT_TRUE(res.averaged);
  EXPECT_TRUE(res.converged);
  EXPECT_LT((res.rho_ctc - CMat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t k = 1; k < res.residual_history.size(); ++k)
    if (k > opt.window + 1) EXPECT_LE(res.residual_history[k], res.residual_history[k - 1] + 1e-12);
}

TEST(Deutsch, NonConvergenceIsFlagged) {
  DeutschOptions opt;
  CMat zero = CMat::Zero(2, 2);
  zero(0, 0) = 1.0;
  opt.start = zero;
  opt.max_iter = 3;
  const auto res = deutsch_fixed_point(pauli_x_on_timelike(), qubit(0.5, 0.0), opt);
  EXPECT_FALSE(res.converged);
  EXPECT_FALSE(res.averaged);
  EXPECT_EQ(res.iterations, 3u);
  EXPECT_NEAR(res.residual, 2.0, 1e-12);
}

TEST(Deutsch, ForcedAveragingStillConverges) {
  DeutschOptions opt;
  opt.force_averaging = true;
  const CMat rho = qubit(0.2, 0.3);
  const auto res = deutsch_fixed_point(swap2(), rho, opt);
  EXPECT_TRUE(res.converged);
  EXPECT_LT((res.rho_out - rho).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Deutsch, RejectsBadShapes) {
  EXPECT_THROW(deutsch_fixed_point(CMat::Identity(3, 3), qubit(0.5, 0.0)), std::invalid_argument);
  DeutschOptions opt;
  opt.tol = 0.0;
  EXPECT_THROW(deutsch_fixed_point(swap2(), qubit(0.5, 0.0), opt), std::invalid_argument);
}

TEST(DeutschChannel, SwapOnProductStateIsIdentity) {
  const auto s = tensor(coherent(0.3, 4, 1.0), coherent({0.0, 0.4}, 4, 1.0));
  const auto out = deutsch_channel(s, 1, swap_unitary(4));
  EXPECT_LT((out.rho() - s.rho()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DeutschChannel, SwapOnEntangledStateEqualsOtc) {
  const std::size_t d = 3;
  CVec psi = CVec::Zero(9);
  psi(0) = psi(4) = psi(8) = 1.0 / std::sqrt(3.0);
  const auto s = FockState::pure(2, d, psi);
  DeutschResult rep;
  const auto out = deutsch_channel(s, 0, swap_unitary(d), {}, &rep);
  EXPECT_TRUE(rep.converged);
  EXPECT_LT((out.rho() - otc_map_fock(s, {0}).rho()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DeutschChannel, FockUnitaryShapeChecked) {
  const FockState s(1, 3);
  EXPECT_THROW(deutsch_fixed_point(swap_unitary(4), s), std::invalid_argument);
  EXPECT_NO_THROW(deutsch_fixed_point(swap_unitary(3), s));
}
