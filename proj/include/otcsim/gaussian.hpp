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

// Gaussian states of N bosonic modes and the linear symplectic gate set.
//
// Phase-space ordering is interleaved (x1, p1, ..., xN, pN) with
//   x = a + a^dag,   p = -i (a - a^dag),
// so the vacuum covariance is the identity and a coherent state |alpha> has
// mean (2 Re alpha, 2 Im alpha). Internal quadrature angles use
//   X(theta) = e^{-i theta} a + e^{i theta} a^dag = x cos(theta) + p sin(theta).
// Experiment outputs use the convention X(theta) = -i e^{i theta} a + h.c.,
// which is the internal quadrature at angle pi/2 - theta; see
// internal_angle().

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "otcsim/types.hpp"

namespace otcsim {

/// Maps an output-convention quadrature angle to the internal angle.
inline constexpr double internal_angle(double output_theta) {
  return kPi / 2 - output_theta;
}

/// Internal angles of the reported "X" = X(0) and "P" = X(pi/2) quadratures.
inline constexpr double kOutputX = internal_angle(0.0);
inline constexpr double kOutputP = internal_angle(kPi / 2);

/// Symplectic form for n modes, block diagonal with [[0, 1], [-1, 0]].
inline RMat symplectic_form(std::size_t n) {
  RMat omega = RMat::Zero(2 * n, 2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

class GaussianState {
 public:
  /// Vacuum on `num_modes` modes.
  explicit GaussianState(std::size_t num_modes)
      : mean_(RVec::Zero(static_cast<Eigen::Index>(2 * num_modes))),
        cov_(RMat::Identity(static_cast<Eigen::Index>(2 * num_modes),
                            static_cast<Eigen::Index>(2 * num_modes))) {
    detail::require(num_modes >= 1, "GaussianState: need at least one mode");
  }

  GaussianState(RVec mean, RMat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    detail::require(mean_.size() >= 2 && mean_.size() % 2 == 0,
                    "GaussianState: mean must have even length >= 2");
    detail::require(cov_.rows() == mean_.size() && cov_.cols() == mean_.size(),
                    "GaussianState: covariance shape does not match mean");
    detail::require((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 *
                        std::max(1.0, cov_.cwiseAbs().maxCoeff()),
                    "GaussianState: covariance is not symmetric");
    symmetrize();
  }

  std::size_t num_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
  const RVec& mean() const { return mean_; }
  const RMat& cov() const { return cov_; }

  /// <a> of one mode.
  cplx amplitude(std::size_t mode) const {
    check_mode(mode);
    const auto i = static_cast<Eigen::Index>(2 * mode);
    return {mean_(i) / 2.0, mean_(i + 1) / 2.0};
  }

  /// Smallest eigenvalue of cov + i*Omega; physical states have it >= 0.
  double min_physical_eigenvalue() const {
    const auto n = num_modes();
    CMat m = cov_.cast<cplx>() + cplx(0.0, 1.0) * symplectic_form(n).cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  bool is_physical(double tol = 1e-9) const { return min_physical_eigenvalue() >= -tol; }

  void check_mode(std::size_t mode) const {
    detail::require(mode < num_modes(), "mode index out of range");
  }

 private:
  friend GaussianState transform(const GaussianState&, const RMat&, const RVec&);

  void symmetrize() { cov_ = 0.5 * (cov_ + cov_.transpose()).eval(); }

  RVec mean_;
  RMat cov_;
};

inline GaussianState vacuum(std::size_t n) { return GaussianState(n); }

/// Applies q -> S q + d to a state: mean' = S mean + d, cov' = S cov S^T.
inline GaussianState transform(const GaussianState& s, const RMat& sym, const RVec& shift) {
  GaussianState out = s;
  out.mean_ = sym * s.mean_ + shift;
  out.cov_ = sym * s.cov_ * sym.transpose();
  out.symmetrize();
  return out;
}

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

struct Displacement {
  std::size_t mode;
  cplx alpha;
};

/// a -> e^{i angle} a.
struct Rotation {
  std::size_t mode;
  double angle;
};

/// Scales the internal quadrature X(angle) by e^{-r} and its conjugate by e^{r}.
struct Squeezer {
  std::size_t mode;
  double r;
  double angle = 0.0;
};

/// Real orthogonal beamsplitter
///   a' = sqrt(eta) a + sqrt(1-eta) b,   b' = sqrt(1-eta) a - sqrt(eta) b.
/// It is its own inverse; eta = 1 is the identity.
struct BeamSplitter {
  std::size_t mode_a;
  std::size_t mode_b;
  double transmissivity = 0.5;
};

using SymplecticGate = std::variant<Displacement, Rotation, Squeezer, BeamSplitter>;

/// 2x2 mode unitary of a BeamSplitter, acting on (a, b).
inline CMat beamsplitter_unitary(double transmissivity) {
  const double t = std::sqrt(transmissivity);
  const double r = std::sqrt(1.0 - transmissivity);
  CMat u(2, 2);
  u << t, r, r, -t;
  return u;
}

/// Phase-space matrix of a passive transformation a_i -> sum_j u_ij a_j on `modes`.
inline RMat passive_symplectic(const CMat& u, std::span<const std::size_t> modes,
                               std::size_t num_modes) {
  detail::require(u.rows() == static_cast<Eigen::Index>(modes.size()) && u.cols() == u.rows(),
                  "passive_symplectic: unitary size does not match mode list");
  RMat s = RMat::Identity(static_cast<Eigen::Index>(2 * num_modes),
                          static_cast<Eigen::Index>(2 * num_modes));
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto xi = static_cast<Eigen::Index>(2 * modes[i]);
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const auto xj = static_cast<Eigen::Index>(2 * modes[j]);
      const cplx v = u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      s(xi, xj) = v.real();
      s(xi, xj + 1) = -v.imag();
      s(xi + 1, xj) = v.imag();
      s(xi + 1, xj + 1) = v.real();
    }
  }
  return s;
}

namespace detail {

inline void check_gate(const SymplecticGate& gate, std::size_t num_modes) {
  std::visit(
      [&](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, BeamSplitter>) {
          require(g.mode_a < num_modes && g.mode_b < num_modes,
                  "beamsplitter: mode index out of range");
          require(g.mode_a != g.mode_b, "beamsplitter: modes must differ");
          require(g.transmissivity >= 0.0 && g.transmissivity <= 1.0,
                  "beamsplitter: transmissivity must lie in [0, 1]");
        } else {
          require(g.mode < num_modes, "gate: mode index out of range");
          if constexpr (std::is_same_v<G, Squeezer>) {
            require(std::isfinite(g.r) && std::isfinite(g.angle), "squeezer: non-finite parameter");
          } else if constexpr (std::is_same_v<G, Rotation>) {
            require(std::isfinite(g.angle), "rotation: non-finite angle");
          } else {
            require(std::isfinite(g.alpha.real()) && std::isfinite(g.alpha.imag()),
                    "displacement: non-finite amplitude");
          }
        }
      },
      gate);
}

}  // namespace detail

/// 2N x 2N matrix of a gate; identity for displacements.
inline RMat symplectic_matrix(const SymplecticGate& gate, std::size_t num_modes) {
  detail::check_gate(gate, num_modes);
  const auto dim = static_cast<Eigen::Index>(2 * num_modes);
  RMat s = RMat::Identity(dim, dim);
  std::visit(
      [&](const auto& g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Rotation>) {
          const auto i = static_cast<Eigen::Index>(2 * g.mode);
          const double c = std::cos(g.angle), sn = std::sin(g.angle);
          s(i, i) = c;
          s(i, i + 1) = -sn;
          s(i + 1, i) = sn;
          s(i + 1, i + 1) = c;
        } else if constexpr (std::is_same_v<G, Squeezer>) {
          const auto i = static_cast<Eigen::Index>(2 * g.mode);
          const double c = std::cos(g.angle), sn = std::sin(g.angle);
          const double lo = std::exp(-g.r), hi = std::exp(g.r);
          // lo * u u^T + hi * v v^T with u = (c, s), v = (-s, c).
          s(i, i) = lo * c * c + hi * sn * sn;
          s(i, i + 1) = (lo - hi) * c * sn;
          s(i + 1, i) = (lo - hi) * c * sn;
          s(i + 1, i + 1) = lo * sn * sn + hi * c * c;
        } else if constexpr (std::is_same_v<G, BeamSplitter>) {
          const std::size_t modes[] = {g.mode_a, g.mode_b};
          s = passive_symplectic(beamsplitter_unitary(g.transmissivity), modes, num_modes);
        }
      },
      gate);
  return s;
}

inline GaussianState apply_gate(const GaussianState& state, const SymplecticGate& gate) {
  const auto n = state.num_modes();
  detail::check_gate(gate, n);
  RVec shift = RVec::Zero(static_cast<Eigen::Index>(2 * n));
  if (const auto* d = std::get_if<Displacement>(&gate)) {
    const auto i = static_cast<Eigen::Index>(2 * d->mode);
    shift(i) = 2.0 * d->alpha.real();
    shift(i + 1) = 2.0 * d->alpha.imag();
    GaussianState out(state.mean() + shift, state.cov());
    return out;
  }
  return transform(state, symplectic_matrix(gate, n), shift);
}

inline GaussianState apply_passive(const GaussianState& state, const CMat& u,
                                   std::span<const std::size_t> modes) {
  for (auto m : modes) state.check_mode(m);
  const auto n = state.num_modes();
  return transform(state, passive_symplectic(u, modes, n), RVec::Zero(static_cast<Eigen::Index>(2 * n)));
}

inline GaussianState displace(const GaussianState& s, std::size_t mode, cplx alpha) {
  return apply_gate(s, Displacement{mode, alpha});
}
inline GaussianState rotate(const GaussianState& s, std::size_t mode, double angle) {
  return apply_gate(s, Rotation{mode, angle});
}
inline GaussianState squeeze(const GaussianState& s, std::size_t mode, double r, double angle = 0.0) {
  return apply_gate(s, Squeezer{mode, r, angle});
}
inline GaussianState beamsplit(const GaussianState& s, std::size_t a, std::size_t b, double eta) {
  return apply_gate(s, BeamSplitter{a, b, eta});
}

// ---------------------------------------------------------------------------
// Statistics and measurement
// ---------------------------------------------------------------------------

struct QuadStats {
  double mean;
  double variance;
};

/// Mean and variance of the internal quadrature X(theta) of one mode.
inline QuadStats quad_stats(const GaussianState& s, std::size_t mode, double theta) {
  s.check_mode(mode);
  const auto i = static_cast<Eigen::Index>(2 * mode);
  const double c = std::cos(theta), sn = std::sin(theta);
  const double mean = c * s.mean()(i) + sn * s.mean()(i + 1);
  const double var = c * c * s.cov()(i, i) + 2.0 * c * sn * s.cov()(i, i + 1) +
                     sn * sn * s.cov()(i + 1, i + 1);
  return {mean, var};
}

/// One homodyne outcome for X(theta) using a caller-owned generator.
/// The post-measurement state is not modelled.
template <class URBG>
double homodyne_sample(const GaussianState& s, std::size_t mode, double theta, URBG& gen) {
  const auto st = quad_stats(s, mode, theta);
  std::normal_distribution<double> dist(st.mean, std::sqrt(std::max(st.variance, 0.0)));
  return dist(gen);
}

inline double homodyne_sample(const GaussianState& s, std::size_t mode, double theta,
                              std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return homodyne_sample(s, mode, theta, gen);
}

inline std::vector<double> homodyne_samples(const GaussianState& s, std::size_t mode, double theta,
                                            std::size_t shots, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<double> out(shots);
  for (auto& v : out) v = homodyne_sample(s, mode, theta, gen);
  return out;
}

/// Total mean photon number tr(cov - I)/4 + |mean|^2/4.
inline double mean_photon_number(const GaussianState& s) {
  const double n = static_cast<double>(s.num_modes());
  return (s.cov().trace() - 2.0 * n) / 4.0 + s.mean().squaredNorm() / 4.0;
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size(), nb = b.mean().size();
  RVec mean(na + nb);
  mean << a.mean(), b.mean();
  RMat cov = RMat::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(mean), std::move(cov));
}

/// Marginal on `keep`, in the listed order.
inline GaussianState partial_trace(const GaussianState& s, std::span<const std::size_t> keep) {
  detail::require(!keep.empty(), "partial_trace: nothing to keep");
  std::vector<Eigen::Index> idx;
  idx.reserve(2 * keep.size());
  std::vector<bool> seen(s.num_modes(), false);
  for (auto m : keep) {
    s.check_mode(m);
    detail::require(!seen[m], "partial_trace: duplicate mode");
    seen[m] = true;
    idx.push_back(static_cast<Eigen::Index>(2 * m));
    idx.push_back(static_cast<Eigen::Index>(2 * m + 1));
  }
  const auto k = static_cast<Eigen::Index>(idx.size());
  RVec mean(k);
  RMat cov(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    mean(i) = s.mean()(idx[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < k; ++j)
      cov(i, j) = s.cov()(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return GaussianState(std::move(mean), std::move(cov));
}

inline GaussianState partial_trace(const GaussianState& s, std::initializer_list<std::size_t> keep) {
  std::vector<std::size_t> v(keep);
  return partial_trace(s, std::span<const std::size_t>(v));
}

/// Two-mode squeezed vacuum built from two opposite single-mode squeezers and
/// a 50:50 beamsplitter; each marginal is thermal with variance cosh(2r).
inline GaussianState two_mode_squeezed(double r) {
  GaussianState s(2);
  s = squeeze(s, 0, r, 0.0);
  s = squeeze(s, 1, r, kPi / 2);
  return beamsplit(s, 0, 1, 0.5);
}

}  // namespace otcsim
