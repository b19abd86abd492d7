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

// Truncated Fock-space density matrices.
//
// A state of N modes with photon cutoff d lives on d^N dimensions. Basis
// index ordering puts mode 0 in the most significant digit:
//   index = sum_k n_k d^(N-1-k).
// Operator conventions match gaussian.hpp: a unitary U acting as
// rho -> U rho U^dag moves <a_i> to sum_j u_ij <a_j> for passive optics,
// D(alpha) shifts <a> by alpha, and a squeezer of angle theta scales the
// quadrature X(theta) = e^{-i theta} a + h.c. by e^{-r}.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "otcsim/types.hpp"

namespace otcsim::fock {

/// Limit on probability weight an operation may push above the cutoff.
struct TruncationGuard {
  double max_loss = 1e-4;
};

inline constexpr double kStatePrepMaxLoss = 1e-6;
inline constexpr std::size_t kMaxDim = 4096;

namespace detail {

using otcsim::detail::require;

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < exp; ++k) r *= base;
  return r;
}

/// Flat-index offsets contributed by each joint digit assignment of `modes`
/// (first listed mode most significant).
inline std::vector<std::size_t> offsets(std::span<const std::size_t> modes, std::size_t num_modes,
                                        std::size_t d) {
  std::vector<std::size_t> out(ipow(d, modes.size()));
  for (std::size_t l = 0; l < out.size(); ++l) {
    std::size_t rem = l, off = 0;
    for (std::size_t i = modes.size(); i-- > 0;) {
      off += (rem % d) * ipow(d, num_modes - 1 - modes[i]);
      rem /= d;
    }
    out[l] = off;
  }
  return out;
}

inline std::vector<std::size_t> complement(std::span<const std::size_t> modes, std::size_t n) {
  std::vector<bool> in(n, false);
  for (auto m : modes) in[m] = true;
  std::vector<std::size_t> out;
  for (std::size_t m = 0; m < n; ++m)
    if (!in[m]) out.push_back(m);
  return out;
}

inline void check_modes(std::span<const std::size_t> modes, std::size_t n, bool allow_empty = false) {
  require(allow_empty || !modes.empty(), "fock: empty mode set");
  std::vector<bool> seen(n, false);
  for (auto m : modes) {
    require(m < n, "fock: mode index out of range");
    require(!seen[m], "fock: duplicate mode");
    seen[m] = true;
  }
}

inline double trace_norm_hermitian(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

}  // namespace detail

class FockState {
 public:
  /// Vacuum.
  FockState(std::size_t num_modes, std::size_t cutoff)
      : num_modes_(num_modes), cutoff_(cutoff) {
    check_dims();
    const auto dim = static_cast<Eigen::Index>(this->dim());
    rho_ = CMat::Zero(dim, dim);
    rho_(0, 0) = 1.0;
  }

  FockState(std::size_t num_modes, std::size_t cutoff, CMat rho, double discarded = 0.0)
      : num_modes_(num_modes), cutoff_(cutoff), rho_(std::move(rho)), discarded_(discarded) {
    check_dims();
    detail::require(rho_.rows() == static_cast<Eigen::Index>(dim()) && rho_.cols() == rho_.rows(),
                    "FockState: density matrix has the wrong shape");
  }

  static FockState pure(std::size_t num_modes, std::size_t cutoff, const CVec& psi,
                        double discarded = 0.0) {
    return FockState(num_modes, cutoff, psi * psi.adjoint(), discarded);
  }

  std::size_t num_modes() const { return num_modes_; }
  std::size_t cutoff() const { return cutoff_; }
  std::size_t dim() const { return detail::ipow(cutoff_, num_modes_); }
  const CMat& rho() const { return rho_; }
  /// Probability weight removed by truncation over the state's history.
  double discarded_weight() const { return discarded_; }

  double trace() const { return rho_.trace().real(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  /// Lower bound on the smallest eigenvalue: -shift when rho + shift*I
  /// admits a Cholesky factor, otherwise the exact value.
  double min_eigenvalue_bound(double shift) const {
    CMat h = 0.5 * (rho_ + rho_.adjoint());
    h.diagonal().array() += shift;
    if (Eigen::LLT<CMat>(h).info() == Eigen::Success) return -shift;
    return min_eigenvalue();
  }
  double purity() const { return (rho_ * rho_).trace().real(); }

  void check_mode(std::size_t mode) const {
    detail::require(mode < num_modes_, "fock: mode index out of range");
  }

 private:
  void check_dims() const {
    detail::require(num_modes_ >= 1, "FockState: need at least one mode");
    detail::require(cutoff_ >= 2, "FockState: cutoff must be at least 2");
    std::size_t dim = 1;
    for (std::size_t k = 0; k < num_modes_; ++k) {
      dim *= cutoff_;
      if (dim > kMaxDim) throw std::length_error("FockState: dimension too large for dense simulation");
    }
  }

  std::size_t num_modes_;
  std::size_t cutoff_;
  CMat rho_;
  double discarded_ = 0.0;
};

struct FockUnitary {
  CMat matrix;
  std::size_t num_modes = 1;
  std::size_t cutoff = 2;
  std::string label = "custom";
};

/// Max deviation of U^dag U from the identity on basis states whose photon
/// numbers are all below `low`.
inline double unitarity_defect(const FockUnitary& u, std::size_t low) {
  low = std::min(low, u.cutoff);
  std::vector<std::size_t> all(u.num_modes);
  for (std::size_t k = 0; k < u.num_modes; ++k) all[k] = k;
  std::vector<std::size_t> cols;
  const auto offs = detail::offsets(all, u.num_modes, u.cutoff);
  for (std::size_t l = 0; l < offs.size(); ++l) {
    std::size_t rem = l;
    bool ok = true;
    for (std::size_t k = 0; k < u.num_modes; ++k, rem /= u.cutoff) ok = ok && (rem % u.cutoff) < low;
    if (ok) cols.push_back(offs[l]);
  }
  double worst = 0.0;
  for (auto i : cols)
    for (auto j : cols) {
      const cplx g = u.matrix.col(static_cast<Eigen::Index>(i)).dot(u.matrix.col(static_cast<Eigen::Index>(j)));
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

// ---------------------------------------------------------------------------
// Single-mode operators
// ---------------------------------------------------------------------------

inline CMat annihilation(std::size_t d) {
  CMat a = CMat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t n = 1; n < d; ++n)
    a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(static_cast<double>(n));
  return a;
}

namespace detail {

inline std::size_t extended_cutoff(std::size_t d) { return 3 * d + 40; }

/// exp(G) for anti-Hermitian G, computed from the Hermitian -iG.
inline CMat exp_antihermitian(const CMat& g) {
  const CMat h = cplx(0.0, -1.0) * g;
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
  const CVec phases = (cplx(0.0, 1.0) * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// D(alpha) = exp(alpha a^dag - alpha^* a), exponentiated on an enlarged
/// space and projected onto the retained levels.
inline CMat displacement_matrix(cplx alpha, std::size_t d) {
  const std::size_t k = detail::extended_cutoff(d);
  const CMat a = annihilation(k);
  const CMat g = alpha * a.adjoint() - std::conj(alpha) * a;
  return detail::exp_antihermitian(g).topLeftCorner(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
}

/// S(zeta) = exp((zeta^* a^2 - zeta a^dag^2)/2) with zeta = r e^{2 i theta}.
inline CMat squeezing_matrix(double r, double theta, std::size_t d) {
  const std::size_t k = detail::extended_cutoff(d);
  const CMat a = annihilation(k);
  const cplx zeta = std::polar(r, 2.0 * theta);
  const CMat g = 0.5 * (std::conj(zeta) * a * a - zeta * a.adjoint() * a.adjoint());
  return detail::exp_antihermitian(g).topLeftCorner(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
}

/// e^{i phi n}: a -> e^{i phi} a.
inline CMat rotation_matrix(double phi, std::size_t d) {
  CMat u = CMat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t n = 0; n < d; ++n)
    u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = std::polar(1.0, phi * static_cast<double>(n));
  return u;
}

/// Fock representation of the two-mode passive map a_i -> sum_j u_ij a_j,
/// on (mode a, mode b) with a as the leading digit. Each total-photon sector
/// is computed exactly by applying the transformed creation operators
/// U a_i^dag U^dag = sum_j u_ji a_j^dag; sectors reaching the cutoff are
/// then projected.
inline CMat passive_two_mode(const CMat& u, std::size_t d) {
  detail::require(u.rows() == 2 && u.cols() == 2, "passive_two_mode: expected a 2x2 unitary");
  const auto D = static_cast<Eigen::Index>(d * d);
  CMat out = CMat::Zero(D, D);
  // image[n1][n2] is U|n1, n2> in its sector, indexed by photons in mode a.
  std::vector<std::vector<CVec>> image(d, std::vector<CVec>(d));
  auto raise = [](const CVec& v, cplx ca, cplx cb) {
    const auto n = v.size() - 1;  // sector photon number
    CVec w = CVec::Zero(n + 2);
    for (Eigen::Index k = 0; k <= n + 1; ++k) {
      if (k >= 1) w(k) += ca * std::sqrt(static_cast<double>(k)) * v(k - 1);
      if (k <= n) w(k) += cb * std::sqrt(static_cast<double>(n + 1 - k)) * v(k);
    }
    return w;
  };
  image[0][0] = CVec::Ones(1);
  for (std::size_t n2 = 0; n2 < d; ++n2) {
    if (n2 > 0)
      image[0][n2] = raise(image[0][n2 - 1], u(0, 1), u(1, 1)) / std::sqrt(static_cast<double>(n2));
    for (std::size_t n1 = 1; n1 < d; ++n1)
      image[n1][n2] = raise(image[n1 - 1][n2], u(0, 0), u(1, 0)) / std::sqrt(static_cast<double>(n1));
  }
  for (std::size_t n1 = 0; n1 < d; ++n1)
    for (std::size_t n2 = 0; n2 < d; ++n2) {
      const auto& v = image[n1][n2];
      const std::size_t total = n1 + n2;
      const auto col = static_cast<Eigen::Index>(n1 * d + n2);
      for (std::size_t k = 0; k <= total; ++k) {
        if (k >= d || total - k >= d) continue;
        out(static_cast<Eigen::Index>(k * d + (total - k)), col) = v(static_cast<Eigen::Index>(k));
      }
    }
  return out;
}

inline FockUnitary swap_unitary(std::size_t d) {
  const auto D = static_cast<Eigen::Index>(d * d);
  CMat m = CMat::Zero(D, D);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      m(static_cast<Eigen::Index>(j * d + i), static_cast<Eigen::Index>(i * d + j)) = 1.0;
  return {m, 2, d, "swap"};
}

inline FockUnitary identity_unitary(std::size_t num_modes, std::size_t d) {
  const auto D = static_cast<Eigen::Index>(detail::ipow(d, num_modes));
  return {CMat::Identity(D, D), num_modes, d, "identity"};
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

inline FockState coherent(cplx alpha, std::size_t d, double max_loss = kStatePrepMaxLoss) {
  CVec psi(static_cast<Eigen::Index>(d));
  psi(0) = std::exp(-0.5 * std::norm(alpha));
  for (std::size_t n = 1; n < d; ++n)
    psi(static_cast<Eigen::Index>(n)) = psi(static_cast<Eigen::Index>(n - 1)) * alpha / std::sqrt(static_cast<double>(n));
  const double kept = psi.squaredNorm();
  const double lost = std::max(0.0, 1.0 - kept);
  if (lost > max_loss)
    throw TruncationError("coherent: cutoff too small for amplitude", lost);
  psi /= std::sqrt(kept);
  return FockState::pure(1, d, psi, lost);
}

/// Squeezed vacuum with X(theta) variance e^{-2r}.
inline FockState squeezed_vacuum(double r, double theta, std::size_t d,
                                 double max_loss = kStatePrepMaxLoss) {
  CVec psi = CVec::Zero(static_cast<Eigen::Index>(d));
  const cplx ratio = -std::polar(std::tanh(r), 2.0 * theta);
  cplx amp = 1.0 / std::sqrt(std::cosh(r));
  for (std::size_t n = 0; 2 * n < d; ++n) {
    if (n > 0) amp *= ratio * std::sqrt((2.0 * n - 1.0) / (2.0 * n));
    psi(static_cast<Eigen::Index>(2 * n)) = amp;
  }
  const double kept = psi.squaredNorm();
  const double lost = std::max(0.0, 1.0 - kept);
  if (lost > max_loss)
    throw TruncationError("squeezed_vacuum: cutoff too small for squeezing", lost);
  psi /= std::sqrt(kept);
  return FockState::pure(1, d, psi, lost);
}

// ---------------------------------------------------------------------------
// Structure: tensor, permutation, partial trace
// ---------------------------------------------------------------------------

inline FockState tensor(const FockState& a, const FockState& b) {
  detail::require(a.cutoff() == b.cutoff(), "fock::tensor: cutoffs differ");
  const auto da = static_cast<Eigen::Index>(a.dim()), db = static_cast<Eigen::Index>(b.dim());
  CMat rho(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < da; ++j) rho.block(i * db, j * db, db, db) = a.rho()(i, j) * b.rho();
  return FockState(a.num_modes() + b.num_modes(), a.cutoff(), std::move(rho),
                   a.discarded_weight() + b.discarded_weight());
}

/// Reorders modes: mode k of the result is mode order[k] of the input.
inline FockState permute_modes(const FockState& s, std::span<const std::size_t> order) {
  const auto n = s.num_modes();
  detail::require(order.size() == n, "permute_modes: order must list every mode");
  detail::check_modes(order, n);
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  // new index l (digits in result order) corresponds to old offset map[l].
  const auto map = detail::offsets(order, n, s.cutoff());
  const auto D = static_cast<Eigen::Index>(s.dim());
  CMat rho(D, D);
  for (Eigen::Index j = 0; j < D; ++j)
    for (Eigen::Index i = 0; i < D; ++i)
      rho(i, j) = s.rho()(static_cast<Eigen::Index>(map[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(map[static_cast<std::size_t>(j)]));
  return FockState(n, s.cutoff(), std::move(rho), s.discarded_weight());
}

/// Reduced state on `keep`, in the listed order.
inline FockState partial_trace(const FockState& s, std::span<const std::size_t> keep) {
  const auto n = s.num_modes();
  detail::check_modes(keep, n);
  const auto traced = detail::complement(keep, n);
  const auto ok = detail::offsets(keep, n, s.cutoff());
  const auto ot = detail::offsets(traced, n, s.cutoff());
  const auto dk = static_cast<Eigen::Index>(ok.size());
  CMat rho = CMat::Zero(dk, dk);
  for (Eigen::Index j = 0; j < dk; ++j)
    for (Eigen::Index i = 0; i < dk; ++i) {
      cplx acc = 0.0;
      for (auto t : ot)
        acc += s.rho()(static_cast<Eigen::Index>(ok[static_cast<std::size_t>(i)] + t),
                       static_cast<Eigen::Index>(ok[static_cast<std::size_t>(j)] + t));
      rho(i, j) = acc;
    }
  return FockState(keep.size(), s.cutoff(), std::move(rho), s.discarded_weight());
}

inline FockState partial_trace(const FockState& s, std::initializer_list<std::size_t> keep) {
  std::vector<std::size_t> v(keep);
  return partial_trace(s, std::span<const std::size_t>(v));
}

/// Places `part` on `modes` and `rest_part` on the remaining modes (in
/// increasing order) of an n-mode product state.
inline FockState compose_product(const FockState& part, std::span<const std::size_t> modes,
                                 const FockState& rest_part, std::size_t n) {
  detail::check_modes(modes, n);
  const auto rest = detail::complement(modes, n);
  detail::require(part.num_modes() == modes.size() && rest_part.num_modes() == rest.size(),
                  "compose_product: factor sizes do not match the mode split");
  FockState prod = tensor(part, rest_part);
  // prod has modes (modes..., rest...); invert that placement.
  std::vector<std::size_t> placed(modes.begin(), modes.end());
  placed.insert(placed.end(), rest.begin(), rest.end());
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[placed[k]] = k;
  return permute_modes(prod, order);
}

/// rho_S (x) rho_rest, rearranged into the original mode order.
inline FockState product_of_marginals(const FockState& s, std::span<const std::size_t> modes) {
  const auto n = s.num_modes();
  detail::check_modes(modes, n);
  const auto rest = detail::complement(modes, n);
  if (rest.empty()) return s;
  FockState out = compose_product(partial_trace(s, modes), modes, partial_trace(s, rest), n);
  return FockState(n, s.cutoff(), out.rho(), s.discarded_weight());
}

// ---------------------------------------------------------------------------
// Operator application
// ---------------------------------------------------------------------------

namespace detail {

/// x <- (op on `modes`) * x, columnwise.
inline void left_apply(CMat& x, std::size_t num_modes, std::size_t d,
                       std::span<const std::size_t> modes, const CMat& op) {
  const auto dl = static_cast<Eigen::Index>(ipow(d, modes.size()));
  require(op.rows() == dl && op.cols() == dl, "apply: operator size does not match modes");

  const double nnz = static_cast<double>((op.array().abs() > 0.0).count());
  const bool sparse = nnz < 0.25 * static_cast<double>(dl * dl);
  Eigen::SparseMatrix<cplx> sp;
  if (sparse) sp = op.sparseView();

  bool contiguous = true;
  for (std::size_t i = 0; i < modes.size(); ++i) contiguous = contiguous && modes[i] == modes[0] + i;

  if (contiguous) {
    // The acted-on digits form a contiguous group, so x splits into
    // consecutive (post x dl) column-major blocks B with B <- B op^T.
    const auto post = static_cast<Eigen::Index>(ipow(d, num_modes - modes[0] - modes.size()));
    const Eigen::Index block = post * dl;
    const Eigen::Index nblocks = x.size() / block;
    if (post == 1) {
      Eigen::Map<CMat> view(x.data(), dl, nblocks);
      CMat tmp = sparse ? CMat(sp * view) : CMat(op * view);
      view = tmp;
    } else {
      const CMat op_t = op.transpose();
      const Eigen::SparseMatrix<cplx> sp_t = sp.transpose();
      CMat tmp(post, dl);
      for (Eigen::Index b = 0; b < nblocks; ++b) {
        Eigen::Map<CMat> v(x.data() + b * block, post, dl);
        if (sparse)
          tmp.noalias() = v * sp_t;
        else
          tmp.noalias() = v * op_t;
        v = tmp;
      }
    }
    return;
  }

  const auto local = offsets(modes, num_modes, d);
  const auto rest = complement(modes, num_modes);
  const auto bases = offsets(rest, num_modes, d);
  CVec v(dl), w(dl);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    for (auto b : bases) {
      for (Eigen::Index l = 0; l < dl; ++l) v(l) = col(static_cast<Eigen::Index>(b + local[static_cast<std::size_t>(l)]));
      if (sparse)
        w.noalias() = sp * v;
      else
        w.noalias() = op * v;
      for (Eigen::Index l = 0; l < dl; ++l) col(static_cast<Eigen::Index>(b + local[static_cast<std::size_t>(l)])) = w(l);
    }
  }
}

inline FockState finish(const FockState& in, CMat rho, const TruncationGuard& guard,
                        const char* what) {
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  const double lost = std::max(0.0, in.trace() - tr);
  if (lost > guard.max_loss)
    throw TruncationError(std::string(what) + ": weight pushed above the Fock cutoff", lost);
  rho /= tr;
  return FockState(in.num_modes(), in.cutoff(), std::move(rho), in.discarded_weight() + lost);
}

}  // namespace detail

/// rho -> U rho U^dag with U acting on `modes`.
inline FockState apply_unitary(const FockState& s, std::span<const std::size_t> modes,
                               const CMat& op, const TruncationGuard& guard = {}) {
  detail::check_modes(modes, s.num_modes());
  CMat x = s.rho();
  detail::left_apply(x, s.num_modes(), s.cutoff(), modes, op);
  x.adjointInPlace();
  detail::left_apply(x, s.num_modes(), s.cutoff(), modes, op);
  x.adjointInPlace();
  return detail::finish(s, std::move(x), guard, "apply_unitary");
}

inline FockState apply_unitary(const FockState& s, std::initializer_list<std::size_t> modes,
                               const CMat& op, const TruncationGuard& guard = {}) {
  std::vector<std::size_t> v(modes);
  return apply_unitary(s, std::span<const std::size_t>(v), op, guard);
}

inline FockState apply_unitary(const FockState& s, const FockUnitary& u,
                               const TruncationGuard& guard = {}) {
  detail::require(u.num_modes == s.num_modes() && u.cutoff == s.cutoff(),
                  "apply_unitary: unitary does not act on this space");
  std::vector<std::size_t> all(s.num_modes());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return apply_unitary(s, all, u.matrix, guard);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct QuadStats {
  double mean;
  double variance;
  /// Population of the top retained level of the mode; a proxy for the
  /// truncation error of the moments.
  double edge_population;
};

inline cplx amplitude(const FockState& s, std::size_t mode) {
  s.check_mode(mode);
  const FockState m = partial_trace(s, {mode});
  cplx acc = 0.0;
  for (Eigen::Index n = 1; n < m.rho().rows(); ++n) acc += std::sqrt(static_cast<double>(n)) * m.rho()(n, n - 1);
  return acc;
}

inline double mean_photon_number(const FockState& s, std::size_t mode) {
  s.check_mode(mode);
  const FockState m = partial_trace(s, {mode});
  double acc = 0.0;
  for (Eigen::Index n = 0; n < m.rho().rows(); ++n) acc += static_cast<double>(n) * m.rho()(n, n).real();
  return acc;
}

/// Moments of the internal quadrature X(theta) = e^{-i theta} a + h.c., using
/// the normal-ordered form of X^2 so that every operator is exact on the
/// retained levels.
inline QuadStats quad_stats_fock(const FockState& s, std::size_t mode, double theta) {
  s.check_mode(mode);
  const FockState m = partial_trace(s, {mode});
  const CMat& r = m.rho();
  const Eigen::Index d = r.rows();
  cplx a1 = 0.0, a2 = 0.0;
  double n = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double kk = static_cast<double>(k);
    n += kk * r(k, k).real();
    if (k >= 1) a1 += std::sqrt(kk) * r(k, k - 1);
    if (k >= 2) a2 += std::sqrt(kk * (kk - 1.0)) * r(k, k - 2);
  }
  const cplx ph = std::polar(1.0, -theta);
  const double mean = 2.0 * (ph * a1).real();
  const double second = 2.0 * (ph * ph * a2).real() + 2.0 * n + 1.0;
  return {mean, second - mean * mean, r(d - 1, d - 1).real()};
}

// ---------------------------------------------------------------------------
// Open timelike curves
// ---------------------------------------------------------------------------

/// Full OTC: the product of the `modes` marginal and the complement marginal.
inline FockState otc_map_fock(const FockState& s, std::span<const std::size_t> modes) {
  return product_of_marginals(s, modes);
}

inline FockState otc_map_fock(const FockState& s, std::initializer_list<std::size_t> modes) {
  std::vector<std::size_t> v(modes);
  return otc_map_fock(s, std::span<const std::size_t>(v));
}

inline constexpr std::size_t kMaxDoubledDim = 48;

/// The OTC equivalent circuit on the explicitly doubled space: tensor an
/// identical copy, SWAP every mode of `modes` with its copy, trace the copy.
/// Only for small spaces (dim <= kMaxDoubledDim).
inline FockState otc_equivalent_circuit(const FockState& s, std::span<const std::size_t> modes) {
  const auto n = s.num_modes();
  detail::check_modes(modes, n);
  detail::require(s.dim() <= kMaxDoubledDim, "otc_equivalent_circuit: state too large to double");
  FockState doubled = tensor(s, s);
  std::vector<std::size_t> order(2 * n);
  for (std::size_t k = 0; k < 2 * n; ++k) order[k] = k;
  for (auto m : modes) std::swap(order[m], order[m + n]);
  doubled = permute_modes(doubled, order);
  std::vector<std::size_t> keep(n);
  for (std::size_t k = 0; k < n; ++k) keep[k] = k;
  FockState out = partial_trace(doubled, keep);
  return FockState(n, s.cutoff(), out.rho(), s.discarded_weight());
}

/// Mode-and-copy coupler used by the generalized OTC; mirrors
/// otcsim::xi_coupler so both engines share the convention.
inline CMat xi_coupler_matrix(double xi) {
  detail::require(xi >= 0.0 && xi <= 1.0, "xi must lie in [0, 1]");
  const double t = std::sqrt(xi), r = std::sqrt(1.0 - xi);
  const cplx i(0.0, 1.0);
  const cplx phase = std::exp(-i * std::atan2(r, t));
  CMat u(2, 2);
  u << phase * t, phase * i * r, i * r, t;
  return u;
}

/// Generalized OTC of reflectivity xi on the explicitly doubled space.
/// Only for small spaces (dim <= kMaxDoubledDim).
inline FockState xi_map_doubled(const FockState& s, std::span<const std::size_t> modes, double xi,
                                const TruncationGuard& guard = {}) {
  const auto n = s.num_modes();
  detail::check_modes(modes, n);
  detail::require(s.dim() <= kMaxDoubledDim, "xi_map_doubled: state too large to double");
  const CMat coupler = passive_two_mode(xi_coupler_matrix(xi), s.cutoff());
  FockState doubled = tensor(s, s);
  for (auto m : modes) doubled = apply_unitary(doubled, {m, m + n}, coupler, guard);
  std::vector<std::size_t> keep(n);
  for (std::size_t k = 0; k < n; ++k) keep[k] = k;
  FockState out = partial_trace(doubled, keep);
  // The doubled state counts the input's history twice.
  return FockState(n, s.cutoff(), out.rho(), doubled.discarded_weight() - s.discarded_weight());
}

/// Generalized OTC of reflectivity xi without materializing the doubled
/// space. Only the copy of `modes` interacts, so the element is the channel
///   rho -> Tr_copy[W (rho (x) sigma) W^dag],   sigma = rho marginal on `modes`,
/// on the `modes` factor. It is evaluated as a superoperator built from the
/// eigen-decomposition of sigma.
inline FockState xi_map_fock(const FockState& s, std::span<const std::size_t> modes, double xi,
                             const TruncationGuard& guard = {}) {
  const auto n = s.num_modes();
  const auto d = s.cutoff();
  detail::check_modes(modes, n);
  if (xi == 1.0) return s;

  const auto rest = detail::complement(modes, n);
  const std::size_t ns = modes.size();
  const auto ds = static_cast<Eigen::Index>(detail::ipow(d, ns));
  const auto de = static_cast<Eigen::Index>(detail::ipow(d, rest.size()));
  if (ds * ds > static_cast<Eigen::Index>(kMaxDim))
    throw std::length_error("xi_map_fock: timelike block too large");

  // W on (s_1..s_ns, s_1'..s_ns'): one coupler per mode/copy pair.
  const CMat pair = passive_two_mode(xi_coupler_matrix(xi), d);
  CMat w;
  if (ns == 1) {
    w = pair;
  } else {
    w = CMat::Identity(ds * ds, ds * ds);
    for (std::size_t k = 0; k < ns; ++k) {
      const std::size_t pm[] = {k, k + ns};
      detail::left_apply(w, 2 * ns, d, pm, pair);
    }
  }

  const CMat sigma = partial_trace(s, modes).rho();
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (sigma + sigma.adjoint()));
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < ds; ++k)
    if (es.eigenvalues()(k) > 1e-15) kept.push_back(k);
  const auto rank = static_cast<Eigen::Index>(kept.size());
  CMat vs(ds, rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    const auto src = kept[static_cast<std::size_t>(k)];
    vs.col(k) = std::sqrt(es.eigenvalues()(src)) * es.eigenvectors().col(src);
  }

  // Kraus tensor A[(s, s'), (m, k)] = sum_j W[(s, m), (s', j)] vs[j, k].
  CMat kraus = CMat::Zero(ds * ds, ds * rank);
  for (Eigen::Index col = 0; col < w.cols(); ++col) {
    const Eigen::Index sp = col / ds, j = col % ds;
    for (Eigen::Index row = 0; row < w.rows(); ++row) {
      const cplx val = w(row, col);
      if (val == cplx(0.0)) continue;
      const Eigen::Index so = row / ds, m = row % ds;
      kraus.row(so * ds + sp).segment(m * rank, rank) += val * vs.row(j);
    }
  }
  const CMat gram = kraus * kraus.adjoint();  // [(s, s'), (t, t')]

  CMat super(ds * ds, ds * ds);  // [(s, t), (s', t')]
  for (Eigen::Index s1 = 0; s1 < ds; ++s1)
    for (Eigen::Index s2 = 0; s2 < ds; ++s2)
      for (Eigen::Index t1 = 0; t1 < ds; ++t1)
        for (Eigen::Index t2 = 0; t2 < ds; ++t2) super(s1 * ds + t1, s2 * ds + t2) = gram(s1 * ds + s2, t1 * ds + t2);

  // Bring `modes` to the front, apply the superoperator on that factor.
  std::vector<std::size_t> order(modes.begin(), modes.end());
  order.insert(order.end(), rest.begin(), rest.end());
  const FockState front = permute_modes(s, order);
  CMat reshaped(ds * ds, de * de);  // [(s', t'), (e, f)]
  for (Eigen::Index s1 = 0; s1 < ds; ++s1)
    for (Eigen::Index t1 = 0; t1 < ds; ++t1)
      for (Eigen::Index e = 0; e < de; ++e)
        for (Eigen::Index f = 0; f < de; ++f) reshaped(s1 * ds + t1, e * de + f) = front.rho()(s1 * de + e, t1 * de + f);
  const CMat mapped = super * reshaped;
  CMat rho(ds * de, ds * de);
  for (Eigen::Index s1 = 0; s1 < ds; ++s1)
    for (Eigen::Index t1 = 0; t1 < ds; ++t1)
      for (Eigen::Index e = 0; e < de; ++e)
        for (Eigen::Index f = 0; f < de; ++f) rho(s1 * de + e, t1 * de + f) = mapped(s1 * ds + t1, e * de + f);

  const FockState moved = detail::finish(front, std::move(rho), guard, "xi_map_fock");
  std::vector<std::size_t> back(n);
  for (std::size_t k = 0; k < n; ++k) back[order[k]] = k;
  return permute_modes(moved, back);
}

inline FockState xi_map_fock(const FockState& s, std::initializer_list<std::size_t> modes, double xi,
                             const TruncationGuard& guard = {}) {
  std::vector<std::size_t> v(modes);
  return xi_map_fock(s, std::span<const std::size_t>(v), xi, guard);
}

}  // namespace otcsim::fock
