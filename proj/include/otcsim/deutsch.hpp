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

// Deutsch consistency condition for a system interacting with its own past.
//
// U acts on (input (x) timelike) with the input as the leading factor. The
// timelike state must be a fixed point of
//   F(sigma) = Tr_input[U (rho_in (x) sigma) U^dag],
// and the chronology-respecting output is
//   rho_out = Tr_timelike[U (rho_in (x) sigma) U^dag].
// With this labelling U = SWAP is the non-interacting curve: F is constant
// with value rho_in and rho_out = rho_in.

#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "otcsim/fock.hpp"

namespace otcsim::fock {

struct DeutschOptions {
  double tol = 1e-12;
  std::size_t max_iter = 10000;
  /// Initial timelike state; the maximally mixed state when unset.
  std::optional<CMat> start;
  /// Iterations without a 0.1% residual decrease before averaging engages.
  std::size_t window = 8;
  /// Use averaged iteration from the first step.
  bool force_averaging = false;
};

struct DeutschResult {
  CMat rho_ctc;
  CMat rho_out;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
  bool averaged = false;
  std::vector<double> residual_history;
};

namespace detail {

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMat joint_output(const CMat& u, const CMat& rho_in, const CMat& sigma) {
  return u * kron(rho_in, sigma) * u.adjoint();
}

inline CMat trace_first(const CMat& m, Eigen::Index d) {
  CMat out = CMat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) out += m.block(i * d, i * d, d, d);
  return out;
}

inline CMat trace_second(const CMat& m, Eigen::Index d) {
  CMat out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k) out(i, k) = m.block(i * d, k * d, d, d).trace();
  return out;
}

}  // namespace detail

/// The consistency map F(sigma).
inline CMat deutsch_map(const CMat& u, const CMat& rho_in, const CMat& sigma) {
  return detail::trace_first(detail::joint_output(u, rho_in, sigma), rho_in.rows());
}

inline CMat deutsch_output(const CMat& u, const CMat& rho_in, const CMat& sigma) {
  return detail::trace_second(detail::joint_output(u, rho_in, sigma), rho_in.rows());
}

/// Solves sigma = F(sigma) by iteration from options.start. Plain iteration
/// switches to the averaged update sigma <- (sigma + F(sigma))/2 when the
/// residual ||F(sigma) - sigma||_1 stops decreasing; since F is a channel
/// and therefore trace-norm nonexpansive, the averaged residual never grows.
inline DeutschResult deutsch_fixed_point(const CMat& u, const CMat& rho_in,
                                         const DeutschOptions& opt = {}) {
  const Eigen::Index d = rho_in.rows();
  detail::require(rho_in.cols() == d && d >= 1, "deutsch: rho_in must be square");
  detail::require(u.rows() == d * d && u.cols() == d * d, "deutsch: U must act on input (x) timelike");
  detail::require(opt.tol > 0.0, "deutsch: tolerance must be positive");

  CMat sigma = opt.start ? *opt.start : CMat(CMat::Identity(d, d) / static_cast<double>(d));
  detail::require(sigma.rows() == d && sigma.cols() == d, "deutsch: start state has the wrong size");

  DeutschResult res;
  res.averaged = opt.force_averaging;
  CMat best = sigma;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    const CMat next = deutsch_map(u, rho_in, sigma);
    const double r = detail::trace_norm_hermitian(next - sigma);
    res.residual_history.push_back(r);
    res.iterations = it;
    if (r < res.residual) {
      res.residual = r;
      best = sigma;
    }
    if (r <= opt.tol) {
      res.converged = true;
      break;
    }
    const auto& h = res.residual_history;
    if (!res.averaged) {
      const bool rose = h.size() >= 2 && r > h[h.size() - 2] * (1.0 + 1e-12);
      const bool stalled = h.size() > opt.window && r >= h[h.size() - 1 - opt.window] * (1.0 - 1e-3);
      res.averaged = rose || stalled;
    }
    sigma = res.averaged ? CMat(0.5 * (sigma + next)) : next;
    sigma = 0.5 * (sigma + sigma.adjoint()).eval();
  }
  res.rho_ctc = best;
  res.rho_out = deutsch_output(u, rho_in, best);
  return res;
}

inline DeutschResult deutsch_fixed_point(const FockUnitary& u, const FockState& rho_in,
                                         const DeutschOptions& opt = {}) {
  detail::require(rho_in.num_modes() == 1, "deutsch: input must be a single mode");
  detail::require(u.num_modes == 2 && u.cutoff == rho_in.cutoff(),
                  "deutsch: U must act on (input, timelike) at the input cutoff");
  return deutsch_fixed_point(u.matrix, rho_in.rho(), opt);
}

/// Full-system Deutsch element on `mode`: the reduced state of `mode` is
/// processed by the fixed-point construction and the result is returned as a
/// product with the reduced state of the other modes.
inline FockState deutsch_channel(const FockState& total, std::size_t mode, const FockUnitary& u,
                                 const DeutschOptions& opt = {}, DeutschResult* report = nullptr) {
  total.check_mode(mode);
  const std::size_t m[] = {mode};
  const FockState local = partial_trace(total, m);
  DeutschResult sol = deutsch_fixed_point(u, local, opt);
  FockState out_local(1, total.cutoff(), sol.rho_out);
  if (report) *report = std::move(sol);
  if (total.num_modes() == 1) return FockState(1, total.cutoff(), out_local.rho(), total.discarded_weight());
  const auto rest = detail::complement(m, total.num_modes());
  FockState out = compose_product(out_local, m, partial_trace(total, rest), total.num_modes());
  return FockState(total.num_modes(), total.cutoff(), out.rho(), total.discarded_weight());
}

}  // namespace otcsim::fock
