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

// Parameterized experiments returning result tables with built-in checks.
//
// Angles in tables are output angles: theta = 0 is X and theta = pi/2 is P.
// A coherent amplitude alpha has <X> = 2 Im(alpha) and <P> = 2 Re(alpha).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "otcsim/fock_circuit.hpp"
#include "otcsim/timelike.hpp"
#include "otcsim/wavepacket.hpp"

namespace otcsim::experiments {

using json = nlohmann::json;

enum class Engine { gaussian, fock };

inline std::string engine_name(Engine e) { return e == Engine::gaussian ? "gaussian" : "fock"; }

inline Engine parse_engine(std::string_view s) {
  if (s == "gaussian") return Engine::gaussian;
  if (s == "fock") return Engine::fock;
  throw std::invalid_argument("unknown engine '" + std::string(s) + "'");
}

/// Gaussian engine against closed forms.
inline constexpr double kClosedFormTol = 1e-9;
inline constexpr double kMeanTol = 1e-10;
/// Fock engine against anything.
inline constexpr double kOracleTol = 1e-3;
inline constexpr double kConsistencyTol = 1e-12;
inline constexpr double kPhysicalTol = 1e-9;
inline constexpr double kStandardErrors = 5.0;

struct Check {
  enum class Relation { near, less, greater };

  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  Relation relation = Relation::near;
  bool passed = false;

  static Check near(std::string name, double value, double expected, double tol) {
    return {std::move(name), value, expected, tol, Relation::near, std::abs(value - expected) <= tol};
  }
  static Check less(std::string name, double value, double bound) {
    return {std::move(name), value, bound, 0.0, Relation::less, value < bound};
  }
  static Check greater(std::string name, double value, double bound) {
    return {std::move(name), value, bound, 0.0, Relation::greater, value > bound};
  }
};

inline std::string relation_name(Check::Relation r) {
  switch (r) {
    case Check::Relation::near: return "near";
    case Check::Relation::less: return "less";
    case Check::Relation::greater: return "greater";
  }
  return "near";
}

struct ResultTable {
  std::string kind;
  std::string name;
  Engine engine = Engine::gaussian;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  json metadata = json::object();
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  /// Rows are Monte-Carlo draws rather than deterministic values.
  bool stochastic = false;

  void add_row(std::vector<double> row) {
    detail::require(row.size() == columns.size(), "ResultTable: row width does not match columns");
    rows.push_back(std::move(row));
  }

  std::size_t column(std::string_view c) const {
    const auto it = std::find(columns.begin(), columns.end(), c);
    detail::require(it != columns.end(), "ResultTable: no column '" + std::string(c) + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }

  double at(std::size_t row, std::string_view c) const { return rows.at(row).at(column(c)); }

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

struct ExperimentConfig {
  std::string kind;
  std::string name;
  Engine engine = Engine::gaussian;
  cplx alpha{1.0, 0.0};
  /// Squeezing of every ancilla; experiments other than iterated_violation
  /// use a single value.
  std::vector<double> r{1.0};
  std::size_t M = 1;
  std::vector<double> xi{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> delta_t{0.0, 0.5, 1.0, 2.0, 5.0, 20.0};
  /// Output angles for single_pass.
  std::vector<double> thetas{0.0, kPi / 2};
  double sigma = 1.0;
  /// Second packet; equal to the first when unset.
  std::optional<double> sigma2;
  double center2 = 0.0;
  std::size_t shots = 10000;
  std::uint64_t seed = 0;
  /// Real offset between the two discrimination hypotheses.
  double separation = 0.5;
  std::size_t cutoff = 40;
  /// Fock truncation guard: largest tolerated weight loss per operation.
  double max_loss = fock::TruncationGuard{}.max_loss;
  std::optional<Circuit> circuit;
};

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

inline double single_pass_var_x(double r) { return std::exp(-r) * std::cosh(r); }
inline double single_pass_var_p(double r) { return std::exp(r) * std::cosh(r); }

/// R = 2 r / ln 2.
inline double resource_R(double r) { return 2.0 * r / std::log(2.0); }

/// Squeezed-quadrature variance after M read-out stages.
inline double iterated_variance(double r, std::size_t M) {
  const double R = resource_R(r), m = static_cast<double>(M);
  return (1.0 + std::exp2(m - R) - std::exp2(-R)) / std::exp2(m);
}

/// Each component of the amplitude estimator has variance V_M / 2.
inline double estimator_variance(double r, std::size_t M) { return iterated_variance(r, M) / 2.0; }

/// Mean of |<alpha|alpha_hat>|^2 = exp(-|alpha - alpha_hat|^2) over the estimator.
inline double predicted_fidelity(double r, std::size_t M) { return 1.0 / (1.0 + iterated_variance(r, M)); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Error of the midpoint test between alpha and alpha + separation.
inline double predicted_discrimination_error(double r, std::size_t M, double separation) {
  if (separation == 0.0) return 0.5;
  return normal_cdf(-0.5 * std::abs(separation) / std::sqrt(estimator_variance(r, M)));
}

// ---------------------------------------------------------------------------
// Circuits
// ---------------------------------------------------------------------------

/// Mode 0 carries |alpha>, mode 1 an X-squeezed ancilla; a 50:50 splitter,
/// an OTC of reflectivity xi on mode 0, and a second splitter.
inline Circuit squeezing_circuit(cplx alpha, double r, const OtcElement& otc) {
  detail::require(otc.modes == std::vector<std::size_t>{0}, "squeezing_circuit: the OTC must act on mode 0");
  Circuit c(2);
  c.add(Displacement{0, alpha})
      .add(Squeezer{1, r, kOutputX})
      .add(BeamSplitter{0, 1, 0.5})
      .add(otc)
      .add(BeamSplitter{0, 1, 0.5});
  return c;
}

inline Circuit squeezing_circuit(cplx alpha, double r, double xi = 0.0) {
  return squeezing_circuit(alpha, r, OtcElement{{0}, xi, 0.0});
}

/// Read-out circuit: |alpha> is split into arms A (mode 0) and B (mode 1);
/// each of M rounds passes A through the squeezing stage with a fresh
/// X-squeezed ancilla (mode 2 + 2k) and B with a fresh P-squeezed one
/// (mode 3 + 2k).
inline Circuit read_out_circuit(cplx alpha, double r, std::size_t M) {
  detail::require(M >= 1, "read_out_circuit: M must be at least 1");
  Circuit c(2 + 2 * M);
  c.add(Displacement{0, alpha}).add(BeamSplitter{0, 1, 0.5});
  for (std::size_t k = 0; k < M; ++k) {
    const std::size_t a = 2 + 2 * k, b = 3 + 2 * k;
    c.add(Squeezer{a, r, kOutputX}).add(BeamSplitter{0, a, 0.5}).add(OtcElement{{0}, 0.0, 0.0}).add(BeamSplitter{0, a, 0.5});
    c.add(Squeezer{b, r, kOutputP}).add(BeamSplitter{1, b, 0.5}).add(OtcElement{{1}, 0.0, 0.0}).add(BeamSplitter{1, b, 0.5});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Engine-neutral final states
// ---------------------------------------------------------------------------

class Outcome {
 public:
  explicit Outcome(GaussianState s) : state_(std::move(s)) {}
  explicit Outcome(fock::FockState s) : state_(std::move(s)) {}

  bool is_gaussian() const { return std::holds_alternative<GaussianState>(state_); }
  const GaussianState& gaussian() const { return std::get<GaussianState>(state_); }
  const fock::FockState& fock() const { return std::get<fock::FockState>(state_); }

  std::size_t num_modes() const {
    return is_gaussian() ? gaussian().num_modes() : fock().num_modes();
  }

  /// Statistics of X(theta) at output angle theta.
  QuadStats quad(std::size_t mode, double theta) const {
    const double phi = internal_angle(theta);
    if (is_gaussian()) return quad_stats(gaussian(), mode, phi);
    const auto q = fock::quad_stats_fock(fock(), mode, phi);
    return {q.mean, q.variance};
  }

  cplx amplitude(std::size_t mode) const {
    return is_gaussian() ? gaussian().amplitude(mode) : fock::amplitude(fock(), mode);
  }

  double discarded_weight() const { return is_gaussian() ? 0.0 : fock().discarded_weight(); }

  /// Gaussian: min eigenvalue of cov + i Omega. Fock: a lower bound on the
  /// min eigenvalue of rho, exact when the bound would fail.
  double physicality() const {
    return is_gaussian() ? gaussian().min_physical_eigenvalue()
                         : fock().min_eigenvalue_bound(0.5 * kPhysicalTol);
  }

 private:
  std::variant<GaussianState, fock::FockState> state_;
};

inline Outcome simulate(const Circuit& c, Engine e, std::size_t cutoff,
                        double max_loss = fock::TruncationGuard{}.max_loss) {
  if (e == Engine::gaussian) return Outcome(run_circuit(c));
  return Outcome(fock::run_circuit(c, cutoff, fock::TruncationGuard{max_loss}));
}

inline Outcome simulate(const Circuit& c, const ExperimentConfig& cfg) {
  return simulate(c, cfg.engine, cfg.cutoff, cfg.max_loss);
}

namespace detail {

using otcsim::detail::require;

inline double single_r(const ExperimentConfig& cfg) {
  require(cfg.r.size() == 1, cfg.kind + ": expects a single squeezing value");
  return cfg.r.front();
}

inline void check_r(double r) { require(std::isfinite(r) && r >= 0.0, "squeezing r must be finite and >= 0"); }

inline void check_alpha(cplx a) {
  require(std::isfinite(a.real()) && std::isfinite(a.imag()), "alpha must be finite");
}

inline double mean_tol(Engine e) { return e == Engine::gaussian ? kMeanTol : kOracleTol; }
inline double value_tol(Engine e) { return e == Engine::gaussian ? kClosedFormTol : kOracleTol; }

inline std::string fmt(double v) { return json(v).dump(); }

inline ResultTable start(const ExperimentConfig& cfg, std::vector<std::string> columns) {
  ResultTable t;
  t.kind = cfg.kind;
  t.name = cfg.name.empty() ? cfg.kind : cfg.name;
  t.engine = cfg.engine;
  t.columns = std::move(columns);
  t.metadata["engine"] = engine_name(cfg.engine);
  t.metadata["seed"] = cfg.seed;
  t.metadata["alpha"] = {cfg.alpha.real(), cfg.alpha.imag()};
  t.metadata["quadrature_convention"] = "theta=0 is X, theta=pi/2 is P; vacuum variance 1; <X> = 2 Im(alpha), <P> = 2 Re(alpha)";
  if (cfg.engine == Engine::fock) {
    t.metadata["cutoff"] = cfg.cutoff;
    t.metadata["max_loss"] = cfg.max_loss;
  }
  t.metadata["tolerances"] = {{"closed_form", value_tol(cfg.engine)},
                              {"mean", mean_tol(cfg.engine)}};
  return t;
}

inline void check_amplitude(ResultTable& t, const std::string& label, cplx got, cplx want, Engine e) {
  t.checks.push_back(Check::near(label + ".re", got.real(), want.real(), mean_tol(e)));
  t.checks.push_back(Check::near(label + ".im", got.imag(), want.imag(), mean_tol(e)));
}

inline void check_physical(ResultTable& t, const std::string& label, const Outcome& o) {
  t.checks.push_back(Check::greater(label, o.physicality(), -kPhysicalTol));
}

/// One squeezing stage on a single-mode Fock rail with a fresh vacuum
/// ancilla squeezed at internal angle `angle`.
inline fock::FockState fock_stage(const fock::FockState& rail, double r, double angle,
                                  const fock::TruncationGuard& guard) {
  Circuit stage(2);
  stage.add(Squeezer{1, r, angle})
      .add(BeamSplitter{0, 1, 0.5})
      .add(OtcElement{{0}, 0.0, 0.0})
      .add(BeamSplitter{0, 1, 0.5});
  const auto joint = fock::tensor(rail, fock::FockState(1, rail.cutoff()));
  return fock::partial_trace(fock::run_circuit(stage, joint, guard), {0});
}

/// Arm marginals of the read-out circuit after each of rounds 1..M on the
/// Fock engine. Every OTC replaces the arm by its marginal, so the arms can
/// be propagated one at a time.
inline std::vector<std::pair<fock::FockState, fock::FockState>> fock_read_out(cplx alpha, double r,
                                                                              std::size_t M,
                                                                              std::size_t cutoff,
                                                                              double max_loss) {
  const fock::TruncationGuard guard{max_loss};
  Circuit split(2);
  split.add(Displacement{0, alpha}).add(BeamSplitter{0, 1, 0.5});
  const auto s = fock::run_circuit(split, cutoff, guard);
  fock::FockState a = fock::partial_trace(s, {0}), b = fock::partial_trace(s, {1});
  std::vector<std::pair<fock::FockState, fock::FockState>> out;
  for (std::size_t k = 0; k < M; ++k) {
    a = fock_stage(a, r, kOutputX, guard);
    b = fock_stage(b, r, kOutputP, guard);
    out.emplace_back(a, b);
  }
  return out;
}

/// (X_A, P_B) statistics of the read-out outputs after M rounds.
struct ArmStats {
  QuadStats xa, pb;
  cplx amp_a, amp_b;
  std::optional<GaussianState> state;  // Gaussian engine only
};

inline std::vector<ArmStats> read_out_stats(cplx alpha, double r, std::size_t M, const ExperimentConfig& cfg,
                                            bool all_rounds) {
  const Engine e = cfg.engine;
  std::vector<ArmStats> out;
  if (e == Engine::gaussian) {
    for (std::size_t m = all_rounds ? 1 : M; m <= M; ++m) {
      const Outcome o(run_circuit(read_out_circuit(alpha, r, m)));
      out.push_back({o.quad(0, 0.0), o.quad(1, kPi / 2), o.amplitude(0), o.amplitude(1), o.gaussian()});
    }
    return out;
  }
  const auto arms = fock_read_out(alpha, r, M, cfg.cutoff, cfg.max_loss);
  for (std::size_t m = all_rounds ? 1 : M; m <= M; ++m) {
    const Outcome a(arms[m - 1].first), b(arms[m - 1].second);
    out.push_back({a.quad(0, 0.0), b.quad(0, kPi / 2), a.amplitude(0), b.amplitude(0), std::nullopt});
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// Squeezing stage on |alpha>: output mean and variance at each angle.
inline ResultTable single_pass(const ExperimentConfig& cfg) {
  const double r = detail::single_r(cfg);
  detail::check_r(r);
  detail::check_alpha(cfg.alpha);
  detail::require(!cfg.thetas.empty(), "single_pass: need at least one angle");

  ResultTable t = detail::start(cfg, {"theta", "mean", "variance"});
  const Outcome o = simulate(squeezing_circuit(cfg.alpha, r), cfg);
  const double vx = single_pass_var_x(r), vp = single_pass_var_p(r);
  const double tol = detail::value_tol(cfg.engine);
  const double mx = 2.0 * cfg.alpha.imag(), mp = 2.0 * cfg.alpha.real();

  for (double th : cfg.thetas) {
    const auto q = o.quad(0, th);
    t.add_row({th, q.mean, q.variance});
    const double c = std::cos(th), s = std::sin(th);
    const std::string at = "(theta=" + detail::fmt(th) + ")";
    t.checks.push_back(Check::near("mean" + at, q.mean, c * mx + s * mp, detail::mean_tol(cfg.engine)));
    t.checks.push_back(Check::near("variance" + at, q.variance, c * c * vx + s * s * vp, tol));
  }
  t.checks.push_back(Check::near("var_x", o.quad(0, 0.0).variance, vx, tol));
  t.checks.push_back(Check::near("var_p", o.quad(0, kPi / 2).variance, vp, tol));
  detail::check_amplitude(t, "amplitude", o.amplitude(0), cfg.alpha, cfg.engine);
  detail::check_physical(t, "physical", o);

  t.metadata["r"] = r;
  t.metadata["closed_form"] = {{"var_x", vx}, {"var_p", vp}};
  t.metadata["discarded_weight"] = o.discarded_weight();
  return t;
}

/// Read-out circuit for M = 1..cfg.M at every squeezing value.
inline ResultTable iterated_violation(const ExperimentConfig& cfg) {
  detail::require(cfg.M >= 1, "iterated_violation: M must be at least 1");
  detail::require(!cfg.r.empty(), "iterated_violation: need at least one squeezing value");
  detail::check_alpha(cfg.alpha);
  for (double r : cfg.r) detail::check_r(r);

  ResultTable t = detail::start(cfg, {"r", "M", "var_xa", "var_pb", "product", "closed_form", "violation"});
  const double tol = detail::value_tol(cfg.engine);
  const cplx arm = cfg.alpha / std::sqrt(2.0);
  std::vector<std::vector<double>> by_r;

  for (double r : cfg.r) {
    const auto stats = detail::read_out_stats(cfg.alpha, r, cfg.M, cfg, true);
    std::vector<double> vs;
    for (std::size_t m = 1; m <= cfg.M; ++m) {
      const auto& st = stats[m - 1];
      const double product = st.xa.variance * st.pb.variance;
      const double cf = iterated_variance(r, m);
      t.add_row({r, static_cast<double>(m), st.xa.variance, st.pb.variance, product, cf, product < 1.0 ? 1.0 : 0.0});
      const std::string at = "(r=" + detail::fmt(r) + ",M=" + std::to_string(m) + ")";
      t.checks.push_back(Check::near("var_xa" + at, st.xa.variance, cf, tol));
      t.checks.push_back(Check::near("var_pb" + at, st.pb.variance, cf, tol));
      detail::check_amplitude(t, "amplitude_a" + at, st.amp_a, arm, cfg.engine);
      detail::check_amplitude(t, "amplitude_b" + at, st.amp_b, arm, cfg.engine);
      vs.push_back(st.xa.variance);
    }
    // The first round is the single squeezing stage.
    const Outcome single = simulate(squeezing_circuit(arm, r), cfg);
    t.checks.push_back(Check::near("single_pass_consistency(r=" + detail::fmt(r) + ")", vs.front(),
                                   single.quad(0, 0.0).variance,
                                   cfg.engine == Engine::gaussian ? kConsistencyTol : kOracleTol));
    if (r > 0.0 && vs.size() > 1) {
      double rise = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < vs.size(); ++k) rise = std::max(rise, vs[k] - vs[k - 1]);
      t.checks.push_back(Check::less("decreasing_in_M(r=" + detail::fmt(r) + ")", rise, 0.0));
    }
    by_r.push_back(std::move(vs));
  }

  std::vector<std::size_t> order(cfg.r.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.r[a] < cfg.r[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (cfg.r[order[k]] == cfg.r[order[k - 1]]) continue;
    double rise = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < cfg.M; ++m) rise = std::max(rise, by_r[order[k]][m] - by_r[order[k - 1]][m]);
    t.checks.push_back(Check::less("decreasing_in_r(r=" + detail::fmt(cfg.r[order[k]]) + ")", rise, 0.0));
  }

  json R = json::array();
  for (double r : cfg.r) R.push_back(resource_R(r));
  t.metadata["r"] = cfg.r;
  t.metadata["R"] = R;
  t.metadata["M"] = cfg.M;
  t.metadata["violation_rule"] = "violation = 1 when var_xa * var_pb < 1";
  return t;
}

/// Homodyne read-out of the M-round circuit, amplitude estimation, cloning
/// fidelity and two-hypothesis discrimination.
///
/// alpha_hat = (P_B + i X_A) / sqrt(2); each component has variance V_M / 2.
/// Cloning fidelity is |<alpha|alpha_hat>|^2 = exp(-|alpha - alpha_hat|^2).
/// Discrimination picks between alpha and alpha + separation by the
/// midpoint of the projection of alpha_hat onto their difference; hypotheses
/// alternate between trials, and zero separation is a fair coin.
inline ResultTable tomography_cloning(const ExperimentConfig& cfg) {
  const double r = detail::single_r(cfg);
  detail::check_r(r);
  detail::check_alpha(cfg.alpha);
  detail::require(cfg.M >= 1, "tomography_cloning: M must be at least 1");
  detail::require(cfg.shots >= 100, "tomography_cloning: need at least 100 shots");
  detail::require(std::isfinite(cfg.separation), "tomography_cloning: separation must be finite");

  ResultTable t = detail::start(cfg, {"shot", "alpha_re_hat", "alpha_im_hat", "fidelity"});
  t.stochastic = true;

  const cplx alpha1 = cfg.alpha + cplx(cfg.separation, 0.0);
  const auto h0 = detail::read_out_stats(cfg.alpha, r, cfg.M, cfg, false).front();
  const auto h1 = detail::read_out_stats(alpha1, r, cfg.M, cfg, false).front();

  std::mt19937_64 gen(cfg.seed);
  const double rt2 = std::sqrt(2.0);
  auto draw = [&](const detail::ArmStats& st) {
    double xa, pb;
    if (st.state) {
      xa = homodyne_sample(*st.state, 0, kOutputX, gen);
      pb = homodyne_sample(*st.state, 1, kOutputP, gen);
    } else {
      xa = std::normal_distribution<double>(st.xa.mean, std::sqrt(st.xa.variance))(gen);
      pb = std::normal_distribution<double>(st.pb.mean, std::sqrt(st.pb.variance))(gen);
    }
    return cplx(pb / rt2, xa / rt2);
  };

  const auto n = static_cast<double>(cfg.shots);
  double sre = 0, sim = 0, sre2 = 0, sim2 = 0, sf = 0, sf2 = 0;
  for (std::size_t k = 0; k < cfg.shots; ++k) {
    const cplx a = draw(h0);
    const double f = std::exp(-std::norm(a - cfg.alpha));
    t.add_row({static_cast<double>(k), a.real(), a.imag(), f});
    sre += a.real(), sim += a.imag(), sf += f;
    sre2 += a.real() * a.real(), sim2 += a.imag() * a.imag(), sf2 += f * f;
  }
  const double mre = sre / n, mim = sim / n, mf = sf / n;
  const double vre = (sre2 - n * mre * mre) / (n - 1), vim = (sim2 - n * mim * mim) / (n - 1);
  const double vf = std::max(0.0, (sf2 - n * mf * mf) / (n - 1));

  std::bernoulli_distribution coin(0.5);
  std::size_t errors = 0;
  for (std::size_t k = 0; k < cfg.shots; ++k) {
    const bool truth = (k % 2) == 1;
    const cplx a = draw(truth ? h1 : h0);
    bool guess;
    if (cfg.separation == 0.0) {
      guess = coin(gen);
    } else {
      const double proj = (a - cfg.alpha).real() / cfg.separation;
      guess = proj > 0.5;
    }
    errors += guess != truth ? 1 : 0;
  }
  const double err = static_cast<double>(errors) / n;

  const double ve = estimator_variance(r, cfg.M);
  const double se_var = ve * std::sqrt(2.0 / (n - 1));
  const double se_mean = std::sqrt(ve / n);
  const double pf = predicted_fidelity(r, cfg.M);
  const double pe = predicted_discrimination_error(r, cfg.M, cfg.separation);
  const double se_err = std::sqrt(std::max(pe * (1 - pe), 1.0 / n) / n);
  const double k = kStandardErrors;

  t.checks.push_back(Check::near("estimator_variance.re", vre, ve, k * se_var));
  t.checks.push_back(Check::near("estimator_variance.im", vim, ve, k * se_var));
  t.checks.push_back(Check::near("estimator_mean.re", mre, cfg.alpha.real(), k * se_mean));
  t.checks.push_back(Check::near("estimator_mean.im", mim, cfg.alpha.imag(), k * se_mean));
  t.checks.push_back(Check::near("mean_fidelity", mf, pf, k * std::max(std::sqrt(vf / n), 1e-12)));
  t.checks.push_back(Check::near("discrimination_error", err, pe, k * se_err));
  detail::check_amplitude(t, "amplitude_a", h0.amp_a, cfg.alpha / rt2, cfg.engine);
  detail::check_amplitude(t, "amplitude_b", h0.amp_b, cfg.alpha / rt2, cfg.engine);

  t.metadata["r"] = r;
  t.metadata["M"] = cfg.M;
  t.metadata["shots"] = cfg.shots;
  t.metadata["estimator"] = "alpha_hat = (P_B + i X_A) / sqrt(2)";
  t.metadata["fidelity_metric"] = "exp(-|alpha - alpha_hat|^2), averaged over shots";
  t.metadata["discrimination"] = {{"protocol", "midpoint threshold on the projection onto the hypothesis offset"},
                                  {"hypotheses", {{cfg.alpha.real(), cfg.alpha.imag()}, {alpha1.real(), alpha1.imag()}}},
                                  {"separation", cfg.separation},
                                  {"error", err},
                                  {"predicted_error", pe}};
  t.metadata["empirical"] = {{"variance_re", vre}, {"variance_im", vim}, {"mean_re", mre}, {"mean_im", mim},
                             {"mean_fidelity", mf}};
  t.metadata["predicted"] = {{"estimator_variance", ve}, {"mean_fidelity", pf}};
  return t;
}

namespace detail {

inline void check_xi_row(ResultTable& t, const std::string& at, double xi, double r, const Outcome& o,
                         cplx alpha, Engine e) {
  const double tol = value_tol(e);
  if (xi == 0.0) {
    t.checks.push_back(Check::near("var_x" + at, o.quad(0, 0.0).variance, single_pass_var_x(r), tol));
    t.checks.push_back(Check::near("var_p" + at, o.quad(0, kPi / 2).variance, single_pass_var_p(r), tol));
  } else if (xi == 1.0) {
    t.checks.push_back(Check::near("var_x" + at, o.quad(0, 0.0).variance, 1.0, tol));
    t.checks.push_back(Check::near("var_p" + at, o.quad(0, kPi / 2).variance, 1.0, tol));
  }
  check_amplitude(t, "amplitude" + at, o.amplitude(0), alpha, e);
  check_physical(t, "physical" + at, o);
}

}  // namespace detail

/// Squeezing stage with the OTC replaced by reflectivity xi.
inline ResultTable xi_sweep(const ExperimentConfig& cfg) {
  const double r = detail::single_r(cfg);
  detail::check_r(r);
  detail::check_alpha(cfg.alpha);
  for (double x : cfg.xi) detail::require(x >= 0.0 && x <= 1.0, "xi_sweep: xi must lie in [0, 1]");

  ResultTable t = detail::start(cfg, {"xi", "mean_x", "var_x", "mean_p", "var_p"});
  for (double xi : cfg.xi) {
    const Outcome o = simulate(squeezing_circuit(cfg.alpha, r, xi), cfg);
    const auto qx = o.quad(0, 0.0), qp = o.quad(0, kPi / 2);
    t.add_row({xi, qx.mean, qx.variance, qp.mean, qp.variance});
    detail::check_xi_row(t, "(xi=" + detail::fmt(xi) + ")", xi, r, o, cfg.alpha, cfg.engine);
  }
  t.metadata["r"] = r;
  t.metadata["endpoints"] = {{"xi=0", {{"var_x", single_pass_var_x(r)}, {"var_p", single_pass_var_p(r)}}},
                             {"xi=1", {{"var_x", 1.0}, {"var_p", 1.0}}}};
  return t;
}

/// Clock offset -> packet overlap xi -> squeezing stage at that xi.
inline ResultTable overlap_experiment(const ExperimentConfig& cfg) {
  const double r = detail::single_r(cfg);
  detail::check_r(r);
  detail::check_alpha(cfg.alpha);
  const wavepacket::WavePacket g1(0.0, cfg.sigma);
  const wavepacket::WavePacket g2(cfg.center2, cfg.sigma2.value_or(cfg.sigma));

  ResultTable t = detail::start(cfg, {"delta_t", "xi", "xi_closed_form", "var_x", "var_p"});
  if (!wavepacket::same_shape(g1, g2))
    t.warnings.push_back("unequal packets: the overlap ratio is not bounded by 1 and is clamped to [0, 1]");

  const double tol = detail::value_tol(cfg.engine);
  for (double dt : cfg.delta_t) {
    const double raw = wavepacket::xi_overlap_raw(g1, g2, dt);
    if (raw > 1.0 + 1e-12)
      t.warnings.push_back("overlap ratio " + detail::fmt(raw) + " above 1 at delta_t=" + detail::fmt(dt));
    const OtcElement otc = wavepacket::otc_for_shift(g1, g2, dt, {0});
    const double cf = wavepacket::xi_closed_form(g1, g2, dt);
    const std::string at = "(delta_t=" + detail::fmt(dt) + ")";
    t.checks.push_back(Check::near("xi" + at, raw, cf, kClosedFormTol));

    const Outcome o = simulate(squeezing_circuit(cfg.alpha, r, otc), cfg);
    const auto qx = o.quad(0, 0.0), qp = o.quad(0, kPi / 2);
    t.add_row({dt, otc.xi, cf, qx.variance, qp.variance});

    if (otc.xi < 1e-10) {
      t.checks.push_back(Check::near("var_x_otc_limit" + at, qx.variance, single_pass_var_x(r), tol));
    }
    if (dt == 0.0 && wavepacket::same_shape(g1, g2)) {
      t.checks.push_back(Check::near("xi_at_zero_shift", otc.xi, 1.0, 0.0));
      t.checks.push_back(Check::near("var_x_at_zero_shift", qx.variance, 1.0, tol));
    }
    detail::check_amplitude(t, "amplitude" + at, o.amplitude(0), cfg.alpha, cfg.engine);
    detail::check_physical(t, "physical" + at, o);
  }
  t.metadata["r"] = r;
  t.metadata["packets"] = {{"sigma1", g1.width}, {"sigma2", g2.width}, {"center2", g2.center}};
  t.metadata["closed_form"] = "xi = exp(-((c2 - c1 + dT)^2 - (c2 - c1)^2) / (2 (s1^2 + s2^2)))";
  return t;
}

/// Runs a user circuit from the vacuum and reports every mode.
inline ResultTable custom_circuit(const ExperimentConfig& cfg) {
  detail::require(cfg.circuit.has_value(), "custom_circuit: no circuit given");
  const Circuit& c = *cfg.circuit;
  ResultTable t = detail::start(cfg, {"mode", "amp_re", "amp_im", "mean_x", "var_x", "mean_p", "var_p"});
  const Outcome o = simulate(c, cfg);
  for (std::size_t m = 0; m < c.num_modes(); ++m) {
    const auto a = o.amplitude(m);
    const auto qx = o.quad(m, 0.0), qp = o.quad(m, kPi / 2);
    t.add_row({static_cast<double>(m), a.real(), a.imag(), qx.mean, qx.variance, qp.mean, qp.variance});
  }
  detail::check_physical(t, "physical", o);
  t.metadata["num_modes"] = c.num_modes();
  t.metadata["num_elements"] = c.elements().size();
  t.metadata["total_time_shift"] = c.total_time_shift();
  t.metadata["discarded_weight"] = o.discarded_weight();
  return t;
}

struct ExperimentInfo {
  std::string id;
  std::string summary;
  /// Accepted parameter keys.
  std::vector<std::string> params;
  std::string reproduces;
  ResultTable (*run)(const ExperimentConfig&);
};

inline const std::vector<ExperimentInfo>& registry() {
  static const std::vector<ExperimentInfo> list = {
      {"single_pass", "one squeezing stage on a coherent input",
       {"alpha", "r", "thetas", "cutoff", "max_loss"},
       "X and P variances e^{-r}cosh r and e^{r}cosh r with the coherent amplitude unchanged",
       &single_pass},
      {"iterated_violation", "read-out circuit with M squeezing rounds per arm; r may be a list",
       {"alpha", "r", "M", "cutoff", "max_loss"},
       "Var X_A = Var P_B = (1 + 2^{M-R} - 2^{-R}) / 2^M with R = 2r/ln 2; product below 1",
       &iterated_violation},
      {"tomography_cloning", "homodyne amplitude estimation, cloning fidelity and discrimination",
       {"alpha", "r", "M", "shots", "separation", "cutoff", "max_loss"},
       "coherent amplitudes read out, distinguished and cloned beyond the quantum limit",
       &tomography_cloning},
      {"xi_sweep", "squeezing stage with a partial OTC of reflectivity xi",
       {"alpha", "r", "xi", "cutoff", "max_loss"},
       "xi = 0 gives the OTC result and xi = 1 the identity",
       &xi_sweep},
      {"overlap_experiment", "clock offset mapped to xi by Gaussian packet overlap",
       {"alpha", "r", "sigma", "sigma2", "center2", "delta_t", "cutoff", "max_loss"},
       "xi = exp(-dT^2 / (4 sigma^2)) for equal packets; large offsets recover the OTC",
       &overlap_experiment},
      {"custom_circuit", "user circuit from the vacuum",
       {"circuit", "cutoff", "max_loss"},
       "per-mode amplitudes and X/P statistics",
       &custom_circuit},
  };
  return list;
}

inline const ExperimentInfo* find_experiment(std::string_view id) {
  for (const auto& e : registry())
    if (e.id == id) return &e;
  return nullptr;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
  const ExperimentInfo* info = find_experiment(cfg.kind);
  detail::require(info != nullptr, "unknown experiment '" + cfg.kind + "'");
  return info->run(cfg);
}

/// Cell-by-cell agreement of the same experiment on both engines.
inline std::vector<Check> compare_engines(const ResultTable& gaussian, const ResultTable& fock,
                                          double tol = kOracleTol) {
  detail::require(gaussian.columns == fock.columns && gaussian.rows.size() == fock.rows.size(),
                  "compare_engines: tables differ in shape");
  std::vector<Check> out;
  if (gaussian.stochastic || fock.stochastic) return out;
  for (std::size_t i = 0; i < gaussian.rows.size(); ++i)
    for (std::size_t j = 0; j < gaussian.columns.size(); ++j)
      out.push_back(Check::near("engines_agree(row=" + std::to_string(i) + "," + gaussian.columns[j] + ")",
                                fock.rows[i][j], gaussian.rows[i][j], tol));
  return out;
}

}  // namespace otcsim::experiments
