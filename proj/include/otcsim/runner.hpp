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

// Batch execution of a run manifest: parsing, seeding, worker pool, CSV,
// summary and plot output. See docs/manifest-format.md.

#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "otcsim/circuit_io.hpp"
#include "otcsim/experiments.hpp"
#include "otcsim/svg.hpp"

namespace otcsim::runner {

using json = nlohmann::json;
using experiments::Engine;
using experiments::ExperimentConfig;
using experiments::ResultTable;
using io::ParseError;

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kWorkersEnv = "OTCSIM_WORKERS";

enum ExitCode : int { kSuccess = 0, kAssertionFailure = 1, kUsageError = 2, kEngineError = 3 };

enum class EngineSelection { gaussian, fock, both };

inline EngineSelection parse_engine_selection(std::string_view s) {
  if (s == "gaussian") return EngineSelection::gaussian;
  if (s == "fock") return EngineSelection::fock;
  if (s == "both") return EngineSelection::both;
  throw ParseError("engine: expected gaussian, fock or both, got '" + std::string(s) + "'");
}

inline std::string selection_name(EngineSelection e) {
  switch (e) {
    case EngineSelection::gaussian: return "gaussian";
    case EngineSelection::fock: return "fock";
    case EngineSelection::both: return "both";
  }
  return "gaussian";
}

struct ManifestEntry {
  ExperimentConfig config;
  std::optional<std::uint64_t> seed;
  std::optional<EngineSelection> engine;
};

struct Manifest {
  EngineSelection engine = EngineSelection::gaussian;
  std::uint64_t seed = 0;
  std::string out_dir = "otcsim-out";
  std::optional<std::size_t> workers;
  bool plots = false;
  std::vector<ManifestEntry> experiments;
};

struct RunOptions {
  std::optional<EngineSelection> engine;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool plots = false;
  /// Value of the worker-count environment variable, if set.
  std::optional<std::string> workers_env;
};

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t global, std::string_view name) {
  return splitmix64(global ^ fnv1a(name));
}

// ---------------------------------------------------------------------------
// Manifest parsing
// ---------------------------------------------------------------------------

namespace detail {

using io::detail::complex_value;
using io::detail::fail;
using io::detail::field;
using io::detail::number;

inline std::size_t count(const json& v, const std::string& where, std::size_t min) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
    fail(where, "expected an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

inline std::uint64_t seed_value(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(where, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::vector<double> numbers(const json& v, const std::string& where, bool scalar_ok) {
  if (scalar_ok && v.is_number()) return {number(v, where)};
  if (!v.is_array()) fail(where, scalar_ok ? "expected a number or an array of numbers" : "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline bool safe_name(const std::string& s) {
  if (s.empty() || s.size() > 128 || s[0] == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

inline void apply_param(ExperimentConfig& cfg, const std::string& key, const json& v, const std::string& where,
                        const std::filesystem::path& base_dir) {
  if (key == "alpha") {
    cfg.alpha = complex_value(v, where);
  } else if (key == "r") {
    cfg.r = numbers(v, where, true);
  } else if (key == "M") {
    cfg.M = count(v, where, 1);
  } else if (key == "xi") {
    cfg.xi = numbers(v, where, true);
  } else if (key == "delta_t") {
    cfg.delta_t = numbers(v, where, true);
  } else if (key == "thetas") {
    cfg.thetas = numbers(v, where, true);
  } else if (key == "sigma") {
    cfg.sigma = number(v, where);
  } else if (key == "sigma2") {
    cfg.sigma2 = number(v, where);
  } else if (key == "center2") {
    cfg.center2 = number(v, where);
  } else if (key == "shots") {
    cfg.shots = count(v, where, 1);
  } else if (key == "separation") {
    cfg.separation = number(v, where);
  } else if (key == "cutoff") {
    cfg.cutoff = count(v, where, 2);
  } else if (key == "max_loss") {
    cfg.max_loss = number(v, where);
    if (!(cfg.max_loss >= 0.0 && cfg.max_loss <= 1.0)) fail(where, "expected a value in [0, 1]");
  } else if (key == "circuit") {
    if (v.is_string()) {
      std::filesystem::path p(v.get<std::string>());
      if (p.is_relative()) p = base_dir / p;
      cfg.circuit = io::load_circuit(p.string());
    } else {
      cfg.circuit = io::circuit_from_json(v);
    }
  } else {
    fail(where, "unknown parameter");
  }
}

}  // namespace detail

inline Manifest parse_manifest(const json& j, const std::filesystem::path& base_dir = ".") {
  using namespace detail;
  const std::string where = "manifest";
  if (!j.is_object()) fail(where, "expected an object");
  io::detail::only_keys(j, {"schema_version", "engine", "seed", "out_dir", "workers", "plots", "experiments"}, where);
  const auto& ver = field(j, "schema_version", where);
  if (!ver.is_number_integer() || ver.get<int>() != kManifestSchemaVersion)
    fail(where + ".schema_version", "unsupported version (expected " + std::to_string(kManifestSchemaVersion) + ")");

  Manifest m;
  if (auto it = j.find("engine"); it != j.end()) {
    if (!it->is_string()) fail(where + ".engine", "expected a string");
    m.engine = parse_engine_selection(it->get<std::string>());
  }
  if (auto it = j.find("seed"); it != j.end()) m.seed = seed_value(*it, where + ".seed");
  if (auto it = j.find("out_dir"); it != j.end()) {
    if (!it->is_string() || it->get<std::string>().empty()) fail(where + ".out_dir", "expected a non-empty string");
    std::filesystem::path p(it->get<std::string>());
    m.out_dir = (p.is_relative() ? base_dir / p : p).string();
  }
  if (auto it = j.find("workers"); it != j.end()) m.workers = count(*it, where + ".workers", 1);
  if (auto it = j.find("plots"); it != j.end()) {
    if (!it->is_boolean()) fail(where + ".plots", "expected true or false");
    m.plots = it->get<bool>();
  }

  const auto it = j.find("experiments");
  if (it == j.end()) return m;
  if (!it->is_array()) fail(where + ".experiments", "expected an array");

  std::map<std::string, std::size_t> per_kind;
  for (const auto& e : *it)
    if (e.is_object() && e.contains("id") && e["id"].is_string()) ++per_kind[e["id"].get<std::string>()];

  std::set<std::string> names;
  for (std::size_t k = 0; k < it->size(); ++k) {
    const json& e = (*it)[k];
    const std::string at = where + ".experiments[" + std::to_string(k) + "]";
    if (!e.is_object()) fail(at, "expected an object");
    io::detail::only_keys(e, {"id", "name", "engine", "seed", "params"}, at);
    const auto& id = field(e, "id", at);
    if (!id.is_string()) fail(at + ".id", "expected a string");
    ManifestEntry entry;
    entry.config.kind = id.get<std::string>();
    const auto* info = experiments::find_experiment(entry.config.kind);
    if (!info) fail(at + ".id", "unknown experiment '" + entry.config.kind + "'");

    if (auto n = e.find("name"); n != e.end()) {
      if (!n->is_string()) fail(at + ".name", "expected a string");
      entry.config.name = n->get<std::string>();
    } else {
      entry.config.name = per_kind[entry.config.kind] == 1 ? entry.config.kind : entry.config.kind + "_" + std::to_string(k);
    }
    if (!safe_name(entry.config.name))
      fail(at + ".name", "names may only contain letters, digits, '_', '-' and '.'");
    if (!names.insert(entry.config.name).second) fail(at + ".name", "duplicate name '" + entry.config.name + "'");

    if (auto s = e.find("engine"); s != e.end()) {
      if (!s->is_string()) fail(at + ".engine", "expected a string");
      entry.engine = parse_engine_selection(s->get<std::string>());
    }
    if (auto s = e.find("seed"); s != e.end()) entry.seed = seed_value(*s, at + ".seed");

    if (auto p = e.find("params"); p != e.end()) {
      if (!p->is_object()) fail(at + ".params", "expected an object");
      for (const auto& [key, value] : p->items()) {
        if (std::find(info->params.begin(), info->params.end(), key) == info->params.end())
          fail(at + ".params." + key, "not a parameter of " + entry.config.kind);
        apply_param(entry.config, key, value, at + ".params." + key, base_dir);
      }
    }
    m.experiments.push_back(std::move(entry));
  }
  return m;
}

inline Manifest load_manifest(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_manifest(io::read_json_file(path), p.has_parent_path() ? p.parent_path() : std::filesystem::path("."));
}

/// Flag, then environment, then manifest, then 1.
inline std::size_t resolve_workers(const Manifest& m, const RunOptions& opt) {
  if (opt.workers) {
    if (*opt.workers == 0) throw ParseError("--workers: must be at least 1");
    return *opt.workers;
  }
  if (opt.workers_env) {
    const std::string& s = *opt.workers_env;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || v < 1 || v > 1024)
      throw ParseError(std::string(kWorkersEnv) + ": expected an integer in [1, 1024], got '" + s + "'");
    return static_cast<std::size_t>(v);
  }
  return m.workers.value_or(1);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const ResultTable& t) {
  std::string out;
  for (std::size_t j = 0; j < t.columns.size(); ++j) out += (j ? "," : "") + t.columns[j];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ",";
      out += format_double(row[j]);
    }
    out += "\n";
  }
  return out;
}

inline json check_json(const experiments::Check& c) {
  return {{"name", c.name}, {"value", c.value}, {"expected", c.expected}, {"tol", c.tol},
          {"relation", experiments::relation_name(c.relation)}, {"passed", c.passed}};
}

inline json config_json(const ExperimentConfig& c) {
  json p = {{"alpha", {c.alpha.real(), c.alpha.imag()}},
            {"r", c.r},
            {"M", c.M},
            {"xi", c.xi},
            {"delta_t", c.delta_t},
            {"thetas", c.thetas},
            {"sigma", c.sigma},
            {"center2", c.center2},
            {"shots", c.shots},
            {"separation", c.separation},
            {"cutoff", c.cutoff},
            {"max_loss", c.max_loss}};
  if (c.sigma2) p["sigma2"] = *c.sigma2;
  if (c.circuit) p["circuit"] = io::to_json(*c.circuit);
  const auto* info = experiments::find_experiment(c.kind);
  json used = json::object();
  for (const auto& [k, v] : p.items())
    if (info && std::find(info->params.begin(), info->params.end(), k) != info->params.end()) used[k] = v;
  return used;
}

inline std::string file_stem(const ResultTable& t) { return t.name + "." + experiments::engine_name(t.engine); }

inline std::optional<svg::LinePlot> plot_for(const ResultTable& t) {
  svg::LinePlot p;
  if (t.kind == "iterated_violation") {
    p.title = t.name + ": squeezed variance vs rounds";
    p.x_label = "M";
    p.y_label = "Var X_A";
    p.log_y = true;
    std::map<double, svg::Series> by_r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      auto& s = by_r[t.at(i, "r")];
      s.label = "r = " + svg::detail::num(t.at(i, "r"));
      s.x.push_back(t.at(i, "M"));
      s.y.push_back(t.at(i, "var_xa"));
    }
    for (auto& [_, s] : by_r) p.series.push_back(std::move(s));
    return p;
  }
  if (t.kind == "xi_sweep") {
    p.title = t.name + ": variance vs xi";
    p.x_label = "xi";
    p.y_label = "variance";
    svg::Series x{"Var X", {}, {}}, q{"Var P", {}, {}};
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      x.x.push_back(t.at(i, "xi")), x.y.push_back(t.at(i, "var_x"));
      q.x.push_back(t.at(i, "xi")), q.y.push_back(t.at(i, "var_p"));
    }
    p.series = {x, q};
    return p;
  }
  if (t.kind == "overlap_experiment") {
    p.title = t.name + ": xi vs clock offset";
    p.x_label = "delta_t";
    p.y_label = "xi";
    svg::Series s{"xi", {}, {}};
    for (std::size_t i = 0; i < t.rows.size(); ++i) s.x.push_back(t.at(i, "delta_t")), s.y.push_back(t.at(i, "xi"));
    p.series = {s};
    return p;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct ErrorRecord {
  std::string experiment;
  std::string engine;
  std::string type;  // invalid_parameter | truncation_overflow | engine_error
  std::string message;

  json to_json() const {
    return {{"experiment", experiment}, {"engine", engine}, {"type", type}, {"message", message}};
  }
};

struct RunReport {
  int exit_code = kSuccess;
  json summary;
  std::vector<ResultTable> tables;
  std::vector<ErrorRecord> errors;
  std::vector<std::string> written;
};

struct Job {
  ExperimentConfig config;
};

inline std::vector<Job> plan(const Manifest& m, const RunOptions& opt) {
  const std::uint64_t global = opt.seed.value_or(m.seed);
  std::vector<Job> jobs;
  for (const auto& e : m.experiments) {
    const EngineSelection sel = opt.engine.value_or(e.engine.value_or(m.engine));
    ExperimentConfig c = e.config;
    c.seed = e.seed.value_or(derive_seed(global, c.name));
    if (sel != EngineSelection::fock) {
      c.engine = Engine::gaussian;
      jobs.push_back({c});
    }
    if (sel != EngineSelection::gaussian) {
      c.engine = Engine::fock;
      jobs.push_back({c});
    }
  }
  return jobs;
}

/// Runs every job; results are indexed by job regardless of completion order.
inline void execute(const std::vector<Job>& jobs, std::size_t workers,
                    std::vector<std::optional<ResultTable>>& results, std::vector<std::optional<ErrorRecord>>& errors) {
  results.assign(jobs.size(), std::nullopt);
  errors.assign(jobs.size(), std::nullopt);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& c = jobs[i].config;
      const std::string eng = experiments::engine_name(c.engine);
      try {
        results[i] = experiments::run_experiment(c);
      } catch (const TruncationError& e) {
        errors[i] = ErrorRecord{c.name, eng, "truncation_overflow", e.what()};
      } catch (const std::invalid_argument& e) {
        errors[i] = ErrorRecord{c.name, eng, "invalid_parameter", e.what()};
      } catch (const std::exception& e) {
        errors[i] = ErrorRecord{c.name, eng, "engine_error", e.what()};
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

/// Runs a parsed manifest and writes outputs. Exit code: 2 if any run had
/// invalid parameters, else 3 on engine errors, else 1 on failed checks.
inline RunReport run(const Manifest& m, const RunOptions& opt) {
  RunReport rep;
  const std::size_t workers = resolve_workers(m, opt);
  const std::filesystem::path out_dir(opt.out_dir.value_or(m.out_dir));
  const bool plots = opt.plots || m.plots;
  const std::uint64_t global = opt.seed.value_or(m.seed);
  const EngineSelection sel = opt.engine.value_or(m.engine);

  const auto jobs = plan(m, opt);
  std::vector<std::optional<ResultTable>> results;
  std::vector<std::optional<ErrorRecord>> errors;
  execute(jobs, workers, results, errors);

  std::filesystem::create_directories(out_dir);
  json runs = json::array(), errs = json::array(), comparisons = json::array();
  bool usage = false, engine = false, failed = false;

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) {
      usage = usage || errors[i]->type == "invalid_parameter";
      engine = engine || errors[i]->type != "invalid_parameter";
      errs.push_back(errors[i]->to_json());
      rep.errors.push_back(*errors[i]);
      continue;
    }
    const ResultTable& t = *results[i];
    const std::string stem = file_stem(t);
    write_file(out_dir / (stem + ".csv"), to_csv(t));
    rep.written.push_back(stem + ".csv");
    json run = {{"name", t.name},
                {"id", t.kind},
                {"engine", experiments::engine_name(t.engine)},
                {"seed", jobs[i].config.seed},
                {"parameters", config_json(jobs[i].config)},
                {"metadata", t.metadata},
                {"warnings", t.warnings},
                {"csv", stem + ".csv"},
                {"rows", t.rows.size()},
                {"passed", t.passed()}};
    json checks = json::array();
    for (const auto& c : t.checks) checks.push_back(check_json(c));
    run["checks"] = checks;
    if (plots) {
      if (auto p = plot_for(t)) {
        write_file(out_dir / (stem + ".svg"), svg::render(*p));
        rep.written.push_back(stem + ".svg");
        run["plot"] = stem + ".svg";
      }
    }
    failed = failed || !t.passed();
    runs.push_back(run);
  }

  // Engine agreement for experiments that ran on both engines.
  for (std::size_t i = 0; i + 1 < jobs.size(); ++i) {
    if (!results[i] || !results[i + 1]) continue;
    const auto& g = *results[i];
    const auto& f = *results[i + 1];
    if (g.name != f.name || g.engine != Engine::gaussian || f.engine != Engine::fock || g.stochastic) continue;
    const auto checks = experiments::compare_engines(g, f);
    json cj = json::array();
    bool ok = true;
    for (const auto& c : checks) {
      cj.push_back(check_json(c));
      ok = ok && c.passed;
    }
    failed = failed || !ok;
    comparisons.push_back({{"name", g.name}, {"passed", ok}, {"checks", cj}});
  }

  for (auto& r : results)
    if (r) rep.tables.push_back(std::move(*r));

  rep.exit_code = usage ? kUsageError : engine ? kEngineError : failed ? kAssertionFailure : kSuccess;
  rep.summary = {{"schema_version", kManifestSchemaVersion},
                 {"engine", selection_name(sel)},
                 {"seed", global},
                 {"num_runs", runs.size()},
                 {"runs", runs},
                 {"comparisons", comparisons},
                 {"errors", errs},
                 {"passed", !usage && !engine && !failed},
                 {"exit_code", rep.exit_code}};
  write_file(out_dir / "summary.json", rep.summary.dump(2) + "\n");
  rep.written.push_back("summary.json");
  return rep;
}

}  // namespace otcsim::runner
