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

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "otcsim/runner.hpp"

namespace {

using otcsim::runner::kUsageError;
using json = nlohmann::json;

void error_record(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

int list_command(bool as_json) {
  const auto& reg = otcsim::experiments::registry();
  if (as_json) {
    json out = json::array();
    for (const auto& e : reg)
      out.push_back({{"id", e.id}, {"summary", e.summary}, {"params", e.params}, {"reproduces", e.reproduces}});
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  for (const auto& e : reg) {
    std::cout << e.id << "\n";
    std::cout << "  " << e.summary << "\n";
    std::cout << "  params:";
    for (const auto& p : e.params) std::cout << " " << p;
    std::cout << "\n  reproduces: " << e.reproduces << "\n";
  }
  return 0;
}

int run_command(const std::string& manifest_path, otcsim::runner::RunOptions opt) {
  using namespace otcsim::runner;
  Manifest m;
  try {
    m = load_manifest(manifest_path);
  } catch (const std::exception& e) {
    error_record("parse_error", e.what());
    return kUsageError;
  }
  if (const char* env = std::getenv(kWorkersEnv)) opt.workers_env = std::string(env);

  RunReport rep;
  try {
    rep = run(m, opt);
  } catch (const ParseError& e) {
    error_record("usage_error", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    error_record("io_error", e.what());
    return kUsageError;
  }

  for (const auto& err : rep.errors) std::cerr << json{{"error", err.to_json()}}.dump() << "\n";
  for (const auto& run : rep.summary["runs"]) {
    std::size_t ok = 0;
    for (const auto& c : run["checks"]) ok += c["passed"].get<bool>() ? 1 : 0;
    std::cout << run["name"].get<std::string>() << " [" << run["engine"].get<std::string>() << "] "
              << (run["passed"].get<bool>() ? "PASS" : "FAIL") << " (" << ok << "/" << run["checks"].size()
              << " checks)\n";
  }
  for (const auto& c : rep.summary["comparisons"])
    std::cout << c["name"].get<std::string>() << " [gaussian vs fock] " << (c["passed"].get<bool>() ? "PASS" : "FAIL")
              << "\n";
  std::cout << rep.summary["num_runs"].get<std::size_t>() << " run(s), exit " << rep.exit_code << "\n";
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable circuit simulator with open timelike curves"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the experiments of a manifest");
  std::string manifest, engine, out_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool plots = false;
  run->add_option("manifest", manifest, "manifest file (JSON)")->required();
  auto* engine_opt = run->add_option("--engine", engine, "gaussian, fock or both")
                         ->check(CLI::IsMember({"gaussian", "fock", "both"}));
  auto* out_opt = run->add_option("--out-dir", out_dir, "output directory");
  auto* seed_opt = run->add_option("--seed", seed, "global seed");
  auto* workers_opt = run->add_option("--workers", workers, "worker threads (overrides OTCSIM_WORKERS)")
                          ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
  run->add_flag("--plots", plots, "write SVG plots");

  auto* list = app.add_subcommand("list", "list available experiments");
  bool as_json = false;
  list->add_flag("--json", as_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (list->parsed()) return list_command(as_json);

  otcsim::runner::RunOptions opt;
  if (*engine_opt) opt.engine = otcsim::runner::parse_engine_selection(engine);
  if (*out_opt) opt.out_dir = out_dir;
  if (*seed_opt) opt.seed = seed;
  if (*workers_opt) opt.workers = workers;
  opt.plots = plots;
  return run_command(manifest, opt);
}
