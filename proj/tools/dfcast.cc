// Copyright 2026 The dfcast Authors
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

// dfcast: run, verify, sweep and export forecasting-game transcripts.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dfcast/scenario.h"

int main(int argc, char** argv) {
  CLI::App app{"Defensive forecasting games: run, verify, sweep, export"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string input;
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;

  auto* run = app.add_subcommand("run", "Play one scenario and write its transcript");
  run->add_option("--config", config, "Scenario JSON file")->required();
  run->add_option("--out", out, "Transcript output path (JSONL)")->required();
  run->add_option("--seed-override", seed_override, "Replace the scenario seed");

  auto* verify = app.add_subcommand("verify", "Re-check a transcript from its stored numbers");
  verify->add_option("transcript", input, "Transcript path")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a grid of scenarios");
  sweep->add_option("--config", config, "Scenario JSON file with a grid")->required();
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--seed-override", seed_override, "Replace the scenario seed");

  auto* exp = app.add_subcommand("export", "Write the capital curves of a transcript as CSV");
  exp->add_option("transcript", input, "Transcript path")->required();
  exp->add_option("--out", out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dfcast::kExitUsage;
  }

  if (run->parsed()) return dfcast::cmd_run(config, out, seed_override, std::cout, std::cerr);
  if (verify->parsed()) return dfcast::cmd_verify(input, std::cout, std::cerr);
  if (sweep->parsed()) {
    return dfcast::cmd_sweep(config, out, jobs, seed_override, std::cout, std::cerr);
  }
  return dfcast::cmd_export(input, out, std::cout, std::cerr);
}
