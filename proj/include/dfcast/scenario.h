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

#ifndef DFCAST_SCENARIO_H_
#define DFCAST_SCENARIO_H_

// Scenario files and the command implementations behind the dfcast tool.
//
// A scenario is a JSON object:
//   {"game": "randomized", "M": 2, "N": 200, "eps": 0.1, "eps_c": 0.01,
//    "eps_n": {"kind": "geometric", "a": 0.05, "r": 0.5, "floor": 1e-4},
//    "sceptic": "bins:8:0.25", "reality": "iid:0.7,0.3", "rng": "rng:faithful",
//    "forecaster": "defensive", "seed": 42, "k0": 2, "kmax": 1099511627776}
// "eps_n" may also be a bare number (constant schedule). A sweep adds
//   "grid": {"eps": [...], "seed": [...], "N": [...]}, "max_runs": 1000.
//
// Strategy strings:
//   sceptic     linear:c=0,1 | bins:8:0.25 | k29:eta=0.1,sigma=0.2 | random[:seed] | zero
//   reality     iid:0.7,0.3 | adversarial | scripted:1,0,1
//   rng         rng:faithful[:seed] | rng:adversarial
//   forecaster  defensive | constant:0.5,0.5
// Without an explicit seed a strategy derives its own stream from "seed".

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfcast/adversaries.h"
#include "dfcast/protocol.h"
#include "dfcast/record.h"

namespace dfcast {

struct SweepGrid {
  std::vector<double> eps;
  std::vector<std::uint64_t> seeds;
  std::vector<int> horizons;
  std::size_t max_runs = 1000;
  // Duplicate values dropped while parsing.
  std::vector<std::string> warnings;
};

struct ScenarioConfig {
  GameConfig game;
  std::string sceptic = "zero";
  std::string reality = "adversarial";
  std::string rng = "rng:faithful";
  std::string forecaster = "defensive";
  std::optional<SweepGrid> grid;
};

// Throws kConfigError; JSON syntax errors carry the offending line.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

std::unique_ptr<SkepticStrategy> make_sceptic(const std::string& descriptor, std::size_t outcomes,
                                              std::uint64_t seed);
std::unique_ptr<RealityStrategy> make_reality(const std::string& descriptor, std::size_t outcomes,
                                              std::uint64_t seed);
std::unique_ptr<RngPolicy> make_rng(const std::string& descriptor, std::uint64_t seed);
std::unique_ptr<Forecaster> make_forecaster(const std::string& descriptor, const GameConfig& config);

Transcript run_scenario(const ScenarioConfig& config);

// Exit codes: 0 success, 1 invariant or verification failure, 2 usage or
// parse error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int cmd_run(const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed_override, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& transcript_path, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed_override, std::ostream& out, std::ostream& err);
int cmd_export(const std::string& transcript_path, const std::string& csv_path, std::ostream& out,
               std::ostream& err);

}  // namespace dfcast

#endif  // DFCAST_SCENARIO_H_
