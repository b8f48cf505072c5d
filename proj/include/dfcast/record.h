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

#ifndef DFCAST_RECORD_H_
#define DFCAST_RECORD_H_

// Plain data shared by the game engine and the transcript reader/writer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dfcast/error.h"

namespace dfcast {

inline constexpr const char* kTranscriptSchema = "df-transcript/1";
inline constexpr const char* kToolVersion = "dfcast 1.0.0";

enum class GameType { kContinuous, kRandomized };
enum class Player { kSceptic, kForecaster, kReality, kRng };

std::string to_string(GameType type);
std::string to_string(Player player);
GameType parse_game_type(const std::string& text);
Player parse_player(const std::string& text);
ErrorCode parse_error_code(const std::string& text);

// eps_n = c, or eps_n = max(a r^n, floor).
struct EpsSchedule {
  enum class Kind { kConstant, kGeometric };
  Kind kind = Kind::kConstant;
  double c = 0.01;
  double a = 0.05;
  double r = 0.5;
  double floor = 0.0;

  double at(int n) const;
  void validate() const;

  static EpsSchedule constant(double c);
  static EpsSchedule geometric(double a, double r, double floor = 0.0);

  friend bool operator==(const EpsSchedule&, const EpsSchedule&) = default;
};

struct TranscriptHeader {
  GameType game = GameType::kRandomized;
  std::size_t outcomes = 2;
  int horizon = 0;
  double eps = 0.1;
  double eps_c = 0.01;
  EpsSchedule eps_n;
  std::string sceptic;
  std::string forecaster;
  std::string reality;
  std::string rng;
  std::uint64_t seed = 0;
  std::int64_t k0 = 2;
  std::int64_t kmax = std::int64_t{1} << 40;
  bool enforce_nonnegative = false;
  std::string tool_version = kToolVersion;

  friend bool operator==(const TranscriptHeader&, const TranscriptHeader&) = default;
};

struct Forfeit {
  int round = 0;
  Player player = Player::kSceptic;
  ErrorCode code = ErrorCode::kValidityViolation;
  std::string reason;

  friend bool operator==(const Forfeit&, const Forfeit&) = default;
};

// One round. Continuous rounds store p as a one-point support with weight 1,
// no side bet and F = 1. A forfeited round keeps whatever moves were made and
// freezes K and F at their previous values; it is always the last round.
struct RoundRecord {
  int n = 0;
  std::vector<std::vector<double>> support;
  std::vector<double> weights;
  std::size_t omega = 0;
  std::size_t drawn = 0;
  std::vector<double> f;
  // payoff[w][i] = S(w, support[i]).
  std::vector<std::vector<double>> payoff;
  double K = 1.0;
  double F = 1.0;
  std::optional<Forfeit> forfeit;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct Verdict {
  int horizon = 0;
  int rounds_played = 0;
  double sup_K = 1.0;
  double final_K = 1.0;
  double final_F = 1.0;
  // Randomized: K_n <= (1 + eps) F_n + 1e-9 at every round.
  // Continuous: K_n <= 1 + eps_c + 1e-9 at every round.
  bool invariant_held = true;
  std::vector<Forfeit> forfeits;

  bool ok() const { return invariant_held && forfeits.empty(); }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct Transcript {
  TranscriptHeader header;
  std::vector<RoundRecord> rounds;
  Verdict verdict;
  // Filled by the reader: rounds whose stored digest does not match their
  // content, 0 standing for the header.
  std::vector<int> digest_failures;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

inline constexpr double kInvariantTolerance = 1e-9;

Verdict compute_verdict(const TranscriptHeader& header, const std::vector<RoundRecord>& rounds);

}  // namespace dfcast

#endif  // DFCAST_RECORD_H_
