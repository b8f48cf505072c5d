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

#ifndef DFCAST_PROTOCOL_H_
#define DFCAST_PROTOCOL_H_

// State machines for the continuous and randomized forecasting games. Each
// round is a fixed sequence of phased calls; a call out of order throws
// kProtocolOrderViolation. Constraint violations end the game with a forfeit
// charged to one player.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfcast/adversaries.h"
#include "dfcast/defensive.h"
#include "dfcast/record.h"
#include "dfcast/simplex.h"

namespace dfcast {

// Tolerance on |payoff| and on sum_w S(w, p) p_w when auditing a move.
inline constexpr double kAuditTolerance = 1e-9;
// Forecaster's per-round target in the continuous game:
//   tol_n = eps_c ((1 - eta) 2^-n + eta / N),  eta = 1e-3,
// so that sum_{n<=N} tol_n <= eps_c.
inline constexpr double kContinuousHorizonShare = 1e-3;
double continuous_tolerance(double eps_c, int n, int horizon);

class ContinuousGame {
 public:
  enum class Phase { kSceptic, kForecaster, kReality, kOver };

  explicit ContinuousGame(std::size_t outcomes, bool enforce_nonnegative = false);

  void sceptic_announces(ScepticMove s);
  // Audits S at p; an invalid move is Sceptic's forfeit.
  void forecaster_announces(const ProbVector& p);
  void reality_announces(std::size_t omega);
  // Ends the game charging `player`, freezing capital.
  void forfeit(Player player, ErrorCode code, const std::string& reason);

  Phase phase() const { return phase_; }
  bool over() const { return phase_ == Phase::kOver; }
  int round() const { return round_; }
  double capital() const { return capital_; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  const std::vector<PastRound>& past() const { return past_; }
  const std::optional<Forfeit>& forfeited() const { return forfeit_; }

 private:
  void expect(Phase phase, const char* call) const;

  std::size_t outcomes_;
  bool enforce_nonnegative_;
  Phase phase_ = Phase::kSceptic;
  int round_ = 1;
  double capital_ = 1.0;
  std::optional<ScepticMove> move_;
  std::optional<ProbVector> forecast_;
  RoundRecord pending_;
  std::vector<RoundRecord> rounds_;
  std::vector<PastRound> past_;
  std::optional<Forfeit> forfeit_;
};

class RandomizedGame {
 public:
  enum class Phase { kSceptic, kForecaster, kReality, kSideBet, kRng, kOver };

  explicit RandomizedGame(std::size_t outcomes, bool enforce_nonnegative = false);

  void sceptic_announces(ScepticMove s);
  // Validates P and audits S on its support.
  void forecaster_announces(const RandomizedForecast& forecast);
  void reality_announces(std::size_t omega);
  // A bet with positive mean is Forecaster's forfeit (kSideBetInvalid).
  void forecaster_bets(const SideBet& f);
  void rng_draws(std::size_t index);
  void forfeit(Player player, ErrorCode code, const std::string& reason);

  Phase phase() const { return phase_; }
  bool over() const { return phase_ == Phase::kOver; }
  int round() const { return round_; }
  double capital() const { return capital_; }
  double forecaster_capital() const { return forecaster_capital_; }
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  const std::vector<PastRound>& past() const { return past_; }
  const std::optional<Forfeit>& forfeited() const { return forfeit_; }
  const RandomizedForecast& forecast() const { return *forecast_; }

 private:
  void expect(Phase phase, const char* call) const;

  std::size_t outcomes_;
  bool enforce_nonnegative_;
  Phase phase_ = Phase::kSceptic;
  int round_ = 1;
  double capital_ = 1.0;
  double forecaster_capital_ = 1.0;
  std::optional<ScepticMove> move_;
  std::optional<RandomizedForecast> forecast_;
  RoundRecord pending_;
  std::vector<RoundRecord> rounds_;
  std::vector<PastRound> past_;
  std::optional<Forfeit> forfeit_;
};

// Whole-round conveniences over the phased calls.
void step_continuous(ContinuousGame& game, ScepticMove s, const ProbVector& p,
                     std::size_t omega);
void step_randomized(RandomizedGame& game, ScepticMove s, const RandomizedForecast& forecast,
                     std::size_t omega, const SideBet& f, std::size_t drawn);

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual ProbVector forecast_continuous(const ScepticMove& s, int n) = 0;
  virtual RandomizedForecast forecast_randomized(const ScepticMove& s, int n) = 0;
  virtual SideBet bet(const ScepticMove& s, std::size_t omega, const RandomizedForecast& forecast,
                      int n) = 0;
};

struct GameConfig {
  GameType game = GameType::kRandomized;
  std::size_t outcomes = 2;
  int horizon = 0;
  double eps = 0.1;
  double eps_c = 0.01;
  EpsSchedule eps_n = EpsSchedule::geometric(0.05, 0.5, 1e-4);
  bool enforce_nonnegative = true;
  std::uint64_t seed = 0;
  SearchOptions search;

  void validate() const;
};

// Plays the defensive strategies: solve_continuous at tol_n in the continuous
// game, build_randomized_forecast with the side bet in the randomized one.
std::unique_ptr<Forecaster> defensive_forecaster(const GameConfig& config);
// Always forecasts p (a point mass in the randomized game) and never bets.
std::unique_ptr<Forecaster> constant_forecaster(ProbVector p);

// Runs config.horizon rounds or until a forfeit. Exceptions thrown by the
// strategies become forfeits; a kValidityViolation raised while the Forecaster
// evaluates S is charged to Sceptic.
Transcript run_game(const GameConfig& config, SkepticStrategy& sceptic, Forecaster& forecaster,
                    RealityStrategy& reality, RngPolicy* rng);

TranscriptHeader make_header(const GameConfig& config, const SkepticStrategy& sceptic,
                             const Forecaster& forecaster, const RealityStrategy& reality,
                             const RngPolicy* rng);

}  // namespace dfcast

#endif  // DFCAST_PROTOCOL_H_
