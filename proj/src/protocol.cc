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

#include "dfcast/protocol.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace dfcast {

// ---------------------------------------------------------------------------
// record.h

std::string to_string(GameType type) {
  return type == GameType::kContinuous ? "continuous" : "randomized";
}

std::string to_string(Player player) {
  switch (player) {
    case Player::kSceptic: return "sceptic";
    case Player::kForecaster: return "forecaster";
    case Player::kReality: return "reality";
    case Player::kRng: return "rng";
  }
  return "sceptic";
}

GameType parse_game_type(const std::string& text) {
  if (text == "continuous") return GameType::kContinuous;
  if (text == "randomized") return GameType::kRandomized;
  throw Error(ErrorCode::kParseError, "unknown game type '" + text + "'");
}

Player parse_player(const std::string& text) {
  for (Player p : {Player::kSceptic, Player::kForecaster, Player::kReality, Player::kRng}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::kParseError, "unknown player '" + text + "'");
}

ErrorCode parse_error_code(const std::string& text) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kConfigError); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == text) return code;
  }
  throw Error(ErrorCode::kParseError, "unknown error code '" + text + "'");
}

double EpsSchedule::at(int n) const {
  if (kind == Kind::kConstant) return c;
  return std::max(a * std::pow(r, n), floor);
}

void EpsSchedule::validate() const {
  if (kind == Kind::kConstant) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw Error(ErrorCode::kConfigError, "constant eps_n must be positive");
    }
    return;
  }
  if (!(a > 0.0) || !std::isfinite(a) || !(r > 0.0 && r <= 1.0) || !(floor >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "geometric eps_n needs a > 0, 0 < r <= 1, floor >= 0");
  }
}

EpsSchedule EpsSchedule::constant(double c) {
  EpsSchedule s;
  s.kind = Kind::kConstant;
  s.c = c;
  return s;
}

EpsSchedule EpsSchedule::geometric(double a, double r, double floor) {
  EpsSchedule s;
  s.kind = Kind::kGeometric;
  s.a = a;
  s.r = r;
  s.floor = floor;
  return s;
}

Verdict compute_verdict(const TranscriptHeader& header, const std::vector<RoundRecord>& rounds) {
  Verdict v;
  v.horizon = header.horizon;
  v.rounds_played = static_cast<int>(rounds.size());
  for (const auto& r : rounds) {
    v.sup_K = std::max(v.sup_K, r.K);
    v.final_K = r.K;
    v.final_F = r.F;
    const double ceiling = header.game == GameType::kRandomized ? (1.0 + header.eps) * r.F
                                                                : 1.0 + header.eps_c;
    if (!(r.K <= ceiling + kInvariantTolerance)) v.invariant_held = false;
    if (r.forfeit) v.forfeits.push_back(*r.forfeit);
  }
  return v;
}

// ---------------------------------------------------------------------------

double continuous_tolerance(double eps_c, int n, int horizon) {
  const double eta = kContinuousHorizonShare;
  return eps_c * ((1.0 - eta) * std::ldexp(1.0, -n) + eta / std::max(horizon, 1));
}

namespace {

// Empty string when the row is an acceptable payoff at p.
std::string audit_row(const ScepticMove& s, const std::vector<double>& row,
                      std::span<const double> p) {
  if (row.size() != p.size()) return "payoff row has wrong length";
  double scale = 1.0;
  double expectation = 0.0;
  for (std::size_t w = 0; w < row.size(); ++w) {
    if (!std::isfinite(row[w])) return "non-finite payoff";
    scale = std::max(scale, std::abs(row[w]));
    expectation += row[w] * p[w];
    if (std::abs(row[w]) > s.bound + kAuditTolerance * std::max(1.0, s.bound)) {
      std::ostringstream out;
      out << "|S(" << w << ", p)| = " << std::abs(row[w]) << " exceeds declared bound " << s.bound;
      return out.str();
    }
  }
  if (expectation > kAuditTolerance * scale) {
    std::ostringstream out;
    out << "sum_w S(w, p) p_w = " << expectation << " > 0";
    return out.str();
  }
  return {};
}

std::string check_forecast(const RandomizedForecast& forecast, std::size_t outcomes) {
  const auto& support = forecast.support;
  if (support.empty()) return "empty support";
  if (support.size() > outcomes) return "support larger than the outcome space";
  if (forecast.weights.size() != support.size()) return "weights do not match the support";
  double total = 0.0;
  for (double w : forecast.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) return "negative or non-finite weight";
    total += w;
  }
  if (std::abs(total - 1.0) > kAuditTolerance) return "weights do not sum to one";
  for (const auto& p : support) {
    if (p.size() != outcomes) return "support point has the wrong dimension";
  }
  return {};
}

std::string phase_name(int phase, bool randomized) {
  static const char* continuous[] = {"sceptic", "forecaster", "reality", "over"};
  static const char* randomized_names[] = {"sceptic", "forecaster", "reality",
                                           "side bet", "rng", "over"};
  return randomized ? randomized_names[phase] : continuous[phase];
}

}  // namespace

// ---------------------------------------------------------------------------
// ContinuousGame

ContinuousGame::ContinuousGame(std::size_t outcomes, bool enforce_nonnegative)
    : outcomes_(outcomes), enforce_nonnegative_(enforce_nonnegative) {
  if (outcomes < 2) throw Error(ErrorCode::kInvalidArgument, "game needs M >= 2");
}

void ContinuousGame::expect(Phase phase, const char* call) const {
  if (phase_ != phase) {
    throw Error(ErrorCode::kProtocolOrderViolation,
                std::string(call) + " called during the " +
                    phase_name(static_cast<int>(phase_), false) + " phase of round " +
                    std::to_string(round_));
  }
}

void ContinuousGame::sceptic_announces(ScepticMove s) {
  expect(Phase::kSceptic, "sceptic_announces");
  pending_ = RoundRecord{};
  pending_.n = round_;
  phase_ = Phase::kForecaster;
  if (s.outcomes != outcomes_ || !s.payoffs) {
    forfeit(Player::kSceptic, ErrorCode::kDimensionMismatch, "move does not match M");
    return;
  }
  move_ = std::move(s);
}

void ContinuousGame::forecaster_announces(const ProbVector& p) {
  expect(Phase::kForecaster, "forecaster_announces");
  if (p.size() != outcomes_) {
    forfeit(Player::kForecaster, ErrorCode::kDimensionMismatch, "forecast does not match M");
    return;
  }
  pending_.support = {p.values()};
  pending_.weights = {1.0};
  std::vector<double> row;
  try {
    row = move_->payoffs(p);
  } catch (const Error& e) {
    forfeit(Player::kSceptic, e.code(), e.what());
    return;
  }
  pending_.payoff.assign(row.size(), {});
  for (std::size_t w = 0; w < row.size(); ++w) pending_.payoff[w] = {row[w]};
  if (auto why = audit_row(*move_, row, p.weights()); !why.empty()) {
    forfeit(Player::kSceptic, ErrorCode::kValidityViolation, why);
    return;
  }
  forecast_ = p;
  phase_ = Phase::kReality;
}

void ContinuousGame::reality_announces(std::size_t omega) {
  expect(Phase::kReality, "reality_announces");
  pending_.omega = omega;
  if (omega >= outcomes_) {
    forfeit(Player::kReality, ErrorCode::kIndexOutOfRange, "outcome out of range");
    return;
  }
  const double next = capital_ + pending_.payoff[omega][0];
  if (enforce_nonnegative_ && next < -kInvariantTolerance) {
    forfeit(Player::kSceptic, ErrorCode::kNegativeCapital, "capital would become negative");
    return;
  }
  capital_ = next;
  pending_.K = capital_;
  pending_.F = 1.0;
  rounds_.push_back(std::move(pending_));
  past_.push_back(PastRound{*forecast_, omega});
  move_.reset();
  forecast_.reset();
  ++round_;
  phase_ = Phase::kSceptic;
}

void ContinuousGame::forfeit(Player player, ErrorCode code, const std::string& reason) {
  if (phase_ == Phase::kOver) {
    throw Error(ErrorCode::kProtocolOrderViolation, "game is already over");
  }
  if (phase_ == Phase::kSceptic) {
    pending_ = RoundRecord{};
    pending_.n = round_;
  }
  pending_.K = capital_;
  pending_.F = 1.0;
  pending_.forfeit = Forfeit{round_, player, code, reason};
  forfeit_ = pending_.forfeit;
  rounds_.push_back(std::move(pending_));
  phase_ = Phase::kOver;
}

void step_continuous(ContinuousGame& game, ScepticMove s, const ProbVector& p,
                     std::size_t omega) {
  game.sceptic_announces(std::move(s));
  if (game.over()) return;
  game.forecaster_announces(p);
  if (game.over()) return;
  game.reality_announces(omega);
}

// ---------------------------------------------------------------------------
// RandomizedGame

RandomizedGame::RandomizedGame(std::size_t outcomes, bool enforce_nonnegative)
    : outcomes_(outcomes), enforce_nonnegative_(enforce_nonnegative) {
  if (outcomes < 2) throw Error(ErrorCode::kInvalidArgument, "game needs M >= 2");
}

void RandomizedGame::expect(Phase phase, const char* call) const {
  if (phase_ != phase) {
    throw Error(ErrorCode::kProtocolOrderViolation,
                std::string(call) + " called during the " +
                    phase_name(static_cast<int>(phase_), true) + " phase of round " +
                    std::to_string(round_));
  }
}

void RandomizedGame::sceptic_announces(ScepticMove s) {
  expect(Phase::kSceptic, "sceptic_announces");
  pending_ = RoundRecord{};
  pending_.n = round_;
  phase_ = Phase::kForecaster;
  if (s.outcomes != outcomes_ || !s.payoffs) {
    forfeit(Player::kSceptic, ErrorCode::kDimensionMismatch, "move does not match M");
    return;
  }
  move_ = std::move(s);
}

void RandomizedGame::forecaster_announces(const RandomizedForecast& forecast) {
  expect(Phase::kForecaster, "forecaster_announces");
  for (const auto& p : forecast.support) pending_.support.push_back(p.values());
  pending_.weights = forecast.weights;
  if (auto why = check_forecast(forecast, outcomes_); !why.empty()) {
    forfeit(Player::kForecaster, ErrorCode::kInvalidArgument, why);
    return;
  }
  const std::size_t k = forecast.support.size();
  pending_.payoff.assign(outcomes_, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> row;
    try {
      row = move_->payoffs(forecast.support[i]);
    } catch (const Error& e) {
      forfeit(Player::kSceptic, e.code(), e.what());
      return;
    }
    if (row.size() == outcomes_) {
      for (std::size_t w = 0; w < outcomes_; ++w) pending_.payoff[w][i] = row[w];
    }
    if (auto why = audit_row(*move_, row, forecast.support[i].weights()); !why.empty()) {
      forfeit(Player::kSceptic, ErrorCode::kValidityViolation,
              why + " at support point " + std::to_string(i));
      return;
    }
  }
  forecast_ = forecast;
  phase_ = Phase::kReality;
}

void RandomizedGame::reality_announces(std::size_t omega) {
  expect(Phase::kReality, "reality_announces");
  pending_.omega = omega;
  if (omega >= outcomes_) {
    forfeit(Player::kReality, ErrorCode::kIndexOutOfRange, "outcome out of range");
    return;
  }
  phase_ = Phase::kSideBet;
}

void RandomizedGame::forecaster_bets(const SideBet& f) {
  expect(Phase::kSideBet, "forecaster_bets");
  pending_.f = f.values;
  if (f.values.size() != forecast_->support.size()) {
    forfeit(Player::kForecaster, ErrorCode::kDimensionMismatch, "side bet does not match support");
    return;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (!std::isfinite(f.values[i])) {
      forfeit(Player::kForecaster, ErrorCode::kSideBetInvalid, "non-finite side bet");
      return;
    }
    mean += forecast_->weights[i] * f.values[i];
  }
  if (mean > kAuditTolerance) {
    std::ostringstream out;
    out << "side bet has mean " << mean << " > 0";
    forfeit(Player::kForecaster, ErrorCode::kSideBetInvalid, out.str());
    return;
  }
  phase_ = Phase::kRng;
}

void RandomizedGame::rng_draws(std::size_t index) {
  expect(Phase::kRng, "rng_draws");
  pending_.drawn = index;
  if (index >= forecast_->support.size()) {
    forfeit(Player::kRng, ErrorCode::kIndexOutOfRange, "drawn index outside the support");
    return;
  }
  const double next_k = capital_ + pending_.payoff[pending_.omega][index];
  const double next_f = forecaster_capital_ + pending_.f[index];
  if (enforce_nonnegative_ && next_k < -kInvariantTolerance) {
    forfeit(Player::kSceptic, ErrorCode::kNegativeCapital, "Sceptic's capital would go negative");
    return;
  }
  if (enforce_nonnegative_ && next_f < -kInvariantTolerance) {
    forfeit(Player::kForecaster, ErrorCode::kNegativeCapital,
            "Forecaster's capital would go negative");
    return;
  }
  capital_ = next_k;
  forecaster_capital_ = next_f;
  pending_.K = capital_;
  pending_.F = forecaster_capital_;
  past_.push_back(PastRound{forecast_->support[index], pending_.omega});
  rounds_.push_back(std::move(pending_));
  move_.reset();
  forecast_.reset();
  ++round_;
  phase_ = Phase::kSceptic;
}

void RandomizedGame::forfeit(Player player, ErrorCode code, const std::string& reason) {
  if (phase_ == Phase::kOver) {
    throw Error(ErrorCode::kProtocolOrderViolation, "game is already over");
  }
  if (phase_ == Phase::kSceptic) {
    pending_ = RoundRecord{};
    pending_.n = round_;
  }
  pending_.K = capital_;
  pending_.F = forecaster_capital_;
  pending_.forfeit = Forfeit{round_, player, code, reason};
  forfeit_ = pending_.forfeit;
  rounds_.push_back(std::move(pending_));
  phase_ = Phase::kOver;
}

void step_randomized(RandomizedGame& game, ScepticMove s, const RandomizedForecast& forecast,
                     std::size_t omega, const SideBet& f, std::size_t drawn) {
  game.sceptic_announces(std::move(s));
  if (game.over()) return;
  game.forecaster_announces(forecast);
  if (game.over()) return;
  game.reality_announces(omega);
  if (game.over()) return;
  game.forecaster_bets(f);
  if (game.over()) return;
  game.rng_draws(drawn);
}

// ---------------------------------------------------------------------------
// Forecasters

namespace {

class DefensiveForecaster : public Forecaster {
 public:
  explicit DefensiveForecaster(const GameConfig& config) : config_(config) {}

  std::string name() const override { return "defensive"; }

  ProbVector forecast_continuous(const ScepticMove& s, int n) override {
    return solve_continuous(s, continuous_tolerance(config_.eps_c, n, config_.horizon),
                            config_.search)
        .forecast;
  }

  RandomizedForecast forecast_randomized(const ScepticMove& s, int n) override {
    return build_randomized_forecast(s, n, config_.eps, config_.eps_n.at(n), config_.search)
        .forecast;
  }

  SideBet bet(const ScepticMove& s, std::size_t omega, const RandomizedForecast& forecast,
              int n) override {
    return side_bet(s, omega, forecast, config_.eps, n);
  }

 private:
  GameConfig config_;
};

class ConstantForecaster : public Forecaster {
 public:
  explicit ConstantForecaster(ProbVector p) : p_(std::move(p)) {}

  std::string name() const override {
    std::ostringstream out;
    out << "constant:";
    for (std::size_t i = 0; i < p_.size(); ++i) out << (i ? "," : "") << p_[i];
    return out.str();
  }

  ProbVector forecast_continuous(const ScepticMove&, int) override { return p_; }

  RandomizedForecast forecast_randomized(const ScepticMove&, int) override {
    RandomizedForecast f;
    f.support = {p_};
    f.weights = {1.0};
    return f;
  }

  SideBet bet(const ScepticMove&, std::size_t, const RandomizedForecast& forecast, int) override {
    return SideBet{std::vector<double>(forecast.support.size(), 0.0)};
  }

 private:
  ProbVector p_;
};

template <typename Game, typename Fn>
bool guarded(Game& game, Player player, Fn&& fn) {
  try {
    fn();
    return !game.over();
  } catch (const Error& e) {
    if (game.over()) throw;
    if (e.code() == ErrorCode::kProtocolOrderViolation) throw;
    const Player charged = e.code() == ErrorCode::kValidityViolation ? Player::kSceptic : player;
    game.forfeit(charged, e.code(), e.what());
  } catch (const std::exception& e) {
    if (game.over()) throw;
    game.forfeit(player, ErrorCode::kNumericalFailure, e.what());
  }
  return false;
}

History history_of(std::size_t outcomes, int round, double capital,
                   const std::vector<PastRound>& past) {
  History h;
  h.outcomes = outcomes;
  h.round = round;
  h.capital = capital;
  h.past = past;
  return h;
}

}  // namespace

std::unique_ptr<Forecaster> defensive_forecaster(const GameConfig& config) {
  config.validate();
  return std::make_unique<DefensiveForecaster>(config);
}

std::unique_ptr<Forecaster> constant_forecaster(ProbVector p) {
  return std::make_unique<ConstantForecaster>(std::move(p));
}

void GameConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfigError, what); };
  if (outcomes < 2) fail("M must be at least 2");
  if (outcomes > search.limits.max_outcomes) {
    throw Error(ErrorCode::kUnsupportedDimension,
                "M = " + std::to_string(outcomes) + " exceeds the supported maximum");
  }
  if (horizon < 0) fail("N must be nonnegative");
  if (!(eps > 0.0) || !std::isfinite(eps)) fail("eps must be positive");
  if (!(eps_c > 0.0) || !std::isfinite(eps_c)) fail("eps_c must be positive");
  eps_n.validate();
  if (search.k0 < 1 || search.kmax < search.k0) fail("solver caps need 1 <= k0 <= kmax");
}

TranscriptHeader make_header(const GameConfig& config, const SkepticStrategy& sceptic,
                             const Forecaster& forecaster, const RealityStrategy& reality,
                             const RngPolicy* rng) {
  TranscriptHeader h;
  h.game = config.game;
  h.outcomes = config.outcomes;
  h.horizon = config.horizon;
  h.eps = config.eps;
  h.eps_c = config.eps_c;
  h.eps_n = config.eps_n;
  h.sceptic = sceptic.name();
  h.forecaster = forecaster.name();
  h.reality = reality.name();
  h.rng = rng ? rng->name() : "none";
  h.seed = config.seed;
  h.k0 = config.search.k0;
  h.kmax = config.search.kmax;
  h.enforce_nonnegative = config.enforce_nonnegative;
  return h;
}

Transcript run_game(const GameConfig& config, SkepticStrategy& sceptic, Forecaster& forecaster,
                    RealityStrategy& reality, RngPolicy* rng) {
  config.validate();
  if (config.game == GameType::kRandomized && rng == nullptr) {
    throw Error(ErrorCode::kConfigError, "randomized game needs an RNG policy");
  }
  Transcript t;
  t.header = make_header(config, sceptic, forecaster, reality, rng);
  const std::size_t m = config.outcomes;

  if (config.game == GameType::kContinuous) {
    ContinuousGame game(m, config.enforce_nonnegative);
    for (int n = 1; n <= config.horizon && !game.over(); ++n) {
      ScepticMove s;
      if (!guarded(game, Player::kSceptic, [&] {
            s = sceptic.next_move(history_of(m, n, game.capital(), game.past()));
          })) {
        break;
      }
      game.sceptic_announces(s);
      if (game.over()) break;
      ProbVector p;
      if (!guarded(game, Player::kForecaster, [&] { p = forecaster.forecast_continuous(s, n); })) {
        break;
      }
      game.forecaster_announces(p);
      if (game.over()) break;
      std::size_t omega = 0;
      if (!guarded(game, Player::kReality, [&] { omega = reality.choose(s, p, n); })) break;
      game.reality_announces(omega);
    }
    t.rounds = game.rounds();
  } else {
    RandomizedGame game(m, config.enforce_nonnegative);
    for (int n = 1; n <= config.horizon && !game.over(); ++n) {
      ScepticMove s;
      if (!guarded(game, Player::kSceptic, [&] {
            s = sceptic.next_move(history_of(m, n, game.capital(), game.past()));
          })) {
        break;
      }
      game.sceptic_announces(s);
      if (game.over()) break;
      RandomizedForecast forecast;
      if (!guarded(game, Player::kForecaster,
                   [&] { forecast = forecaster.forecast_randomized(s, n); })) {
        break;
      }
      game.forecaster_announces(forecast);
      if (game.over()) break;
      std::size_t omega = 0;
      if (!guarded(game, Player::kReality, [&] { omega = reality.choose(s, forecast, n); })) {
        break;
      }
      game.reality_announces(omega);
      if (game.over()) break;
      SideBet f;
      if (!guarded(game, Player::kForecaster, [&] { f = forecaster.bet(s, omega, forecast, n); })) {
        break;
      }
      game.forecaster_bets(f);
      if (game.over()) break;
      std::size_t drawn = 0;
      if (!guarded(game, Player::kRng, [&] { drawn = rng->draw(forecast, s, omega); })) break;
      game.rng_draws(drawn);
    }
    t.rounds = game.rounds();
  }
  t.verdict = compute_verdict(t.header, t.rounds);
  return t;
}

}  // namespace dfcast
