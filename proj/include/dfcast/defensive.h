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

#ifndef DFCAST_DEFENSIVE_H_
#define DFCAST_DEFENSIVE_H_

// Forecaster's side of the continuous and randomized games.
//
// The continuous solver replaces the nonconstructive fixed-point argument by
// per-cell zero-sum games on the piecewise-linear interpolant of Sceptic's
// move, checked against the true move at the candidate point. The randomized
// construction smears an arbitrary move with the barycentric hat functions of
// an edgewise subdivision and plays the winning cell's barycentric weights.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dfcast/simplex.h"

namespace dfcast {

// Slack allowed on every "<= 0" constraint of the games.
// Relative to max(1, largest |S|) at the point being audited.
inline constexpr double kValidityTolerance = 1e-9;

enum class Continuity { kContinuousInP, kArbitrary };

// Sceptic's move S(w, p). `payoffs(p)` returns S(., p) over all outcomes.
struct ScepticMove {
  std::size_t outcomes = 0;
  std::function<std::vector<double>(const ProbVector&)> payoffs;
  // Declared sup-bound on |S|.
  double bound = 0.0;
  Continuity continuity = Continuity::kContinuousInP;

  double evaluate(std::size_t outcome, const ProbVector& p) const;

  static ScepticMove zero(std::size_t outcomes);
  static ScepticMove from_scalar(std::size_t outcomes,
                                 std::function<double(std::size_t, const ProbVector&)> fn,
                                 double bound, Continuity continuity);
};

struct ExpectationViolation {
  std::size_t probe;
  double expectation;
};

struct BoundViolation {
  std::size_t probe;
  std::size_t outcome;
  double value;
};

struct AuditReport {
  std::vector<ExpectationViolation> validity;
  std::vector<BoundViolation> bound;
  // Largest sum_w S(w, p) p_w over the probes.
  double max_expectation = 0.0;

  bool ok() const { return validity.empty() && bound.empty(); }
};

AuditReport audit_validity(const ScepticMove& s, std::span<const ProbVector> probes);

// Knobs shared by both searches. Orders tried are k0, 2 k0, 4 k0, ... <= kmax.
struct SearchOptions {
  std::int64_t k0 = 2;
  std::int64_t kmax = std::int64_t{1} << 40;
  // Orders with at most this many cells are scored exhaustively; finer orders
  // only refine the `beam_width` best cells of the previous order.
  std::size_t exhaustive_cells = 512;
  std::size_t beam_width = 8;
  TriangulationLimits limits;
};

struct ContinuousSolution {
  ProbVector forecast;
  // max over outcomes of the true S at `forecast`.
  double certified_max = 0.0;
  std::int64_t order = 0;
};

// Returns p with max_w S(w, p) <= tol. Throws kRefinementExhausted past kmax,
// kValidityViolation if S fails its audit at an evaluated vertex.
ContinuousSolution solve_continuous(const ScepticMove& s, double tol,
                                    const SearchOptions& options = {});
ContinuousSolution solve_continuous(const ScepticMove& s, double tol, std::int64_t k0,
                                    std::int64_t kmax);

// S*(w, p) = sum_v lambda_v(p) S(w, v) over the vertices of t.
ScepticMove smear(const ScepticMove& s, std::shared_ptr<const Triangulation> t);

struct SmearingMargin {
  bool valid = true;
  // Largest sum_w S(w, v) u_w over vertices v and u in the star of v.
  double worst = 0.0;
  std::size_t vertex = 0;
  std::size_t neighbor = 0;
};

SmearingMargin smearing_margin(const ScepticMove& s, const Triangulation& t, double delta);
// True iff sum_w S(w, v) u_w < delta for every vertex v and every u in its star.
bool check_smearing_validity(const ScepticMove& s, const Triangulation& t, double delta);

// Finitely supported measure on the simplex; the support lies in one cell.
struct RandomizedForecast {
  std::vector<ProbVector> support;
  std::vector<double> weights;
  std::int64_t order = 0;
  CellKey cell;
  // Set when the cell comes from a materialized triangulation.
  std::optional<std::size_t> cell_index;
};

struct ForecastDiagnostics {
  double delta = 0.0;
  // delta plus numerical slack; the acceptance threshold of the cell search.
  double target = 0.0;
  std::int64_t order = 0;
  // True when the cell came from a global smearing-validity check plus an
  // argmin over every cell; false when found by beam refinement.
  bool smearing_certified = false;
  double cell_value = 0.0;
  // max_w sum_p P(p) S(w, p).
  double minimax = 0.0;
  double diameter = 0.0;
  std::size_t support_size = 0;
  std::size_t cells_scored = 0;
};

struct ForecastResult {
  RandomizedForecast forecast;
  ForecastDiagnostics diagnostics;
};

// Numerical slack added to delta in the randomized cell search.
inline constexpr double kSearchSlack = 5e-10;

// delta = eps 2^-n. Throws kRefinementExhausted past kmax, kValidityViolation if
// S fails its audit on an evaluated vertex.
ForecastResult build_randomized_forecast(const ScepticMove& s, int n, double eps, double eps_n,
                                         const SearchOptions& options = {});

struct SideBet {
  // Aligned with the forecast's support.
  std::vector<double> values;
};

// f(p) = (S(omega, p) - eps 2^-n) / (1 + eps) on the support.
SideBet side_bet(const ScepticMove& s, std::size_t omega, const RandomizedForecast& p, double eps,
                 int n);

double side_bet_mean(const RandomizedForecast& p, const SideBet& f);

struct SetAsideState {
  double working = 1.0;
  double reserve = 0.0;
  // Multiplier applied to the underlying strategy's gains.
  double scale = 1.0;
  double underlying = 1.0;
};

// Banks one unit of capital each time working capital exceeds the threshold
// and keeps playing the underlying strategy scaled to what remains.
class SetAsideTransform {
 public:
  explicit SetAsideTransform(double threshold = 2.0);

  // Throws kNegativeCapital if the underlying capital drops below zero.
  const SetAsideState& push(double underlying_gain);
  const SetAsideState& state() const { return state_; }

 private:
  double threshold_;
  SetAsideState state_;
};

std::vector<SetAsideState> set_aside_transform(std::span<const double> gains,
                                               double threshold = 2.0);

}  // namespace dfcast

#endif  // DFCAST_DEFENSIVE_H_
