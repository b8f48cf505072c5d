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

#include "dfcast/defensive.h"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "dfcast/adversaries.h"
#include "dfcast/error.h"
#include "dfcast/simplex.h"

namespace dfcast {
namespace {

ProbVector random_point(std::size_t m, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(m);
  for (double& x : w) x = exp1(rng);
  return make_prob_vector(w);
}

// S(w, p) = f_w - f.p
ScepticMove centred(std::vector<double> f, Continuity c = Continuity::kContinuousInP) {
  double sup = 0.0;
  for (double x : f) sup = std::max(sup, std::abs(x));
  return ScepticMove::from_scalar(
      f.size(),
      [f](std::size_t w, const ProbVector& p) {
        double mean = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) mean += f[j] * p[j];
        return f[w] - mean;
      },
      2.0 * sup, c);
}

// Stake +1 below p_1 = cut and -1 above, on the event {w = 1}.
ScepticMove step_move(std::size_t m, double cut) {
  return ScepticMove::from_scalar(
      m,
      [cut](std::size_t w, const ProbVector& p) {
        const double stake = p[1] < cut ? 1.0 : -1.0;
        return stake * ((w == 1 ? 1.0 : 0.0) - p[1]);
      },
      1.0, Continuity::kArbitrary);
}

double max_expected(const ScepticMove& s, const RandomizedForecast& f) {
  double worst = -1e300;
  for (std::size_t w = 0; w < s.outcomes; ++w) {
    double mean = 0.0;
    for (std::size_t i = 0; i < f.support.size(); ++i) {
      mean += f.weights[i] * s.evaluate(w, f.support[i]);
    }
    worst = std::max(worst, mean);
  }
  return worst;
}

double pairwise_tv(const RandomizedForecast& f) {
  double d = 0.0;
  for (const auto& a : f.support) {
    for (const auto& b : f.support) {
      double l1 = 0.0;
      for (std::size_t j = 0; j < a.size(); ++j) l1 += std::abs(a[j] - b[j]);
      d = std::max(d, 0.5 * l1);
    }
  }
  return d;
}

// --- audit -------------------------------------------------------------------

TEST(AuditValidity, ZeroMoveIsClean) {
  std::mt19937_64 rng(1);
  std::vector<ProbVector> probes;
  for (int i = 0; i < 50; ++i) probes.push_back(random_point(3, rng));
  EXPECT_TRUE(audit_validity(ScepticMove::zero(3), probes).ok());
}

TEST(AuditValidity, CentredIndicatorHasZeroExpectation) {
  std::mt19937_64 rng(2);
  std::vector<ProbVector> probes;
  for (int i = 0; i < 200; ++i) probes.push_back(random_point(2, rng));
  const auto report = audit_validity(centred({1.0, 0.0}), probes);
  EXPECT_TRUE(report.ok());
  EXPECT_LE(std::abs(report.max_expectation), 1e-15);
}

TEST(AuditValidity, UncentredIndicatorIsFlagged) {
  const auto s = ScepticMove::from_scalar(
      2, [](std::size_t w, const ProbVector&) { return w == 0 ? 1.0 : 0.0; }, 1.0,
      Continuity::kContinuousInP);
  const std::vector<ProbVector> probes = {make_prob_vector({0.5, 0.5})};
  const auto report = audit_validity(s, probes);
  ASSERT_EQ(report.validity.size(), 1u);
  EXPECT_EQ(report.validity[0].probe, 0u);
  EXPECT_DOUBLE_EQ(report.validity[0].expectation, 0.5);
}

TEST(AuditValidity, BoundViolationIsFlagged) {
  auto s = centred({3.0, 0.0});
  s.bound = 1.0;
  const std::vector<ProbVector> probes = {make_prob_vector({0.5, 0.5})};
  EXPECT_FALSE(audit_validity(s, probes).bound.empty());
}

TEST(AuditValidity, EmptyProbesRejected) {
  EXPECT_THROW(audit_validity(ScepticMove::zero(2), {}), Error);
}

// --- continuous solver ---------------------------------------------------------

TEST(SolveContinuous, ZeroMove) {
  const auto sol = solve_continuous(ScepticMove::zero(3), 1e-6);
  EXPECT_EQ(sol.certified_max, 0.0);
}

TEST(SolveContinuous, TwoOutcomeIndicatorForcesMassOnOne) {
  const double tol = 1e-4;
  const auto sol = solve_continuous(centred({0.0, 1.0}), tol);
  EXPECT_GE(sol.forecast[1], 1.0 - tol);
  EXPECT_LE(sol.certified_max, tol);
}

TEST(SolveContinuous, ThreeOutcomeIndicatorForcesMassOnTwo) {
  const double tol = 1e-4;
  const auto sol = solve_continuous(centred({0.0, 0.0, 1.0}), tol);
  EXPECT_GE(sol.forecast[2], 1.0 - tol);
}

TEST(SolveContinuous, CertificateMatchesDirectEvaluation) {
  for (std::size_t m = 2; m <= 4; ++m) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const auto s = random_valid_move(m, seed * 31 + m);
      const double tol = 1e-3;
      const auto sol = solve_continuous(s, tol);
      double worst = -1e300;
      for (std::size_t w = 0; w < m; ++w) worst = std::max(worst, s.evaluate(w, sol.forecast));
      EXPECT_EQ(worst, sol.certified_max);
      EXPECT_LE(worst, tol) << "m=" << m << " seed=" << seed;
    }
  }
}

TEST(SolveContinuous, RejectsDiscontinuousMoves) {
  EXPECT_THROW(solve_continuous(step_move(2, 0.5), 1e-3), Error);
}

TEST(SolveContinuous, ExhaustsTinyOrderCap) {
  try {
    // Its solution is interior; orders 2 and 4 cannot reach 1e-12.
    solve_continuous(random_valid_move(3, 1), 1e-12, 2, 4);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRefinementExhausted);
  }
}

// --- smearing ------------------------------------------------------------------

TEST(Smear, AgreesAtVertices) {
  auto t = std::make_shared<const Triangulation>(edgewise_subdivision(3, 4));
  const auto s = step_move(3, 0.4);
  const auto smeared = smear(s, t);
  for (const auto& v : t->vertices()) {
    for (std::size_t w = 0; w < 3; ++w) EXPECT_NEAR(smeared.evaluate(w, v), s.evaluate(w, v), 1e-15);
  }
}

TEST(Smear, ReproducesLinearMoves) {
  auto t = std::make_shared<const Triangulation>(edgewise_subdivision(3, 5));
  const auto affine = ScepticMove::from_scalar(
      3,
      [](std::size_t w, const ProbVector& p) {
        const double c[3] = {0.2, -0.7, 1.1};
        return c[w] - (0.3 * p[0] + 0.1 * p[1] - 0.4 * p[2]);
      },
      2.0, Continuity::kContinuousInP);
  const auto smeared = smear(affine, t);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_point(3, rng);
    for (std::size_t w = 0; w < 3; ++w) {
      EXPECT_NEAR(smeared.evaluate(w, p), affine.evaluate(w, p), 1e-10);
    }
  }
}

TEST(Smear, StepBlendOnTheHalfGrid) {
  auto t = std::make_shared<const Triangulation>(edgewise_subdivision(2, 2));
  const auto s = ScepticMove::from_scalar(
      2,
      [](std::size_t w, const ProbVector& p) {
        return p[1] >= 0.5 ? (w == 1 ? 1.0 : 0.0) - p[1] : 0.0;
      },
      1.0, Continuity::kArbitrary);
  const auto smeared = smear(s, t);
  // (0.6, 0.4) = 0.2 (1, 0) + 0.8 (0.5, 0.5).
  const auto p = make_prob_vector({0.6, 0.4});
  EXPECT_NEAR(smeared.evaluate(0, p), 0.8 * -0.5, 1e-15);
  EXPECT_NEAR(smeared.evaluate(1, p), 0.8 * 0.5, 1e-15);
}

TEST(Smear, MatchesHandInterpolationOnTheLine) {
  const int k = 8;
  auto t = std::make_shared<const Triangulation>(edgewise_subdivision(2, k));
  const auto s = step_move(2, 0.37);
  const auto smeared = smear(s, t);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);  // p_1
    const double lo = std::floor(x * k) / k;
    const double hi = std::min(1.0, lo + 1.0 / k);
    const double a = (hi - x) * k;
    const auto p = make_prob_vector({1.0 - x, x});
    const auto plo = make_prob_vector({1.0 - lo, lo});
    const auto phi = make_prob_vector({1.0 - hi, hi});
    for (std::size_t w = 0; w < 2; ++w) {
      const double expected = a * s.evaluate(w, plo) + (1.0 - a) * s.evaluate(w, phi);
      EXPECT_NEAR(smeared.evaluate(w, p), expected, 1e-10);
    }
  }
}

TEST(SmearingValidity, ZeroMoveAlwaysValid) {
  EXPECT_TRUE(check_smearing_validity(ScepticMove::zero(3), edgewise_subdivision(3, 3), 0.01));
}

TEST(SmearingValidity, CoarseGridFailsOnTheIndicator) {
  // k = 1: at v = (1, 0), S(1, v) = 1, and u = (0, 1) is in the star, so the
  // bet sum_w S(w, v) u_w = 1 exceeds delta.
  const auto s = centred({0.0, 1.0});
  const auto margin = smearing_margin(s, edgewise_subdivision(2, 1), 0.01);
  EXPECT_FALSE(margin.valid);
  EXPECT_DOUBLE_EQ(margin.worst, 1.0);
}

TEST(SmearingValidity, DoublingUntilMeshBoundCertifies) {
  const auto s = centred({0.0, 1.0});
  const double bound = 1.0;
  const double delta = 0.01;
  std::int64_t k = 1;
  while (2.0 * bound * 1.0 / static_cast<double>(k) >= delta) k *= 2;
  EXPECT_EQ(k, 256);
  EXPECT_TRUE(check_smearing_validity(s, edgewise_subdivision(2, k), delta));
}

TEST(SmearingValidity, MeshBoundHoldsForRandomMoves) {
  // sum_w S(w, v) u_w <= 2 B tv(u, v) <= 2 B (M - 1) / k.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_valid_move(3, seed);
    const auto t = edgewise_subdivision(3, 16);
    const auto margin = smearing_margin(s, t, 1.0);
    EXPECT_LE(margin.worst, 2.0 * s.bound * 2.0 / 16.0 + 1e-12);
  }
}

// --- randomized forecasts --------------------------------------------------------

TEST(RandomizedForecast, ZeroMoveGivesPointMass) {
  const auto r = build_randomized_forecast(ScepticMove::zero(3), 1, 0.1, 0.5);
  EXPECT_EQ(r.forecast.support.size(), 1u);
  EXPECT_EQ(r.diagnostics.minimax, 0.0);
}

TEST(RandomizedForecast, LinearMoveMeetsTheBound) {
  const auto s = centred({0.4, -0.2, 0.9});
  for (int n : {1, 5, 12, 30}) {
    const double eps = 0.1;
    const auto r = build_randomized_forecast(s, n, eps, 0.05);
    EXPECT_LE(max_expected(s, r.forecast), std::ldexp(eps, -n) + 1e-9) << "n=" << n;
  }
}

TEST(RandomizedForecast, StepMoveStraddlesOrAvoidsTheJump) {
  for (std::size_t m : {2u, 3u}) {
    const auto s = step_move(m, 0.5);
    for (int n = 1; n <= 40; n += 3) {
      const double eps = 0.1;
      const double eps_n = std::max(0.05 * std::ldexp(1.0, -n), 1e-4);
      const auto r = build_randomized_forecast(s, n, eps, eps_n);
      const auto& f = r.forecast;
      EXPECT_LE(f.support.size(), m);
      double total = 0.0;
      for (double w : f.weights) {
        EXPECT_GT(w, 0.0);
        total += w;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_LE(pairwise_tv(f), eps_n + 1e-15);
      EXPECT_LE(max_expected(s, f), std::ldexp(eps, -n) + 1e-9) << "m=" << m << " n=" << n;
      EXPECT_NEAR(r.diagnostics.minimax, max_expected(s, f), 1e-12);
    }
  }
}

TEST(RandomizedForecast, RandomMovesProperty) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + rng() % 3;
    const auto s = random_valid_move(m, rng());
    const int n = 1 + static_cast<int>(rng() % 25);
    const double eps = 0.05 + 0.45 * uniform_unit(rng);
    const double eps_n = 0.01 + 0.2 * uniform_unit(rng);
    const auto r = build_randomized_forecast(s, n, eps, eps_n);
    EXPECT_LE(r.forecast.support.size(), m);
    EXPECT_LE(pairwise_tv(r.forecast), eps_n + 1e-15);
    EXPECT_LE(max_expected(s, r.forecast), std::ldexp(eps, -n) + 1e-9);
  }
}

TEST(RandomizedForecast, InvalidMoveIsReported) {
  const auto s = ScepticMove::from_scalar(
      2, [](std::size_t w, const ProbVector&) { return w == 0 ? 1.0 : 0.0; }, 1.0,
      Continuity::kContinuousInP);
  try {
    build_randomized_forecast(s, 1, 0.1, 0.5);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidityViolation);
  }
}

// --- side bets -----------------------------------------------------------------

RandomizedForecast two_point() {
  RandomizedForecast f;
  f.support = {make_prob_vector({0.5, 0.5}), make_prob_vector({0.25, 0.75})};
  f.weights = {0.5, 0.5};
  return f;
}

TEST(SideBet, ZeroMoveBetsTheDiscount) {
  const auto f = side_bet(ScepticMove::zero(2), 0, two_point(), 0.1, 1);
  for (double v : f.values) EXPECT_DOUBLE_EQ(v, -0.05 / 1.1);
}

TEST(SideBet, ZeroWhereTheMoveEqualsTheDiscount) {
  const double delta = std::ldexp(0.2, -3);
  const auto s = ScepticMove::from_scalar(
      2, [delta](std::size_t, const ProbVector&) { return delta; }, 1.0,
      Continuity::kContinuousInP);
  const auto f = side_bet(s, 1, two_point(), 0.2, 3);
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(SideBet, HandArithmetic) {
  const auto s = ScepticMove::from_scalar(
      2, [](std::size_t, const ProbVector&) { return 0.3; }, 1.0, Continuity::kContinuousInP);
  const auto f = side_bet(s, 0, two_point(), 0.1, 2);
  for (double v : f.values) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(SideBet, MeanIsNonpositiveAndIdentityHolds) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 2 + rng() % 2;
    const auto s = trial % 2 ? random_valid_move(m, rng()) : step_move(m, 0.3 + 0.4 * uniform_unit(rng));
    const int n = 1 + static_cast<int>(rng() % 30);
    const double eps = 0.1;
    const auto r = build_randomized_forecast(s, n, eps, 0.05);
    const std::size_t omega = rng() % m;
    const auto f = side_bet(s, omega, r.forecast, eps, n);
    EXPECT_LE(side_bet_mean(r.forecast, f), 1e-9);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const double gain = s.evaluate(omega, r.forecast.support[i]);
      EXPECT_NEAR(gain, (1.0 + eps) * f.values[i] + std::ldexp(eps, -n), 1e-12);
    }
  }
}

// --- set-aside ------------------------------------------------------------------

TEST(SetAside, ConstantCapitalNeverBanks) {
  const std::vector<double> gains(20, 0.0);
  for (const auto& st : set_aside_transform(gains)) {
    EXPECT_EQ(st.working, 1.0);
    EXPECT_EQ(st.reserve, 0.0);
  }
}

TEST(SetAside, DoublingCapitalBanksEveryRound) {
  std::vector<double> gains;
  double u = 1.0;
  for (int i = 0; i < 10; ++i) {
    gains.push_back(u);
    u *= 2.0;
  }
  const auto states = set_aside_transform(gains);
  EXPECT_EQ(states[0].reserve, 0.0);  // capital 2 is not above the threshold
  for (std::size_t i = 1; i < states.size(); ++i) EXPECT_GT(states[i].reserve, states[i - 1].reserve);
  EXPECT_GE(states.back().reserve, 8.0);
}

TEST(SetAside, SingleTrigger) {
  const std::vector<double> gains = {2.0};
  const auto st = set_aside_transform(gains).back();
  EXPECT_EQ(st.reserve, 1.0);
  EXPECT_EQ(st.working, 2.0);
  EXPECT_DOUBLE_EQ(st.scale, 2.0 / 3.0);
}

TEST(SetAside, WorkingCapitalTracksScaledUnderlying) {
  std::mt19937_64 rng(12);
  SetAsideTransform t;
  for (int i = 0; i < 500; ++i) {
    const double u = t.state().underlying;
    const double gain = u * (uniform_unit(rng) * 0.6 - 0.25);
    const auto& st = t.push(gain);
    EXPECT_NEAR(st.working, st.scale * st.underlying, 1e-9 * std::max(1.0, st.working));
    EXPECT_LE(st.working, 2.0);
  }
}

TEST(SetAside, NegativeUnderlyingCapitalRejected) {
  SetAsideTransform t;
  try {
    t.push(-1.5);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNegativeCapital);
  }
}

}  // namespace
}  // namespace dfcast
