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

#include "dfcast/adversaries.h"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "dfcast/error.h"

namespace dfcast {
namespace {

ProbVector random_point(std::size_t m, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> w(m);
  for (double& x : w) x = exp1(rng);
  return make_prob_vector(w);
}

std::vector<ProbVector> probes(std::size_t m, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ProbVector> out;
  for (int i = 0; i < count; ++i) out.push_back(random_point(m, rng));
  for (std::size_t j = 0; j < m; ++j) out.push_back(point_mass(m, j));
  return out;
}

History history(std::size_t m, int round, double capital, const std::vector<PastRound>& past) {
  History h;
  h.outcomes = m;
  h.round = round;
  h.capital = capital;
  h.past = past;
  return h;
}

// --- linear ------------------------------------------------------------------

TEST(LinearSceptic, ZeroCoefficientsGiveZeroMove) {
  auto s = linear_sceptic({0.0, 0.0, 0.0});
  const auto move = s->next_move(history(3, 1, 1.0, {}));
  for (const auto& p : probes(3, 50, 1)) {
    for (double x : move.payoffs(p)) EXPECT_EQ(x, 0.0);
  }
}

TEST(LinearSceptic, IndicatorExpansion) {
  auto s = linear_sceptic({0.0, 1.0});
  const auto move = s->next_move(history(2, 1, 1.0, {}));
  EXPECT_EQ(move.bound, 2.0);
  EXPECT_EQ(move.continuity, Continuity::kContinuousInP);
  for (const auto& p : probes(2, 100, 2)) {
    EXPECT_DOUBLE_EQ(move.evaluate(0, p), -p[1]);
    EXPECT_DOUBLE_EQ(move.evaluate(1, p), 1.0 - p[1]);
  }
}

TEST(LinearSceptic, ValidAndBounded) {
  auto s = linear_sceptic({0.5, -2.0, 1.5, 0.25});
  const auto move = s->next_move(history(4, 1, 1.0, {}));
  const auto report = audit_validity(move, probes(4, 500, 3));
  EXPECT_TRUE(report.ok());
  EXPECT_LE(std::abs(report.max_expectation), 1e-15);
}

TEST(LinearSceptic, CapEnforced) {
  EXPECT_THROW(linear_sceptic({0.0, 10.0}, 5.0), Error);
}

// --- kernel ----------------------------------------------------------------

TEST(KernelSceptic, EmptyHistoryIsZero) {
  auto s = k29_kernel_sceptic(0.1, 0.2);
  const auto move = s->next_move(history(3, 1, 1.0, {}));
  for (const auto& p : probes(3, 20, 4)) {
    for (double x : move.payoffs(p)) EXPECT_EQ(x, 0.0);
  }
}

TEST(KernelSceptic, OneItemHandExpansion) {
  // p_1 = (1, 0), w_1 = 1: residual e_1 - p_1 = (-1, 1), kernel 1 at p = p_1.
  // S(0, p) = eta (0, 0).(-1, 1) = 0, S(1, p) = eta (-1, 1).(-1, 1) = 2 eta.
  auto s = k29_kernel_sceptic(0.1, 0.2);
  const std::vector<PastRound> past = {{point_mass(2, 0), 1}};
  const auto move = s->next_move(history(2, 2, 1.0, past));
  const auto p = point_mass(2, 0);
  EXPECT_NEAR(move.evaluate(0, p), 0.0, 1e-15);
  EXPECT_NEAR(move.evaluate(1, p), 0.2, 1e-15);
}

TEST(KernelSceptic, CapScaleShrinksWithCapital) {
  auto s = k29_kernel_sceptic(1.0, 0.2);
  const std::vector<PastRound> past = {{point_mass(2, 0), 1}};
  // Unscaled bound 2 eta = 2 exceeds capital 0.5, so scale = 0.25.
  const auto move = s->next_move(history(2, 2, 0.5, past));
  EXPECT_NEAR(move.bound, 0.5, 1e-15);
  EXPECT_NEAR(move.evaluate(1, point_mass(2, 0)), 0.5, 1e-15);
}

TEST(KernelSceptic, ValidAndBoundedOnRandomHistories) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng() % 3;
    std::vector<PastRound> past;
    for (int i = 0; i < 15; ++i) past.push_back({random_point(m, rng), rng() % m});
    auto s = k29_kernel_sceptic(0.3, 0.25);
    const auto move = s->next_move(history(m, 16, 0.7, past));
    const auto report = audit_validity(move, probes(m, 100, rng()));
    EXPECT_TRUE(report.ok());
    EXPECT_LE(move.bound, 0.7 + 1e-12);
  }
}

// --- binning ------------------------------------------------------------------

TEST(BinSceptic, EmptyHistoryIsZero) {
  auto s = bin_calibration_sceptic(2, 8, 0.25);
  const auto move = s->next_move(history(2, 1, 1.0, {}));
  EXPECT_EQ(move.continuity, Continuity::kArbitrary);
  for (const auto& p : probes(2, 50, 6)) {
    for (double x : move.payoffs(p)) EXPECT_EQ(x, 0.0);
  }
}

TEST(BinSceptic, UnderForecastBinGetsPositiveStake) {
  auto s = bin_calibration_sceptic(2, 2, 0.25);
  const auto p = make_prob_vector({0.7, 0.3});  // p_1 = 0.3 in bin [0, 0.5)
  const std::vector<PastRound> past = {{p, 1}, {p, 1}, {p, 1}};
  const auto move = s->next_move(history(2, 4, 1.0, past));
  // stake +0.25 in the low bin: S(1, p) = 0.25 (1 - 0.3), S(0, p) = -0.25 * 0.3.
  EXPECT_NEAR(move.evaluate(1, p), 0.25 * 0.7, 1e-15);
  EXPECT_NEAR(move.evaluate(0, p), -0.25 * 0.3, 1e-15);
  // The other bin has no history.
  EXPECT_EQ(move.evaluate(1, make_prob_vector({0.2, 0.8})), 0.0);
}

TEST(BinSceptic, OverForecastBinGetsNegativeStake) {
  auto s = bin_calibration_sceptic(2, 4, 0.5);
  const auto p = make_prob_vector({0.1, 0.9});
  const std::vector<PastRound> past = {{p, 0}, {p, 0}};
  const auto move = s->next_move(history(2, 3, 0.4, past));
  EXPECT_NEAR(move.evaluate(1, p), -0.5 * 0.4 * 0.1, 1e-15);
  EXPECT_NEAR(move.bound, 0.2, 1e-15);
}

TEST(BinSceptic, StakeCappedAtTheInitialUnit) {
  auto s = bin_calibration_sceptic(2, 2, 0.25);
  const auto p = make_prob_vector({0.7, 0.3});
  const std::vector<PastRound> past = {{p, 1}};
  EXPECT_NEAR(s->next_move(history(2, 2, 50.0, past)).bound, 0.25, 1e-15);
}

TEST(BinSceptic, ValidOnRandomHistories) {
  std::mt19937_64 rng(7);
  for (std::size_t m : {2u, 3u, 4u}) {
    std::vector<PastRound> past;
    for (int i = 0; i < 40; ++i) past.push_back({random_point(m, rng), rng() % m});
    auto s = bin_calibration_sceptic(m, 8, 0.25);
    const auto move = s->next_move(history(m, 41, 1.3, past));
    EXPECT_TRUE(audit_validity(move, probes(m, 300, rng())).ok());
  }
}

TEST(BinSceptic, ParameterChecks) {
  try {
    bin_calibration_sceptic(1, 8, 0.25);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedDimension);
  }
  EXPECT_THROW(bin_calibration_sceptic(2, 1, 0.25), Error);
  EXPECT_THROW(bin_calibration_sceptic(2, 8, 0.0), Error);
  EXPECT_THROW(bin_calibration_sceptic(2, 8, 1.0), Error);
}

TEST(BinSceptic, CapitalStaysNonnegative) {
  // Worst case for the sceptic: the outcome is always the one it bet against.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto s = bin_calibration_sceptic(2, 8, 0.25);
    std::vector<PastRound> past;
    double capital = 1.0;
    for (int n = 1; n <= 500; ++n) {
      const auto move = s->next_move(history(2, n, capital, past));
      const auto p = random_point(2, rng);
      const auto row = move.payoffs(p);
      const std::size_t omega = row[0] <= row[1] ? 0 : 1;
      capital += row[omega];
      ASSERT_GE(capital, 0.0);
      past.push_back({p, omega});
    }
  }
}

TEST(KernelSceptic, CapitalStaysNonnegative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto s = k29_kernel_sceptic(0.5, 0.3);
    std::vector<PastRound> past;
    double capital = 1.0;
    for (int n = 1; n <= 500; ++n) {
      const auto move = s->next_move(history(2, n, capital, past));
      const auto p = random_point(2, rng);
      const auto row = move.payoffs(p);
      const std::size_t omega = row[0] <= row[1] ? 0 : 1;
      capital += row[omega];
      ASSERT_GE(capital, -1e-12);
      past.push_back({p, omega});
    }
  }
}

// --- random -----------------------------------------------------------------

TEST(RandomSceptic, CentredAndBounded) {
  for (std::size_t m = 2; m <= 5; ++m) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto move = random_valid_move(m, seed);
      const auto report = audit_validity(move, probes(m, 1000, seed + 100));
      EXPECT_TRUE(report.ok());
      EXPECT_LE(std::abs(report.max_expectation), 1e-12);
    }
  }
}

TEST(RandomSceptic, SeedsGiveDifferentMoves) {
  const auto a = random_valid_move(3, 1);
  const auto b = random_valid_move(3, 2);
  const auto p = make_prob_vector({0.2, 0.3, 0.5});
  EXPECT_NE(a.payoffs(p), b.payoffs(p));
  EXPECT_EQ(a.payoffs(p), random_valid_move(3, 1).payoffs(p));
}

TEST(RandomSceptic, StrategyVariesByRound) {
  auto s = random_valid_sceptic(3, 9);
  const auto p = make_prob_vector({0.2, 0.3, 0.5});
  const auto r1 = s->next_move(history(3, 1, 1.0, {})).payoffs(p);
  const auto r2 = s->next_move(history(3, 2, 1.0, {})).payoffs(p);
  EXPECT_NE(r1, r2);
}

// --- reality -------------------------------------------------------------------

TEST(Reality, ScriptReplaysThenExhausts) {
  auto r = scripted_reality({1, 0, 1});
  const auto s = ScepticMove::zero(2);
  const auto p = uniform_prob_vector(2);
  EXPECT_EQ(r->choose(s, p, 1), 1u);
  EXPECT_EQ(r->choose(s, p, 2), 0u);
  EXPECT_EQ(r->choose(s, p, 3), 1u);
  try {
    r->choose(s, p, 4);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScriptExhausted);
  }
}

TEST(Reality, AdversarialPicksTheLargerGain) {
  auto sceptic = linear_sceptic({0.0, 1.0});
  const auto move = sceptic->next_move(history(2, 1, 1.0, {}));
  auto r = adversarial_reality();
  EXPECT_EQ(r->choose(move, make_prob_vector({0.9, 0.1}), 1), 1u);
  EXPECT_EQ(r->choose(ScepticMove::zero(3), uniform_prob_vector(3), 1), 0u);  // tie -> lowest
}

TEST(Reality, AdversarialUsesExpectedGainUnderTheMixture) {
  auto sceptic = linear_sceptic({0.0, 1.0});
  const auto move = sceptic->next_move(history(2, 1, 1.0, {}));
  RandomizedForecast f;
  f.support = {make_prob_vector({0.3, 0.7}), make_prob_vector({0.9, 0.1})};
  f.weights = {0.5, 0.5};
  // Mean p_1 = 0.4: E S(1) = 0.6, E S(0) = -0.4.
  EXPECT_EQ(adversarial_reality()->choose(move, f, 1), 1u);
}

TEST(Reality, IidPointMassAndFrequencies) {
  auto certain = iid_reality(make_prob_vector({1.0, 0.0}), 3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(certain->choose(ScepticMove::zero(2), uniform_prob_vector(2), i + 1), 0u);
  }
  auto r = iid_reality(make_prob_vector({0.7, 0.3}), 11);
  int ones = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) ones += r->choose(ScepticMove::zero(2), uniform_prob_vector(2), i + 1) == 1;
  // Binomial sd ~ 0.0032; allow five of them.
  EXPECT_NEAR(static_cast<double>(ones) / draws, 0.3, 0.017);
}

TEST(Reality, IidIsReproducible) {
  auto a = iid_reality(make_prob_vector({0.2, 0.5, 0.3}), 5);
  auto b = iid_reality(make_prob_vector({0.2, 0.5, 0.3}), 5);
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(a->choose(ScepticMove::zero(3), uniform_prob_vector(3), i + 1),
              b->choose(ScepticMove::zero(3), uniform_prob_vector(3), i + 1));
  }
}

// --- rng --------------------------------------------------------------------------

TEST(Rng, AdversarialMaximizesTheRealizedGain) {
  auto sceptic = linear_sceptic({0.0, 1.0});
  const auto move = sceptic->next_move(history(2, 1, 1.0, {}));
  RandomizedForecast f;
  f.support = {make_prob_vector({0.3, 0.7}), make_prob_vector({0.9, 0.1}),
               make_prob_vector({0.9, 0.1})};
  f.weights = {0.98, 0.01, 0.01};
  auto rng = adversarial_rng();
  EXPECT_EQ(rng->draw(f, move, 1), 1u);  // S(1, .) = 1 - p_1 largest at p_1 = 0.1; tie -> lowest
  f.support[0] = make_prob_vector({0.95, 0.05});
  EXPECT_EQ(rng->draw(f, move, 0), 0u);  // S(0, .) = -p_1 largest at p_1 = 0.05
}

TEST(Rng, FaithfulFollowsTheWeights) {
  RandomizedForecast f;
  f.support = {make_prob_vector({0.5, 0.5}), make_prob_vector({0.4, 0.6}),
               make_prob_vector({0.3, 0.7})};
  f.weights = {0.5, 0.3, 0.2};
  auto rng = faithful_rng(17);
  std::map<std::size_t, int> counts;
  const int draws = 30000;
  for (int i = 0; i < draws; ++i) ++counts[rng->draw(f, ScepticMove::zero(2), 0)];
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(static_cast<double>(counts[i]) / draws, f.weights[i], 0.015);
  }
}

TEST(Rng, FaithfulNeverPicksZeroWeight) {
  RandomizedForecast f;
  f.support = {make_prob_vector({0.5, 0.5}), make_prob_vector({0.4, 0.6})};
  f.weights = {0.0, 1.0};
  auto rng = faithful_rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(rng->draw(f, ScepticMove::zero(2), 0), 1u);
}

TEST(Rng, UniformUnitRange) {
  std::mt19937_64 engine(3);
  double lo = 1.0, hi = 0.0, total = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = uniform_unit(engine);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    total += u;
  }
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1.0 - 1e-3);
  EXPECT_NEAR(total / 100000, 0.5, 0.005);
}

}  // namespace
}  // namespace dfcast
