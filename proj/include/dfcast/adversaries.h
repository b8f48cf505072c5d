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

#ifndef DFCAST_ADVERSARIES_H_
#define DFCAST_ADVERSARIES_H_

// Sceptic strategies (test martingales), Reality strategies and Random Number
// Generator policies used to stress the Forecaster. None of these concrete
// strategies is prescribed by the games themselves; they are library content.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dfcast/defensive.h"
#include "dfcast/simplex.h"

namespace dfcast {

struct PastRound {
  ProbVector forecast;  // the forecast actually played (drawn, in the randomized game)
  std::size_t outcome;
};

struct History {
  std::size_t outcomes = 0;
  // Round about to be played, from 1.
  int round = 1;
  // Sceptic's capital before this round.
  double capital = 1.0;
  std::span<const PastRound> past;
};

class SkepticStrategy {
 public:
  virtual ~SkepticStrategy() = default;
  virtual std::string name() const = 0;
  virtual ScepticMove next_move(const History& history) = 0;
};

// S(w, p) = c_w - c.p, i.e. c.(e_w - p). Stationary; bound 2|c|_inf.
std::unique_ptr<SkepticStrategy> linear_sceptic(std::vector<double> c, double cap = 1e6);

// Kernel calibration test:
//   S_n(w, p) = eta * scale * sum_{i<n} K(p, p_i) (e_w - p).(e_{w_i} - p_i)
// with a Gaussian kernel of bandwidth sigma. `scale` <= 1 is chosen each round
// so that the declared bound never exceeds current capital.
std::unique_ptr<SkepticStrategy> k29_kernel_sceptic(double eta, double sigma);

// Calibration test on the event {w = 1}, binned on p_1:
//   S_n(w, p) = stake_b(p) (1{w = 1} - p_1),
//   stake_b = stake_fraction * min(K, 1) * sign(sum over past rounds in bin b of (1{w_i = 1} - p_i1)).
// Discontinuous in p. Loses at most stake_fraction * K per round. Stakes never
// grow past the initial unit, so capital grows at most linearly.
std::unique_ptr<SkepticStrategy> bin_calibration_sceptic(std::size_t outcomes, int bins,
                                                         double stake_fraction);

// S = h - sum_v h(v, p) p_v for a random smooth h drawn from (seed, round).
std::unique_ptr<SkepticStrategy> random_valid_sceptic(std::size_t outcomes, std::uint64_t seed);
ScepticMove random_valid_move(std::size_t outcomes, std::uint64_t seed);

std::unique_ptr<SkepticStrategy> zero_sceptic();

class RealityStrategy {
 public:
  virtual ~RealityStrategy() = default;
  virtual std::string name() const = 0;
  // Continuous game.
  virtual std::size_t choose(const ScepticMove& s, const ProbVector& forecast, int round) = 0;
  // Randomized game: Reality moves before the forecast is drawn.
  virtual std::size_t choose(const ScepticMove& s, const RandomizedForecast& forecast,
                             int round) = 0;
};

std::unique_ptr<RealityStrategy> iid_reality(ProbVector dist, std::uint64_t seed);
// Maximizes Sceptic's (expected) gain; ties to the lowest outcome.
std::unique_ptr<RealityStrategy> adversarial_reality();
// Throws kScriptExhausted once the script runs out.
std::unique_ptr<RealityStrategy> scripted_reality(std::vector<std::size_t> script);

class RngPolicy {
 public:
  virtual ~RngPolicy() = default;
  virtual std::string name() const = 0;
  // Index into forecast.support.
  virtual std::size_t draw(const RandomizedForecast& forecast, const ScepticMove& s,
                           std::size_t omega) = 0;
};

// Samples by the forecast's weights with a seeded mt19937_64.
std::unique_ptr<RngPolicy> faithful_rng(std::uint64_t seed);
// Picks the support point maximizing S(omega, p); ties to the lowest index.
std::unique_ptr<RngPolicy> adversarial_rng();

// Uniform double in [0, 1) from 53 random bits.
double uniform_unit(std::mt19937_64& engine);

}  // namespace dfcast

#endif  // DFCAST_ADVERSARIES_H_
