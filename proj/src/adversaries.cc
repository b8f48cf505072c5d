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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dfcast/error.h"

namespace dfcast {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

std::string join(std::span<const double> values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
  return out.str();
}

class LinearSceptic : public SkepticStrategy {
 public:
  explicit LinearSceptic(std::vector<double> c) : c_(std::move(c)) {}

  std::string name() const override { return "linear:c=" + join(c_); }

  ScepticMove next_move(const History& history) override {
    if (history.outcomes != c_.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "linear sceptic coefficients do not match M");
    }
    double sup = 0.0;
    for (double x : c_) sup = std::max(sup, std::abs(x));
    ScepticMove s;
    s.outcomes = c_.size();
    s.bound = 2.0 * sup;
    s.continuity = Continuity::kContinuousInP;
    s.payoffs = [c = c_](const ProbVector& p) {
      const double mean = dot(c, p.weights());
      std::vector<double> row(c.size());
      for (std::size_t w = 0; w < c.size(); ++w) row[w] = c[w] - mean;
      return row;
    };
    return s;
  }

 private:
  std::vector<double> c_;
};

class KernelSceptic : public SkepticStrategy {
 public:
  KernelSceptic(double eta, double sigma) : eta_(eta), sigma_(sigma) {}

  std::string name() const override {
    std::ostringstream out;
    out << "k29:eta=" << eta_ << ",sigma=" << sigma_;
    return out.str();
  }

  ScepticMove next_move(const History& history) override {
    const std::size_t m = history.outcomes;
    auto centers = std::make_shared<std::vector<std::vector<double>>>();
    auto residuals = std::make_shared<std::vector<std::vector<double>>>();
    double raw_bound = 0.0;
    for (const auto& past : history.past) {
      std::vector<double> residual(m);
      for (std::size_t j = 0; j < m; ++j) {
        residual[j] = (j == past.outcome ? 1.0 : 0.0) - past.forecast[j];
      }
      // |(e_w - p).r| <= |e_w - p| |r| <= sqrt(2) |r|, and the kernel is <= 1.
      raw_bound += std::numbers::sqrt2 * std::sqrt(dot(residual, residual));
      centers->push_back(past.forecast.values());
      residuals->push_back(std::move(residual));
    }
    raw_bound *= eta_;
    const double scale =
        raw_bound > std::max(history.capital, 0.0) ? std::max(history.capital, 0.0) / raw_bound : 1.0;

    ScepticMove s;
    s.outcomes = m;
    s.bound = raw_bound * scale;
    s.continuity = Continuity::kContinuousInP;
    const double gain = eta_ * scale;
    const double inv_two_var = 1.0 / (2.0 * sigma_ * sigma_);
    s.payoffs = [m, centers, residuals, gain, inv_two_var](const ProbVector& p) {
      // S(w, p) = v_w - v.p with v = gain * sum_i K(p, p_i) r_i.
      std::vector<double> v(m, 0.0);
      for (std::size_t i = 0; i < centers->size(); ++i) {
        const auto& c = (*centers)[i];
        double dist2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) dist2 += (p[j] - c[j]) * (p[j] - c[j]);
        const double weight = gain * std::exp(-dist2 * inv_two_var);
        const auto& r = (*residuals)[i];
        for (std::size_t j = 0; j < m; ++j) v[j] += weight * r[j];
      }
      const double mean = dot(v, p.weights());
      for (double& x : v) x -= mean;
      return v;
    };
    return s;
  }

 private:
  double eta_;
  double sigma_;
};

class BinSceptic : public SkepticStrategy {
 public:
  BinSceptic(int bins, double stake_fraction) : bins_(bins), stake_fraction_(stake_fraction) {}

  std::string name() const override {
    std::ostringstream out;
    out << "bins:" << bins_ << ":" << stake_fraction_;
    return out.str();
  }

  ScepticMove next_move(const History& history) override {
    const int bins = bins_;
    auto bin_of = [bins](const ProbVector& p) {
      return std::clamp(static_cast<int>(std::floor(p[1] * bins)), 0, bins - 1);
    };
    std::vector<double> miscalibration(bins_, 0.0);
    for (const auto& past : history.past) {
      miscalibration[bin_of(past.forecast)] +=
          (past.outcome == 1 ? 1.0 : 0.0) - past.forecast[1];
    }
    const double stake = stake_fraction_ * std::clamp(history.capital, 0.0, 1.0);
    std::vector<double> stakes(bins_);
    for (int b = 0; b < bins_; ++b) {
      const double sign = (miscalibration[b] > 0.0) - (miscalibration[b] < 0.0);
      stakes[b] = stake * sign;
    }

    ScepticMove s;
    s.outcomes = history.outcomes;
    s.bound = stake;
    s.continuity = Continuity::kArbitrary;
    s.payoffs = [m = history.outcomes, stakes, bin_of](const ProbVector& p) {
      const double st = stakes[bin_of(p)];
      std::vector<double> row(m);
      for (std::size_t w = 0; w < m; ++w) row[w] = st * ((w == 1 ? 1.0 : 0.0) - p[1]);
      return row;
    };
    return s;
  }

 private:
  int bins_;
  double stake_fraction_;
};

class RandomSceptic : public SkepticStrategy {
 public:
  RandomSceptic(std::size_t outcomes, std::uint64_t seed) : outcomes_(outcomes), seed_(seed) {}

  std::string name() const override { return "random:" + std::to_string(seed_); }

  ScepticMove next_move(const History& history) override {
    if (history.outcomes != outcomes_) {
      throw Error(ErrorCode::kDimensionMismatch, "random sceptic built for another M");
    }
    return random_valid_move(outcomes_,
                             seed_ ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(history.round)));
  }

 private:
  std::size_t outcomes_;
  std::uint64_t seed_;
};

class ZeroSceptic : public SkepticStrategy {
 public:
  std::string name() const override { return "zero"; }
  ScepticMove next_move(const History& history) override {
    return ScepticMove::zero(history.outcomes);
  }
};

// ---------------------------------------------------------------------------

std::size_t sample_index(std::span<const double> weights, std::mt19937_64& engine) {
  const double u = uniform_unit(engine);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (u < cumulative) return i;
  }
  // Rounding left u above the total; take the last point with positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

std::size_t argmax_first(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

class IidReality : public RealityStrategy {
 public:
  IidReality(ProbVector dist, std::uint64_t seed) : dist_(std::move(dist)), engine_(seed) {}

  std::string name() const override { return "iid:" + join(dist_.weights()); }

  std::size_t choose(const ScepticMove& s, const ProbVector&, int) override { return draw(s); }
  std::size_t choose(const ScepticMove& s, const RandomizedForecast&, int) override {
    return draw(s);
  }

 private:
  std::size_t draw(const ScepticMove& s) {
    if (s.outcomes != dist_.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "iid distribution does not match M");
    }
    return sample_index(dist_.weights(), engine_);
  }

  ProbVector dist_;
  std::mt19937_64 engine_;
};

class AdversarialReality : public RealityStrategy {
 public:
  std::string name() const override { return "adversarial"; }

  std::size_t choose(const ScepticMove& s, const ProbVector& forecast, int) override {
    return argmax_first(s.payoffs(forecast));
  }

  std::size_t choose(const ScepticMove& s, const RandomizedForecast& forecast, int) override {
    std::vector<double> expected(s.outcomes, 0.0);
    for (std::size_t i = 0; i < forecast.support.size(); ++i) {
      auto row = s.payoffs(forecast.support[i]);
      for (std::size_t w = 0; w < s.outcomes; ++w) expected[w] += forecast.weights[i] * row[w];
    }
    return argmax_first(expected);
  }
};

class ScriptedReality : public RealityStrategy {
 public:
  explicit ScriptedReality(std::vector<std::size_t> script) : script_(std::move(script)) {}

  std::string name() const override {
    std::ostringstream out;
    out << "scripted:";
    for (std::size_t i = 0; i < script_.size(); ++i) out << (i ? "," : "") << script_[i];
    return out.str();
  }

  std::size_t choose(const ScepticMove&, const ProbVector&, int) override { return next(); }
  std::size_t choose(const ScepticMove&, const RandomizedForecast&, int) override { return next(); }

 private:
  std::size_t next() {
    if (position_ >= script_.size()) {
      throw Error(ErrorCode::kScriptExhausted,
                  "script of length " + std::to_string(script_.size()) + " exhausted");
    }
    return script_[position_++];
  }

  std::vector<std::size_t> script_;
  std::size_t position_ = 0;
};

class FaithfulRng : public RngPolicy {
 public:
  explicit FaithfulRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}
  std::string name() const override { return "rng:faithful:" + std::to_string(seed_); }
  std::size_t draw(const RandomizedForecast& forecast, const ScepticMove&, std::size_t) override {
    return sample_index(forecast.weights, engine_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

class AdversarialRng : public RngPolicy {
 public:
  std::string name() const override { return "rng:adversarial"; }
  std::size_t draw(const RandomizedForecast& forecast, const ScepticMove& s,
                   std::size_t omega) override {
    std::vector<double> gains;
    gains.reserve(forecast.support.size());
    for (const auto& p : forecast.support) gains.push_back(s.payoffs(p)[omega]);
    return argmax_first(gains);
  }
};

}  // namespace

double uniform_unit(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::unique_ptr<SkepticStrategy> linear_sceptic(std::vector<double> c, double cap) {
  if (c.size() < 2) throw Error(ErrorCode::kInvalidArgument, "linear sceptic needs M >= 2");
  for (double x : c) {
    if (!std::isfinite(x) || std::abs(x) > cap) {
      throw Error(ErrorCode::kInvalidArgument, "linear sceptic coefficient outside the cap");
    }
  }
  return std::make_unique<LinearSceptic>(std::move(c));
}

std::unique_ptr<SkepticStrategy> k29_kernel_sceptic(double eta, double sigma) {
  if (!(eta > 0.0) || !(sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "kernel sceptic needs eta, sigma > 0");
  }
  return std::make_unique<KernelSceptic>(eta, sigma);
}

std::unique_ptr<SkepticStrategy> bin_calibration_sceptic(std::size_t outcomes, int bins,
                                                         double stake_fraction) {
  if (outcomes < 2) {
    throw Error(ErrorCode::kUnsupportedDimension,
                "binning sceptic needs at least two outcomes, got " + std::to_string(outcomes));
  }
  if (bins < 2) throw Error(ErrorCode::kInvalidArgument, "binning sceptic needs >= 2 bins");
  if (!(stake_fraction > 0.0 && stake_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "stake fraction must lie in (0, 1)");
  }
  return std::make_unique<BinSceptic>(bins, stake_fraction);
}

std::unique_ptr<SkepticStrategy> random_valid_sceptic(std::size_t outcomes, std::uint64_t seed) {
  if (outcomes < 2) throw Error(ErrorCode::kInvalidArgument, "random sceptic needs M >= 2");
  return std::make_unique<RandomSceptic>(outcomes, seed);
}

ScepticMove random_valid_move(std::size_t outcomes, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * uniform_unit(engine); };
  const std::size_t m = outcomes;
  std::vector<double> offset(m), slope(m * m), amplitude(m * m), frequency(m * m), phase(m * m);
  double sup = 0.0;
  for (std::size_t w = 0; w < m; ++w) {
    offset[w] = uniform(-1.0, 1.0);
    double max_slope = 0.0;
    double amp_total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      slope[w * m + j] = uniform(-1.0, 1.0);
      amplitude[w * m + j] = uniform(-0.5, 0.5);
      frequency[w * m + j] = uniform(0.5, 3.0) * 2.0 * std::numbers::pi;
      phase[w * m + j] = uniform(0.0, 2.0 * std::numbers::pi);
      max_slope = std::max(max_slope, std::abs(slope[w * m + j]));
      amp_total += std::abs(amplitude[w * m + j]);
    }
    sup = std::max(sup, std::abs(offset[w]) + max_slope + amp_total);
  }

  ScepticMove s;
  s.outcomes = m;
  s.bound = 2.0 * sup;
  s.continuity = Continuity::kContinuousInP;
  s.payoffs = [=](const ProbVector& p) {
    std::vector<double> h(m);
    for (std::size_t w = 0; w < m; ++w) {
      double value = offset[w];
      for (std::size_t j = 0; j < m; ++j) {
        value += slope[w * m + j] * p[j] +
                 amplitude[w * m + j] * std::sin(frequency[w * m + j] * p[j] + phase[w * m + j]);
      }
      h[w] = value;
    }
    const double mean = dot(h, p.weights());
    for (double& x : h) x -= mean;
    return h;
  };
  return s;
}

std::unique_ptr<SkepticStrategy> zero_sceptic() { return std::make_unique<ZeroSceptic>(); }

std::unique_ptr<RealityStrategy> iid_reality(ProbVector dist, std::uint64_t seed) {
  return std::make_unique<IidReality>(std::move(dist), seed);
}

std::unique_ptr<RealityStrategy> adversarial_reality() {
  return std::make_unique<AdversarialReality>();
}

std::unique_ptr<RealityStrategy> scripted_reality(std::vector<std::size_t> script) {
  return std::make_unique<ScriptedReality>(std::move(script));
}

std::unique_ptr<RngPolicy> faithful_rng(std::uint64_t seed) {
  return std::make_unique<FaithfulRng>(seed);
}

std::unique_ptr<RngPolicy> adversarial_rng() { return std::make_unique<AdversarialRng>(); }

}  // namespace dfcast
