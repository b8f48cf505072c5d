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

#include "dfcast/zerosum.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfcast/error.h"

namespace dfcast {
namespace {

constexpr double kPivotTolerance = 1e-12;
constexpr double kCertificateTolerance = 1e-9;

}  // namespace

PayoffMatrix::PayoffMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries,
                           std::size_t cap)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows < 1 || cols < 1 || rows > cap || cols > cap) {
    throw Error(ErrorCode::kInvalidArgument,
                "payoff matrix shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " outside [1, " + std::to_string(cap) + "]");
  }
  if (entries_.size() != rows * cols) {
    throw Error(ErrorCode::kDimensionMismatch, "payoff entry count does not match shape");
  }
  for (double x : entries_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidArgument, "non-finite payoff entry");
  }
}

PayoffMatrix::PayoffMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : PayoffMatrix(
          rows.size(), rows.size() == 0 ? 0 : rows.begin()->size(), [&] {
            std::vector<double> flat;
            const std::size_t width = rows.size() == 0 ? 0 : rows.begin()->size();
            for (const auto& r : rows) {
              if (r.size() != width) {
                throw Error(ErrorCode::kDimensionMismatch, "ragged payoff rows");
              }
              flat.insert(flat.end(), r.begin(), r.end());
            }
            return flat;
          }()) {}

GameSolution game_value(const PayoffMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const auto entries = a.entries();
  const double lo = *std::min_element(entries.begin(), entries.end());
  const double scale =
      std::max(1.0, std::max(std::abs(lo), std::abs(*std::max_element(entries.begin(), entries.end()))));
  // Work on A / scale so the pivot tolerances are relative.
  const double shift = 1.0 - lo / scale;

  // maximize sum(x) s.t. (A / scale + shift) x <= 1, x >= 0; then lambda = x / sum(x).
  const std::size_t width = n + m + 1;
  std::vector<double> tab((m + 1) * width, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return tab[r * width + c]; };
  std::vector<std::size_t> basis(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) at(r, c) = a(r, c) / scale + shift;
    at(r, n + r) = 1.0;
    at(r, width - 1) = 1.0;
    basis[r] = n + r;
  }
  for (std::size_t c = 0; c < n; ++c) at(m, c) = -1.0;

  const std::size_t max_iterations = 50 * (m + n) + 100;
  std::size_t iteration = 0;
  for (;; ++iteration) {
    if (iteration > max_iterations) {
      throw Error(ErrorCode::kNumericalFailure, "simplex iteration limit reached");
    }
    std::size_t enter = width;
    for (std::size_t c = 0; c + 1 < width; ++c) {
      if (at(m, c) < -kPivotTolerance) {
        enter = c;
        break;
      }
    }
    if (enter == width) break;

    std::size_t leave = m;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m; ++r) {
      const double coef = at(r, enter);
      if (coef <= kPivotTolerance) continue;
      const double ratio = at(r, width - 1) / coef;
      if (ratio < best_ratio - kPivotTolerance ||
          (ratio <= best_ratio + kPivotTolerance && leave < m && basis[r] < basis[leave])) {
        best_ratio = ratio;
        leave = r;
      }
    }
    if (leave == m) throw Error(ErrorCode::kNumericalFailure, "unbounded game LP");

    const double pivot = at(leave, enter);
    for (std::size_t c = 0; c < width; ++c) at(leave, c) /= pivot;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double factor = at(r, enter);
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c < width; ++c) at(r, c) -= factor * at(leave, c);
    }
    basis[leave] = enter;
  }

  GameSolution sol;
  sol.columns.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) sol.columns[basis[r]] = std::max(0.0, at(r, width - 1));
  }
  sol.rows.assign(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) sol.rows[r] = std::max(0.0, at(m, n + r));

  auto normalize = [](std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    if (!(total > 0.0)) throw Error(ErrorCode::kNumericalFailure, "degenerate game LP solution");
    for (double& x : v) x /= total;
  };
  normalize(sol.columns);
  normalize(sol.rows);

  sol.value = best_response_row(a, sol.columns).payoff;
  double dual_bound = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < m; ++r) col += sol.rows[r] * a(r, c);
    dual_bound = std::min(dual_bound, col);
  }
  if (sol.value - dual_bound > kCertificateTolerance * scale) {
    throw Error(ErrorCode::kNumericalFailure,
                "primal/dual gap " + std::to_string(sol.value - dual_bound));
  }
  return sol;
}

BestResponse best_response_row(const PayoffMatrix& a, std::span<const double> lambda) {
  if (lambda.size() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mixture of size " + std::to_string(lambda.size()) + " for " +
                    std::to_string(a.cols()) + " columns");
  }
  BestResponse best{0, -std::numeric_limits<double>::infinity()};
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double payoff = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) payoff += a(r, c) * lambda[c];
    if (payoff > best.payoff) best = {r, payoff};
  }
  return best;
}

}  // namespace dfcast
