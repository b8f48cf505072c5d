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

#ifndef DFCAST_ZEROSUM_H_
#define DFCAST_ZEROSUM_H_

// Exact solution of small zero-sum matrix games. The column player mixes to
// minimize the largest row payoff; rows are outcomes, columns are candidate
// forecasts.

#include <cstddef>
#include <span>
#include <vector>

namespace dfcast {

class PayoffMatrix {
 public:
  static constexpr std::size_t kDefaultCap = 64;

  // Row-major entries. Throws kInvalidArgument on non-finite entries or a
  // shape outside [1, cap] x [1, cap].
  PayoffMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries,
               std::size_t cap = kDefaultCap);
  PayoffMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  std::span<const double> entries() const { return entries_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

struct GameSolution {
  // Minimizing mixture over columns.
  std::vector<double> columns;
  // Maximizing mixture over rows, from the LP dual.
  std::vector<double> rows;
  // max over rows of (A * columns); the certificate value.
  double value = 0.0;
};

// Dense simplex method with Bland's rule. Throws kNumericalFailure if the
// primal certificate and the dual bound disagree by more than 1e-9.
GameSolution game_value(const PayoffMatrix& a);

struct BestResponse {
  std::size_t row;
  double payoff;
};

// argmax row of A * lambda, lowest index on ties.
BestResponse best_response_row(const PayoffMatrix& a, std::span<const double> lambda);

}  // namespace dfcast

#endif  // DFCAST_ZEROSUM_H_
