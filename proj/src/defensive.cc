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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfcast/error.h"
#include "dfcast/zerosum.h"

namespace dfcast {
namespace {

constexpr double kSupportFloor = 1e-12;

struct ScoredCell {
  CellKey key;
  std::optional<std::size_t> index;
  std::vector<ProbVector> vertices;
  // payoffs[v][w] = S(w, vertex v).
  std::vector<std::vector<double>> payoffs;
  GameSolution solution;
};

void check_move(const ScepticMove& s, const TriangulationLimits& limits) {
  if (s.outcomes < 2 || s.outcomes > limits.max_outcomes) {
    throw Error(ErrorCode::kInvalidArgument,
                "Sceptic move over " + std::to_string(s.outcomes) + " outcomes");
  }
  if (!s.payoffs) throw Error(ErrorCode::kInvalidArgument, "Sceptic move has no evaluator");
}

// Evaluates S at a vertex and enforces the validity and bound constraints.
std::vector<double> audited_payoffs(const ScepticMove& s, const ProbVector& v) {
  auto row = s.payoffs(v);
  if (row.size() != s.outcomes) {
    throw Error(ErrorCode::kDimensionMismatch, "Sceptic move returned wrong payoff count");
  }
  double expectation = 0.0;
  double scale = 1.0;
  for (std::size_t w = 0; w < row.size(); ++w) {
    scale = std::max(scale, std::abs(row[w]));
    const double slack = kValidityTolerance * std::max(1.0, s.bound);
    if (!std::isfinite(row[w]) || std::abs(row[w]) > s.bound + slack) {
      throw Error(ErrorCode::kValidityViolation,
                  "payoff " + std::to_string(row[w]) + " exceeds declared bound " +
                      std::to_string(s.bound));
    }
    expectation += row[w] * v[w];
  }
  if (expectation > kValidityTolerance * scale) {
    throw Error(ErrorCode::kValidityViolation,
                "expected payoff " + std::to_string(expectation) + " under the forecast");
  }
  return row;
}

GameSolution solve_cell(const std::vector<std::vector<double>>& payoffs, std::size_t outcomes) {
  const std::size_t n = payoffs.size();
  std::vector<double> entries(outcomes * n);
  for (std::size_t w = 0; w < outcomes; ++w) {
    for (std::size_t v = 0; v < n; ++v) entries[w * n + v] = payoffs[v][w];
  }
  return game_value(PayoffMatrix(outcomes, n, std::move(entries)));
}

bool ranks_before(const ScoredCell& a, const ScoredCell& b) {
  if (a.solution.value != b.solution.value) return a.solution.value < b.solution.value;
  return a.key < b.key;
}

// Keeps the `width` best cells, best first.
void keep_best(std::vector<ScoredCell>& cells, std::size_t width) {
  width = std::max<std::size_t>(width, 1);
  if (cells.size() > width) {
    std::partial_sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(width),
                      cells.end(), ranks_before);
    cells.resize(width);
  } else {
    std::sort(cells.begin(), cells.end(), ranks_before);
  }
}

class CellSearch {
 public:
  CellSearch(const ScepticMove& s, const SearchOptions& options) : s_(s), options_(options) {}

  std::size_t cells_scored() const { return cells_scored_; }

  // Scores every cell of t and returns the best `width` of them.
  std::vector<ScoredCell> score_all(const Triangulation& t, std::size_t width) {
    std::vector<std::vector<double>> vertex_payoffs;
    vertex_payoffs.reserve(t.vertices().size());
    for (const auto& v : t.vertices()) vertex_payoffs.push_back(audited_payoffs(s_, v));

    std::vector<ScoredCell> scored;
    scored.reserve(t.cells().size());
    for (std::size_t c = 0; c < t.cells().size(); ++c) {
      ScoredCell cell;
      cell.key = t.cell_key(c);
      cell.index = c;
      for (std::size_t v : t.cells()[c]) {
        cell.vertices.push_back(t.vertices()[v]);
        cell.payoffs.push_back(vertex_payoffs[v]);
      }
      cell.solution = solve_cell(cell.payoffs, s_.outcomes);
      scored.push_back(std::move(cell));
    }
    cells_scored_ += scored.size();
    keep_best(scored, width);
    return scored;
  }

  // Scores the children (in `fine`) of each parent and returns the best ones.
  std::vector<ScoredCell> refine(const FreudenthalGrid& coarse, const FreudenthalGrid& fine,
                                 const std::vector<ScoredCell>& parents) {
    std::map<Lattice, std::vector<double>> cache;
    std::vector<ScoredCell> scored;
    for (const auto& parent : parents) {
      for (auto& key : coarse.refine(parent.key)) {
        ScoredCell cell;
        for (const auto& y : fine.cell_vertices(key)) {
          auto it = cache.find(y);
          if (it == cache.end()) {
            auto v = fine.point(y);
            it = cache.emplace(y, audited_payoffs(s_, v)).first;
          }
          cell.vertices.push_back(fine.point(y));
          cell.payoffs.push_back(it->second);
        }
        cell.key = std::move(key);
        cell.solution = solve_cell(cell.payoffs, s_.outcomes);
        scored.push_back(std::move(cell));
      }
    }
    cells_scored_ += scored.size();
    keep_best(scored, options_.beam_width);
    return scored;
  }

 private:
  const ScepticMove& s_;
  const SearchOptions& options_;
  std::size_t cells_scored_ = 0;
};

ProbVector mixture_point(const ScoredCell& cell) {
  const std::size_t m = cell.vertices.front().size();
  std::vector<double> p(m, 0.0);
  for (std::size_t v = 0; v < cell.vertices.size(); ++v) {
    for (std::size_t i = 0; i < m; ++i) p[i] += cell.solution.columns[v] * cell.vertices[v][i];
  }
  return make_prob_vector(p);
}

void check_search_options(const SearchOptions& o) {
  if (o.k0 < 1 || o.kmax < o.k0) {
    throw Error(ErrorCode::kInvalidArgument, "search orders need 1 <= k0 <= kmax");
  }
}

// Largest order in the doubling sequence whose cell count fits the exhaustive
// budget; at least k0.
std::int64_t largest_exhaustive_order(std::size_t outcomes, const SearchOptions& o) {
  std::int64_t k = o.k0;
  while (k <= o.kmax / 2 && cell_count(outcomes, 2 * k) <= o.exhaustive_cells) k *= 2;
  return k;
}

}  // namespace

double ScepticMove::evaluate(std::size_t outcome, const ProbVector& p) const {
  if (outcome >= outcomes) {
    throw Error(ErrorCode::kIndexOutOfRange, "outcome " + std::to_string(outcome));
  }
  return payoffs(p)[outcome];
}

ScepticMove ScepticMove::zero(std::size_t outcomes) {
  ScepticMove s;
  s.outcomes = outcomes;
  s.payoffs = [outcomes](const ProbVector&) { return std::vector<double>(outcomes, 0.0); };
  s.bound = 0.0;
  s.continuity = Continuity::kContinuousInP;
  return s;
}

ScepticMove ScepticMove::from_scalar(std::size_t outcomes,
                                     std::function<double(std::size_t, const ProbVector&)> fn,
                                     double bound, Continuity continuity) {
  ScepticMove s;
  s.outcomes = outcomes;
  s.payoffs = [outcomes, fn = std::move(fn)](const ProbVector& p) {
    std::vector<double> row(outcomes);
    for (std::size_t w = 0; w < outcomes; ++w) row[w] = fn(w, p);
    return row;
  };
  s.bound = bound;
  s.continuity = continuity;
  return s;
}

AuditReport audit_validity(const ScepticMove& s, std::span<const ProbVector> probes) {
  if (probes.empty()) throw Error(ErrorCode::kInvalidArgument, "no probes to audit");
  AuditReport report;
  report.max_expectation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    if (p.size() != s.outcomes) {
      throw Error(ErrorCode::kDimensionMismatch, "probe dimension does not match the move");
    }
    auto row = s.payoffs(p);
    double expectation = 0.0;
    double scale = 1.0;
    for (std::size_t w = 0; w < s.outcomes; ++w) {
      expectation += row[w] * p[w];
      scale = std::max(scale, std::abs(row[w]));
      if (!(std::abs(row[w]) <= s.bound + kValidityTolerance * std::max(1.0, s.bound))) {
        report.bound.push_back({i, w, row[w]});
      }
    }
    report.max_expectation = std::max(report.max_expectation, expectation);
    if (expectation > kValidityTolerance * scale) report.validity.push_back({i, expectation});
  }
  return report;
}

ContinuousSolution solve_continuous(const ScepticMove& s, double tol, std::int64_t k0,
                                    std::int64_t kmax) {
  SearchOptions options;
  options.k0 = k0;
  options.kmax = kmax;
  return solve_continuous(s, tol, options);
}

ContinuousSolution solve_continuous(const ScepticMove& s, double tol,
                                    const SearchOptions& options) {
  check_move(s, options.limits);
  check_search_options(options);
  if (s.continuity != Continuity::kContinuousInP) {
    throw Error(ErrorCode::kInvalidArgument, "continuous solver needs a move continuous in p");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");

  CellSearch search(s, options);
  const std::int64_t exhaustive = largest_exhaustive_order(s.outcomes, options);
  std::vector<ScoredCell> beam;
  std::optional<FreudenthalGrid> previous;
  for (std::int64_t k = options.k0;; k *= 2) {
    if (k <= exhaustive) {
      beam = search.score_all(edgewise_subdivision(s.outcomes, k, options.limits),
                              options.beam_width);
    } else {
      beam = search.refine(*previous, FreudenthalGrid(s.outcomes, k), beam);
    }
    previous.emplace(s.outcomes, k);

    for (const auto& cell : beam) {
      auto p = mixture_point(cell);
      auto row = s.payoffs(p);
      const double worst = *std::max_element(row.begin(), row.end());
      if (worst <= tol) return {std::move(p), worst, k};
    }
    if (k > options.kmax / 2) break;
  }
  throw Error(ErrorCode::kRefinementExhausted,
              "no forecast within tolerance " + std::to_string(tol) + " up to order " +
                  std::to_string(options.kmax));
}

ScepticMove smear(const ScepticMove& s, std::shared_ptr<const Triangulation> t) {
  if (!t || t->outcomes() != s.outcomes) {
    throw Error(ErrorCode::kDimensionMismatch, "triangulation does not match the move");
  }
  auto vertex_payoffs = std::make_shared<std::vector<std::vector<double>>>();
  vertex_payoffs->reserve(t->vertices().size());
  for (const auto& v : t->vertices()) vertex_payoffs->push_back(s.payoffs(v));

  ScepticMove out;
  out.outcomes = s.outcomes;
  out.bound = s.bound;
  out.continuity = Continuity::kContinuousInP;
  out.payoffs = [t, vertex_payoffs](const ProbVector& p) {
    auto loc = locate_cell(*t, p);
    const auto& ids = t->cells()[loc.cell];
    std::vector<double> row(t->outcomes(), 0.0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (loc.barycentric[i] == 0.0) continue;
      const auto& at_vertex = (*vertex_payoffs)[ids[i]];
      for (std::size_t w = 0; w < row.size(); ++w) row[w] += loc.barycentric[i] * at_vertex[w];
    }
    return row;
  };
  return out;
}

SmearingMargin smearing_margin(const ScepticMove& s, const Triangulation& t, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "delta must be positive");
  if (t.outcomes() != s.outcomes) {
    throw Error(ErrorCode::kDimensionMismatch, "triangulation does not match the move");
  }
  SmearingMargin margin;
  margin.worst = -std::numeric_limits<double>::infinity();
  const auto& verts = t.vertices();
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const auto row = s.payoffs(verts[v]);
    // Linear in u, so the extreme points of the star suffice.
    for (std::size_t c : t.cells_of(v)) {
      for (std::size_t u : t.cells()[c]) {
        double bet = 0.0;
        for (std::size_t w = 0; w < row.size(); ++w) bet += row[w] * verts[u][w];
        if (bet > margin.worst) {
          margin.worst = bet;
          margin.vertex = v;
          margin.neighbor = u;
        }
      }
    }
  }
  margin.valid = margin.worst < delta;
  return margin;
}

bool check_smearing_validity(const ScepticMove& s, const Triangulation& t, double delta) {
  return smearing_margin(s, t, delta).valid;
}

ForecastResult build_randomized_forecast(const ScepticMove& s, int n, double eps, double eps_n,
                                         const SearchOptions& options) {
  check_move(s, options.limits);
  check_search_options(options);
  if (!(eps > 0.0) || !(eps_n > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eps and eps_n must be positive");
  }
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "rounds are numbered from 1");

  const std::size_t m = s.outcomes;
  ForecastDiagnostics diag;
  diag.delta = std::ldexp(eps, -n);
  diag.target = diag.delta + kSearchSlack;

  // Smallest order in the doubling sequence whose cells have TV diameter
  // at most eps_n.
  std::int64_t k_min = options.k0;
  while (static_cast<double>(m - 1) / static_cast<double>(k_min) > eps_n) {
    if (k_min > options.kmax / 2) {
      throw Error(ErrorCode::kRefinementExhausted,
                  "eps_n " + std::to_string(eps_n) + " needs an order beyond kmax");
    }
    k_min *= 2;
  }

  CellSearch search(s, options);
  const std::int64_t exhaustive = largest_exhaustive_order(m, options);
  std::optional<ScoredCell> winner;
  std::int64_t order = 0;

  // Global route: certify smearing validity on the whole subdivision, then
  // take the best cell.
  for (std::int64_t k = k_min; k <= exhaustive && !winner; k *= 2) {
    Triangulation t = edgewise_subdivision(m, k, options.limits);
    if (!check_smearing_validity(s, t, diag.delta)) continue;
    auto best = search.score_all(t, 1);
    if (best.front().solution.value <= diag.target) {
      winner = std::move(best.front());
      order = k;
      diag.smearing_certified = true;
    }
  }

  // Beam refinement from the largest exhaustively scored order.
  if (!winner) {
    std::vector<ScoredCell> beam =
        search.score_all(edgewise_subdivision(m, exhaustive, options.limits), options.beam_width);
    std::int64_t k = exhaustive;
    while (true) {
      if (k >= k_min && beam.front().solution.value <= diag.target) {
        winner = std::move(beam.front());
        order = k;
        break;
      }
      if (k > options.kmax / 2) {
        throw Error(ErrorCode::kRefinementExhausted,
                    "no cell with game value within " + std::to_string(diag.target) +
                        " up to order " + std::to_string(options.kmax));
      }
      beam = search.refine(FreudenthalGrid(m, k), FreudenthalGrid(m, 2 * k), beam);
      k *= 2;
    }
  }

  ForecastResult result;
  auto& forecast = result.forecast;
  forecast.order = order;
  forecast.cell = winner->key;
  forecast.cell_index = winner->index;
  std::vector<std::size_t> kept;
  double mass = 0.0;
  for (std::size_t v = 0; v < winner->vertices.size(); ++v) {
    if (winner->solution.columns[v] > kSupportFloor) {
      kept.push_back(v);
      mass += winner->solution.columns[v];
    }
  }
  for (std::size_t v : kept) {
    forecast.support.push_back(winner->vertices[v]);
    forecast.weights.push_back(winner->solution.columns[v] / mass);
  }

  diag.order = order;
  diag.cell_value = winner->solution.value;
  diag.support_size = forecast.support.size();
  diag.diameter = tv_diameter(forecast.support);
  diag.cells_scored = search.cells_scored();
  diag.minimax = -std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < m; ++w) {
    double mean = 0.0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      mean += forecast.weights[i] * winner->payoffs[kept[i]][w];
    }
    diag.minimax = std::max(diag.minimax, mean);
  }
  result.diagnostics = diag;
  return result;
}

SideBet side_bet(const ScepticMove& s, std::size_t omega, const RandomizedForecast& p, double eps,
                 int n) {
  if (omega >= s.outcomes) {
    throw Error(ErrorCode::kIndexOutOfRange, "outcome " + std::to_string(omega));
  }
  const double delta = std::ldexp(eps, -n);
  SideBet f;
  f.values.reserve(p.support.size());
  for (const auto& point : p.support) {
    f.values.push_back((s.payoffs(point)[omega] - delta) / (1.0 + eps));
  }
  return f;
}

double side_bet_mean(const RandomizedForecast& p, const SideBet& f) {
  if (f.values.size() != p.weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "side bet does not match the support");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) mean += p.weights[i] * f.values[i];
  return mean;
}

SetAsideTransform::SetAsideTransform(double threshold) : threshold_(threshold) {
  if (!(threshold > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "set-aside threshold must exceed 1");
  }
}

const SetAsideState& SetAsideTransform::push(double underlying_gain) {
  state_.underlying += underlying_gain;
  if (state_.underlying < 0.0) {
    throw Error(ErrorCode::kNegativeCapital,
                "underlying capital " + std::to_string(state_.underlying));
  }
  // working == scale * underlying throughout.
  state_.working += state_.scale * underlying_gain;
  while (state_.working > threshold_) {
    const double before = state_.working;
    state_.reserve += 1.0;
    state_.working -= 1.0;
    state_.scale *= state_.working / before;
  }
  return state_;
}

std::vector<SetAsideState> set_aside_transform(std::span<const double> gains, double threshold) {
  SetAsideTransform transform(threshold);
  std::vector<SetAsideState> out;
  out.reserve(gains.size());
  for (double g : gains) out.push_back(transform.push(g));
  return out;
}

}  // namespace dfcast
