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

#include "dfcast/simplex.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>

#include "dfcast/error.h"

namespace dfcast {
namespace {

constexpr double kClampTolerance = 1e-9;
// Barycentric weights at or below this count as zero when deciding which face
// a point lies on.
constexpr double kFaceTolerance = 1e-13;

void check_same_size(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "probability vectors of size " + std::to_string(p.size()) +
                    " and " + std::to_string(q.size()));
  }
}

// Every non-increasing sequence of length `len` with entries in [0, top],
// in lexicographic order.
void enumerate_nonincreasing(std::size_t len, std::int64_t top,
                             std::vector<Lattice>& out) {
  Lattice current(len, 0);
  auto recurse = [&](auto&& self, std::size_t j, std::int64_t upper) -> void {
    if (j == len) {
      out.push_back(current);
      return;
    }
    for (std::int64_t v = 0; v <= upper; ++v) {
      current[j] = v;
      self(self, j + 1, v);
    }
  };
  recurse(recurse, 0, top);
}

// Bit j set iff base[j] == base[j+1]; such pairs must be stepped in order.
unsigned tie_mask(const Lattice& base) {
  unsigned mask = 0;
  for (std::size_t j = 0; j + 1 < base.size(); ++j) {
    if (base[j] == base[j + 1]) mask |= 1u << j;
  }
  return mask;
}

bool respects_ties(const std::vector<int>& steps, unsigned mask) {
  std::vector<int> position(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) position[steps[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j + 1 < steps.size(); ++j) {
    if ((mask >> j) & 1u) {
      if (position[j] > position[j + 1]) return false;
    }
  }
  return true;
}

}  // namespace

ProbVector make_prob_vector(std::span<const double> raw) {
  if (raw.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty probability vector");
  }
  std::vector<double> w(raw.begin(), raw.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite weight at index " + std::to_string(i));
    }
    if (w[i] < -kClampTolerance) {
      throw Error(ErrorCode::kNegativeMass,
                  "weight " + std::to_string(w[i]) + " at index " + std::to_string(i));
    }
    if (w[i] < 0.0) w[i] = 0.0;
    sum += w[i];
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::kZeroMass, "weights sum to zero");
  if (sum != 1.0) {
    for (double& x : w) x /= sum;
  }
  return ProbVector(std::move(w));
}

ProbVector point_mass(std::size_t outcomes, std::size_t index) {
  if (index >= outcomes) {
    throw Error(ErrorCode::kIndexOutOfRange, "point mass index " + std::to_string(index));
  }
  std::vector<double> w(outcomes, 0.0);
  w[index] = 1.0;
  return make_prob_vector(w);
}

ProbVector uniform_prob_vector(std::size_t outcomes) {
  return make_prob_vector(std::vector<double>(outcomes, 1.0));
}

double tv_distance(const ProbVector& p, const ProbVector& q) {
  check_same_size(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

double euclidean_distance(const ProbVector& p, const ProbVector& q) {
  check_same_size(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - q[i]) * (p[i] - q[i]);
  return std::sqrt(total);
}

double tv_diameter(std::span<const ProbVector> points) {
  double diameter = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      diameter = std::max(diameter, tv_distance(points[i], points[j]));
    }
  }
  return diameter;
}

// ---------------------------------------------------------------------------
// FreudenthalGrid

FreudenthalGrid::FreudenthalGrid(std::size_t outcomes, std::int64_t order)
    : outcomes_(outcomes), order_(order) {
  if (outcomes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs at least two outcomes");
  }
  if (order < 1) {
    throw Error(ErrorCode::kInvalidArgument, "grid order must be positive");
  }
}

FreudenthalGrid::Location FreudenthalGrid::locate(const ProbVector& p) const {
  if (p.size() != outcomes_) {
    throw Error(ErrorCode::kDimensionMismatch, "point dimension does not match grid");
  }
  const std::size_t d = outcomes_ - 1;
  const double k = static_cast<double>(order_);

  // Summing from the tail keeps y non-increasing in floating point.
  std::vector<double> frac(d);
  Location loc;
  loc.cell.base.resize(d);
  double tail = 0.0;
  for (std::size_t i = d; i >= 1; --i) {
    tail += p[i];
    const double y = k * tail;
    const std::int64_t base =
        std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(y)), 0, order_ - 1);
    loc.cell.base[i - 1] = base;
    frac[i - 1] = std::clamp(y - static_cast<double>(base), 0.0, 1.0);
  }

  loc.cell.steps.resize(d);
  std::iota(loc.cell.steps.begin(), loc.cell.steps.end(), 0);
  std::stable_sort(loc.cell.steps.begin(), loc.cell.steps.end(),
                   [&](int a, int b) { return frac[a] > frac[b]; });

  const auto& s = loc.cell.steps;
  loc.barycentric.resize(outcomes_);
  loc.barycentric[0] = 1.0 - frac[s[0]];
  for (std::size_t i = 1; i < d; ++i) loc.barycentric[i] = frac[s[i - 1]] - frac[s[i]];
  loc.barycentric[d] = frac[s[d - 1]];
  return loc;
}

std::vector<Lattice> FreudenthalGrid::cell_vertices(const CellKey& cell) const {
  std::vector<Lattice> out;
  out.reserve(outcomes_);
  Lattice y = cell.base;
  out.push_back(y);
  for (int step : cell.steps) {
    ++y[step];
    out.push_back(y);
  }
  return out;
}

ProbVector FreudenthalGrid::point(const Lattice& y) const {
  const std::size_t d = outcomes_ - 1;
  if (y.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "lattice point dimension does not match grid");
  }
  const double k = static_cast<double>(order_);
  std::vector<double> w(outcomes_);
  w[0] = static_cast<double>(order_ - y[0]) / k;
  for (std::size_t i = 1; i < d; ++i) w[i] = static_cast<double>(y[i - 1] - y[i]) / k;
  w[d] = static_cast<double>(y[d - 1]) / k;
  return make_prob_vector(w);
}

bool FreudenthalGrid::contains(const CellKey& cell) const {
  const std::size_t d = outcomes_ - 1;
  if (cell.base.size() != d || cell.steps.size() != d) return false;
  std::vector<int> sorted = cell.steps;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < d; ++i) {
    if (sorted[i] != static_cast<int>(i)) return false;
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (cell.base[j] < 0 || cell.base[j] > order_ - 1) return false;
    if (j + 1 < d && cell.base[j] < cell.base[j + 1]) return false;
  }
  return respects_ties(cell.steps, tie_mask(cell.base));
}

std::vector<CellKey> FreudenthalGrid::refine(const CellKey& cell) const {
  const std::size_t d = outcomes_ - 1;
  std::vector<CellKey> children;
  children.reserve(std::size_t{1} << d);
  // The first m stepped coordinates have fractional part >= 1/2, so they move
  // up one fine lattice unit; the fine step order is any interleaving of the
  // two groups that keeps each group's internal order.
  for (std::size_t m = 0; m <= d; ++m) {
    CellKey base_child;
    base_child.base.resize(d);
    for (std::size_t j = 0; j < d; ++j) base_child.base[j] = 2 * cell.base[j];
    for (std::size_t i = 0; i < m; ++i) ++base_child.base[cell.steps[i]];
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != m) continue;
      CellKey child = base_child;
      child.steps.resize(d);
      std::size_t from_high = 0;
      std::size_t from_low = m;
      for (std::size_t pos = 0; pos < d; ++pos) {
        child.steps[pos] = ((mask >> pos) & 1u) ? cell.steps[from_high++] : cell.steps[from_low++];
      }
      children.push_back(std::move(child));
    }
  }
  return children;
}

// ---------------------------------------------------------------------------
// Triangulation

TriangulationLimits TriangulationLimits::from_env() {
  TriangulationLimits limits;
  if (const char* env = std::getenv("DF_MAX_VERTICES")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) limits.max_vertices = static_cast<std::size_t>(v);
  }
  return limits;
}

std::size_t lattice_point_count(std::size_t outcomes, std::int64_t order) {
  if (outcomes < 1 || order < 0) return 0;
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  unsigned __int128 result = 1;
  for (std::size_t i = 1; i < outcomes; ++i) {
    result = result * static_cast<unsigned __int128>(order + static_cast<std::int64_t>(i)) / i;
    if (result > kMax) return kMax;
  }
  return static_cast<std::size_t>(result);
}

std::size_t cell_count(std::size_t outcomes, std::int64_t order) {
  if (outcomes < 1 || order < 0) return 0;
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  unsigned __int128 result = 1;
  for (std::size_t i = 1; i < outcomes; ++i) {
    result *= static_cast<unsigned __int128>(order);
    if (result > kMax) return kMax;
  }
  return static_cast<std::size_t>(result);
}

std::span<const std::size_t> Triangulation::cells_of(std::size_t vertex) const {
  if (vertex >= adjacency_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "vertex " + std::to_string(vertex));
  }
  return adjacency_[vertex];
}

std::optional<std::size_t> Triangulation::find_cell(const CellKey& key) const {
  auto it = cell_index_.find(key);
  if (it == cell_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Triangulation::find_vertex(const Lattice& y) const {
  auto it = vertex_index_.find(y);
  if (it == vertex_index_.end()) return std::nullopt;
  return it->second;
}

Triangulation edgewise_subdivision(std::size_t outcomes, std::int64_t order,
                                   const TriangulationLimits& limits) {
  if (outcomes < 2 || outcomes > limits.max_outcomes) {
    throw Error(ErrorCode::kInvalidArgument,
                "outcome count " + std::to_string(outcomes) + " outside [2, " +
                    std::to_string(limits.max_outcomes) + "]");
  }
  if (order < 1) throw Error(ErrorCode::kInvalidArgument, "order must be positive");
  const std::size_t nv = lattice_point_count(outcomes, order);
  const std::size_t nc = cell_count(outcomes, order);
  // Cells outnumber vertices by up to (M-1)!, so they get a proportional cap.
  const std::size_t cell_cap = limits.max_vertices > std::numeric_limits<std::size_t>::max() / 8
                                   ? std::numeric_limits<std::size_t>::max()
                                   : 8 * limits.max_vertices;
  if (nv > limits.max_vertices || nc > cell_cap) {
    throw Error(ErrorCode::kSizeOverflow,
                "order " + std::to_string(order) + " subdivision over " +
                    std::to_string(outcomes) + " outcomes exceeds the cap of " +
                    std::to_string(limits.max_vertices) + " vertices");
  }

  Triangulation t{FreudenthalGrid(outcomes, order)};
  const std::size_t d = outcomes - 1;

  t.lattice_.reserve(nv);
  enumerate_nonincreasing(d, order, t.lattice_);
  t.vertices_.reserve(nv);
  for (std::size_t i = 0; i < t.lattice_.size(); ++i) {
    t.vertices_.push_back(t.grid_.point(t.lattice_[i]));
    t.vertex_index_.emplace(t.lattice_[i], i);
  }

  std::vector<int> identity(d);
  std::iota(identity.begin(), identity.end(), 0);
  std::map<unsigned, std::vector<std::vector<int>>> steps_by_mask;
  auto steps_for = [&](unsigned mask) -> const std::vector<std::vector<int>>& {
    auto it = steps_by_mask.find(mask);
    if (it != steps_by_mask.end()) return it->second;
    std::vector<std::vector<int>> valid;
    std::vector<int> perm = identity;
    do {
      if (respects_ties(perm, mask)) valid.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return steps_by_mask.emplace(mask, std::move(valid)).first->second;
  };

  std::vector<Lattice> bases;
  enumerate_nonincreasing(d, order - 1, bases);
  t.adjacency_.assign(nv, {});
  t.cells_.reserve(nc);
  t.keys_.reserve(nc);
  for (auto& base : bases) {
    for (const auto& steps : steps_for(tie_mask(base))) {
      CellKey key{base, steps};
      std::vector<std::size_t> ids;
      ids.reserve(outcomes);
      for (const auto& y : t.grid_.cell_vertices(key)) ids.push_back(t.vertex_index_.at(y));
      const std::size_t c = t.cells_.size();
      for (std::size_t v : ids) t.adjacency_[v].push_back(c);
      t.cells_.push_back(std::move(ids));
      t.cell_index_.emplace(key, c);
      t.keys_.push_back(std::move(key));
    }
  }
  return t;
}

CellLocation locate_cell(const Triangulation& t, const ProbVector& p) {
  auto loc = t.grid().locate(p);
  auto found = t.find_cell(loc.cell);
  if (!found) {
    throw Error(ErrorCode::kNumericalFailure, "located cell is not part of the triangulation");
  }
  const auto& ids = t.cells()[*found];

  std::vector<std::pair<std::size_t, double>> face;
  double mass = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (loc.barycentric[i] > kFaceTolerance) {
      face.emplace_back(ids[i], loc.barycentric[i]);
      mass += loc.barycentric[i];
    }
  }
  if (face.size() == ids.size()) return {*found, std::move(loc.barycentric)};

  // p lies on a proper face; every cell containing that face contains p with
  // the same weights on the face, so pick the lowest-indexed one.
  std::size_t pivot = face.front().first;
  for (const auto& [v, w] : face) {
    if (t.cells_of(v).size() < t.cells_of(pivot).size()) pivot = v;
  }
  std::size_t best = *found;
  for (std::size_t c : t.cells_of(pivot)) {
    if (c >= best) continue;
    const auto& cand = t.cells()[c];
    const bool has_face = std::all_of(face.begin(), face.end(), [&](const auto& fw) {
      return std::find(cand.begin(), cand.end(), fw.first) != cand.end();
    });
    if (has_face) best = c;
  }
  const auto& cell = t.cells()[best];
  CellLocation out{best, std::vector<double>(cell.size(), 0.0)};
  for (std::size_t i = 0; i < cell.size(); ++i) {
    for (const auto& [v, w] : face) {
      if (v == cell[i]) out.barycentric[i] = w / mass;
    }
  }
  return out;
}

std::vector<std::size_t> star_vertices(const Triangulation& t, std::size_t v) {
  std::vector<std::size_t> out;
  for (std::size_t c : t.cells_of(v)) {
    const auto& ids = t.cells()[c];
    out.insert(out.end(), ids.begin(), ids.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace dfcast
