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

#ifndef DFCAST_SIMPLEX_H_
#define DFCAST_SIMPLEX_H_

// Geometry of the probability simplex over a finite outcome space: probability
// vectors, distances, and the Kuhn/Freudenthal edgewise subdivision.
//
// Lattice points of the order-k subdivision are stored in tail-sum
// coordinates: for p in the simplex over M outcomes, y_j = k * (p_{j+1} + ... +
// p_{M-1}) for j = 0..M-2, so that k >= y_0 >= y_1 >= ... >= y_{M-2} >= 0.
// In these coordinates the subdivision is the Freudenthal triangulation of the
// unit cube grid restricted to the ordered region.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace dfcast {

// Largest outcome-space size the triangulation code accepts.
inline constexpr std::size_t kMaxOutcomes = 8;

// A point of the probability simplex. Always nonnegative and normalized.
class ProbVector {
 public:
  ProbVector() = default;

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  const std::vector<double>& values() const { return weights_; }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  friend ProbVector make_prob_vector(std::span<const double> raw);
  explicit ProbVector(std::vector<double> w) : weights_(std::move(w)) {}

  std::vector<double> weights_;
};

// Clamps entries in [-1e-9, 0) to zero and renormalizes.
// Throws kNegativeMass for entries below -1e-9, kZeroMass if the sum is not
// positive.
ProbVector make_prob_vector(std::span<const double> raw);
inline ProbVector make_prob_vector(std::initializer_list<double> raw) {
  return make_prob_vector(std::span<const double>(raw.begin(), raw.size()));
}

ProbVector point_mass(std::size_t outcomes, std::size_t index);
ProbVector uniform_prob_vector(std::size_t outcomes);

// Half the L1 distance; the canonical metric on the simplex.
double tv_distance(const ProbVector& p, const ProbVector& q);
// Reporting only.
double euclidean_distance(const ProbVector& p, const ProbVector& q);
// Largest pairwise tv_distance; 0 for fewer than two points.
double tv_diameter(std::span<const ProbVector> points);

using Lattice = std::vector<std::int64_t>;

// A cell of the order-k grid: lower corner `base` (non-increasing, entries in
// [0, k-1]) plus the order in which coordinates are incremented to walk from
// the first vertex to the last.
struct CellKey {
  Lattice base;
  std::vector<int> steps;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

// The order-k edgewise subdivision, never materialized. Every operation is
// local, so orders far beyond what fits in memory are usable.
class FreudenthalGrid {
 public:
  FreudenthalGrid(std::size_t outcomes, std::int64_t order);

  std::size_t outcomes() const { return outcomes_; }
  std::int64_t order() const { return order_; }

  struct Location {
    CellKey cell;
    // Aligned with cell_vertices(cell).
    std::vector<double> barycentric;
  };

  // Deterministic: ties in the fractional parts are broken by coordinate index.
  Location locate(const ProbVector& p) const;

  std::vector<Lattice> cell_vertices(const CellKey& cell) const;
  ProbVector point(const Lattice& y) const;
  bool contains(const CellKey& cell) const;

  // The 2^(M-1) cells of the order-2k grid that tile `cell`.
  std::vector<CellKey> refine(const CellKey& cell) const;

 private:
  std::size_t outcomes_;
  std::int64_t order_;
};

struct TriangulationLimits {
  std::size_t max_vertices = 2'000'000;
  std::size_t max_outcomes = kMaxOutcomes;

  // Reads DF_MAX_VERTICES when set.
  static TriangulationLimits from_env();
};

// C(k+M-1, M-1), saturating at SIZE_MAX.
std::size_t lattice_point_count(std::size_t outcomes, std::int64_t order);
// k^(M-1), saturating at SIZE_MAX.
std::size_t cell_count(std::size_t outcomes, std::int64_t order);

// Materialized order-k subdivision: vertex list, cells as M-tuples of vertex
// indices, and the vertex-to-cells adjacency.
class Triangulation {
 public:
  std::size_t outcomes() const { return grid_.outcomes(); }
  std::int64_t order() const { return grid_.order(); }
  const FreudenthalGrid& grid() const { return grid_; }

  const std::vector<ProbVector>& vertices() const { return vertices_; }
  const std::vector<Lattice>& lattice() const { return lattice_; }
  const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }
  std::span<const std::size_t> cells_of(std::size_t vertex) const;
  const CellKey& cell_key(std::size_t cell) const { return keys_[cell]; }

  std::optional<std::size_t> find_cell(const CellKey& key) const;
  std::optional<std::size_t> find_vertex(const Lattice& y) const;

 private:
  friend Triangulation edgewise_subdivision(std::size_t, std::int64_t,
                                            const TriangulationLimits&);
  explicit Triangulation(FreudenthalGrid grid) : grid_(std::move(grid)) {}

  FreudenthalGrid grid_;
  std::vector<ProbVector> vertices_;
  std::vector<Lattice> lattice_;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<CellKey> keys_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::map<Lattice, std::size_t> vertex_index_;
  std::map<CellKey, std::size_t> cell_index_;
};

// Throws kSizeOverflow if the vertex count exceeds limits.max_vertices.
Triangulation edgewise_subdivision(std::size_t outcomes, std::int64_t order,
                                   const TriangulationLimits& limits = {});

struct CellLocation {
  std::size_t cell;
  // Aligned with cells()[cell].
  std::vector<double> barycentric;
};

// Points on a shared face resolve to the lowest-indexed cell containing them.
CellLocation locate_cell(const Triangulation& t, const ProbVector& p);

// Sorted vertex indices sharing a cell with v, v included.
std::vector<std::size_t> star_vertices(const Triangulation& t, std::size_t v);

}  // namespace dfcast

#endif  // DFCAST_SIMPLEX_H_
