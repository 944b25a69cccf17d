// Unstructured grids (element adjacency graphs) and the fixture generators
// used by tests, the CLI and the benchmark.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace haloflow {

/// Element adjacency in CSR form. Neighbour lists are sorted ascending and
/// free of duplicates; the stencil sums neighbours in exactly this order.
class GlobalGrid {
 public:
  GlobalGrid() = default;
  /// Sorts and deduplicates each list; ConfigError on out-of-range indices.
  explicit GlobalGrid(std::vector<std::vector<std::int64_t>> adjacency);

  std::size_t size() const { return offsets_.size() - 1; }
  std::span<const std::int64_t> neighbors(std::int64_t e) const;
  std::size_t max_degree() const;
  std::vector<std::vector<std::int64_t>> adjacency() const;

  bool operator==(const GlobalGrid&) const = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::int64_t> nbrs_;
};

/// 1D periodic ring: element i touches i-1 and i+1.
GlobalGrid ring_grid(std::size_t n);

enum class QuadOrdering {
  RowMajor,  // id = y * width + x
  Tiled,     // recursive bisection of the longer side, tiles numbered contiguously
};

/// Periodic width x height quad mesh with 4-neighbour connectivity, numbered
/// as an unstructured grid. `tile_levels` bisections are applied for Tiled.
GlobalGrid quad_grid(std::size_t width, std::size_t height,
                     QuadOrdering ordering = QuadOrdering::RowMajor, unsigned tile_levels = 3);

/// Seeded planar-ish graph: random points in the unit square, numbered along
/// serpentine strips, joined shortest-edge-first to their nearest neighbours
/// while both endpoints have degree < max_degree.
GlobalGrid random_grid(std::size_t n, std::size_t max_degree, std::uint64_t seed);

}  // namespace haloflow
