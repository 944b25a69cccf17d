#include "haloflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "haloflow/errors.hpp"

namespace haloflow {

GlobalGrid::GlobalGrid(std::vector<std::vector<std::int64_t>> adjacency) {
  const auto n = static_cast<std::int64_t>(adjacency.size());
  offsets_.reserve(adjacency.size() + 1);
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    for (std::int64_t g : list)
      if (g < 0 || g >= n)
        throw ConfigError("neighbour index " + std::to_string(g) + " outside [0, " +
                          std::to_string(n) + ")");
    nbrs_.insert(nbrs_.end(), list.begin(), list.end());
    offsets_.push_back(nbrs_.size());
  }
}

std::span<const std::int64_t> GlobalGrid::neighbors(std::int64_t e) const {
  const auto i = static_cast<std::size_t>(e);
  return std::span<const std::int64_t>(nbrs_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::size_t GlobalGrid::max_degree() const {
  std::size_t d = 0;
  for (std::size_t i = 0; i < size(); ++i) d = std::max(d, offsets_[i + 1] - offsets_[i]);
  return d;
}

std::vector<std::vector<std::int64_t>> GlobalGrid::adjacency() const {
  std::vector<std::vector<std::int64_t>> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto nb = neighbors(static_cast<std::int64_t>(i));
    out[i].assign(nb.begin(), nb.end());
  }
  return out;
}

GlobalGrid ring_grid(std::size_t n) {
  if (n == 0) throw ConfigError("ring needs at least one element");
  std::vector<std::vector<std::int64_t>> adj(n);
  const auto m = static_cast<std::int64_t>(n);
  for (std::int64_t i = 0; i < m; ++i) adj[i] = {(i + m - 1) % m, (i + 1) % m};
  return GlobalGrid(std::move(adj));
}

namespace {

void number_tiles(std::vector<std::int64_t>& id, std::size_t width, std::size_t x0, std::size_t y0,
                  std::size_t w, std::size_t h, unsigned levels, std::int64_t& next) {
  if (levels == 0 || (w < 2 && h < 2)) {
    for (std::size_t y = y0; y < y0 + h; ++y)
      for (std::size_t x = x0; x < x0 + w; ++x) id[y * width + x] = next++;
    return;
  }
  if (w >= h) {
    const std::size_t half = w / 2;
    number_tiles(id, width, x0, y0, half, h, levels - 1, next);
    number_tiles(id, width, x0 + half, y0, w - half, h, levels - 1, next);
  } else {
    const std::size_t half = h / 2;
    number_tiles(id, width, x0, y0, w, half, levels - 1, next);
    number_tiles(id, width, x0, y0 + half, w, h - half, levels - 1, next);
  }
}

}  // namespace

GlobalGrid quad_grid(std::size_t width, std::size_t height, QuadOrdering ordering,
                     unsigned tile_levels) {
  if (width == 0 || height == 0) throw ConfigError("quad mesh needs width, height >= 1");
  const std::size_t n = width * height;
  std::vector<std::int64_t> id(n);
  if (ordering == QuadOrdering::RowMajor) {
    std::iota(id.begin(), id.end(), 0);
  } else {
    std::int64_t next = 0;
    number_tiles(id, width, 0, 0, width, height, tile_levels, next);
  }
  std::vector<std::vector<std::int64_t>> adj(n);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      auto& list = adj[id[y * width + x]];
      list.push_back(id[y * width + (x + width - 1) % width]);
      list.push_back(id[y * width + (x + 1) % width]);
      list.push_back(id[((y + height - 1) % height) * width + x]);
      list.push_back(id[((y + 1) % height) * width + x]);
      // Degenerate widths produce self or duplicate entries; drop self loops.
      const auto self = id[y * width + x];
      list.erase(std::remove(list.begin(), list.end(), self), list.end());
    }
  }
  return GlobalGrid(std::move(adj));
}

GlobalGrid random_grid(std::size_t n, std::size_t max_degree, std::uint64_t seed) {
  if (n == 0) throw ConfigError("random grid needs at least one element");
  if (max_degree == 0) throw ConfigError("random grid needs max_degree >= 1");
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw; std::uniform_real_distribution is not portable bit-for-bit.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  struct Point { double x, y; };
  std::vector<Point> pts(n);
  for (auto& p : pts) p = {unit(), unit()};

  const auto strips = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) / 4.0)));
  auto key = [strips](const Point& p) {
    const auto s = std::min(strips - 1, static_cast<std::size_t>(p.y * static_cast<double>(strips)));
    return std::make_tuple(s, (s % 2 == 0) ? p.x : -p.x, p.y);
  };
  std::sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) { return key(a) < key(b); });

  constexpr std::size_t kNearest = 4;
  struct Edge { double d2; std::size_t i, j; };
  std::vector<Edge> cand;
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      dist.emplace_back(dx * dx + dy * dy, j);
    }
    const std::size_t k = std::min(kNearest, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t m = 0; m < k; ++m)
      cand.push_back({dist[m].first, std::min(i, dist[m].second), std::max(i, dist[m].second)});
  }
  std::sort(cand.begin(), cand.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.d2, a.i, a.j) < std::tie(b.d2, b.i, b.j);
  });
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](const Edge& a, const Edge& b) { return a.i == b.i && a.j == b.j; }),
             cand.end());

  std::vector<std::vector<std::int64_t>> adj(n);
  for (const Edge& e : cand) {
    if (adj[e.i].size() >= max_degree || adj[e.j].size() >= max_degree) continue;
    adj[e.i].push_back(static_cast<std::int64_t>(e.j));
    adj[e.j].push_back(static_cast<std::int64_t>(e.i));
  }
  return GlobalGrid(std::move(adj));
}

}  // namespace haloflow
