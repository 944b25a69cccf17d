#include <doctest.h>

#include <algorithm>
#include <set>

#include "haloflow/errors.hpp"
#include "haloflow/grid.hpp"
#include "haloflow/partition.hpp"

using namespace haloflow;

namespace {

std::size_t edge_count(const GlobalGrid& g) {
  std::size_t n = 0;
  for (std::size_t e = 0; e < g.size(); ++e) n += g.neighbors(static_cast<std::int64_t>(e)).size();
  return n;
}

bool symmetric(const GlobalGrid& g) {
  for (std::size_t e = 0; e < g.size(); ++e)
    for (std::int64_t n : g.neighbors(static_cast<std::int64_t>(e))) {
      const auto back = g.neighbors(n);
      if (!std::binary_search(back.begin(), back.end(), static_cast<std::int64_t>(e))) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("grid construction sorts, dedups and range-checks") {
  const GlobalGrid g({{2, 1, 2}, {0}, {0}});
  CHECK(std::vector<std::int64_t>(g.neighbors(0).begin(), g.neighbors(0).end()) == std::vector<std::int64_t>{1, 2});
  CHECK(g.max_degree() == 2);
  CHECK_THROWS_AS(GlobalGrid({{3}, {}, {}}), ConfigError);
  CHECK_THROWS_AS(GlobalGrid(std::vector<std::vector<std::int64_t>>{{-1}}), ConfigError);
}

TEST_CASE("ring and quad fixtures") {
  const GlobalGrid r = ring_grid(8);
  CHECK(r.size() == 8);
  CHECK(std::vector<std::int64_t>(r.neighbors(0).begin(), r.neighbors(0).end()) == std::vector<std::int64_t>{1, 7});
  for (auto order : {QuadOrdering::RowMajor, QuadOrdering::Tiled}) {
    const GlobalGrid q = quad_grid(12, 8, order);
    CHECK(q.size() == 96);
    for (std::size_t e = 0; e < q.size(); ++e) CHECK(q.neighbors(static_cast<std::int64_t>(e)).size() == 4);
    CHECK(symmetric(q));
  }
  CHECK(edge_count(quad_grid(12, 8, QuadOrdering::Tiled)) == edge_count(quad_grid(12, 8)));
}

TEST_CASE("random grids are seeded, bounded and symmetric") {
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const GlobalGrid g = random_grid(300, 6, seed);
    CHECK(g.size() == 300);
    CHECK(g.max_degree() <= 6);
    CHECK(symmetric(g));
    CHECK(g == random_grid(300, 6, seed));
  }
  CHECK_FALSE(random_grid(300, 6, 1) == random_grid(300, 6, 2));
  CHECK(random_grid(1, 8, 1).size() == 1);
}

TEST_CASE("block partition of a ring") {
  const GlobalGrid g = ring_grid(8);
  const Partition p = partition_block(g, 2);
  CHECK(p.domain(0).owned == std::vector<std::int64_t>{0, 1, 2, 3});
  CHECK(p.domain(0).ghosts == std::vector<Ghost>{{4, 1}, {7, 1}});
  CHECK(p.domain(1).ghosts == std::vector<Ghost>{{0, 0}, {3, 0}});
  CHECK(p.local_index(0, 7) == 5u);
  CHECK(p.owned_index(0, 3) == 3u);
  CHECK_FALSE(p.owned_index(0, 4).has_value());
  CHECK_NOTHROW(p.validate(g));

  const Partition one = partition_block(g, 1);
  CHECK(one.domain(0).ghosts.empty());

  const Partition each = partition_block(g, 8);
  for (std::uint32_t r = 0; r < 8; ++r) {
    CHECK(each.domain(r).owned.size() == 1);
    CHECK(each.domain(r).ghosts.size() == 2);
  }
  CHECK_THROWS_AS(partition_block(g, 9), ConfigError);
  CHECK_THROWS_AS(partition_block(g, 0), ConfigError);
}

TEST_CASE("uneven blocks use ceil(N/P)") {
  const Partition p = partition_block(ring_grid(10), 4);
  CHECK(p.domain(0).owned.size() == 3);
  CHECK(p.domain(3).owned.size() == 1);
}

TEST_CASE("validate rejects corrupt partitions") {
  const GlobalGrid g = ring_grid(8);
  const Partition good = partition_block(g, 2);
  auto domains = std::vector<RankDomain>{good.domain(0), good.domain(1)};

  SUBCASE("ghost owned by holder") {
    auto d = domains;
    d[0].ghosts = {{4, 1}, {7, 0}};
    CHECK_THROWS_AS(Partition(good.owners(), d).validate(g), ConfigError);
  }
  SUBCASE("missing ghost") {
    auto d = domains;
    d[0].ghosts = {{4, 1}};
    CHECK_THROWS_AS(Partition(good.owners(), d).validate(g), ConfigError);
  }
  SUBCASE("owner mismatch") {
    auto owners = good.owners();
    owners[0] = 1;
    CHECK_THROWS_AS(Partition(owners, domains).validate(g), ConfigError);
  }
}

TEST_CASE("derive matches the block partitioner and copies keep identity") {
  const GlobalGrid g = random_grid(200, 8, 4);
  std::vector<std::uint32_t> owner(200);
  for (std::size_t i = 0; i < 200; ++i) owner[i] = static_cast<std::uint32_t>(i / 50);
  const Partition a = Partition::derive(g, owner, 4);
  const Partition b = partition_block(g, 4);
  CHECK(a == b);
  CHECK(a.id() != b.id());
  const Partition c = a;
  CHECK(c.id() == a.id());
  for (std::uint32_t r = 0; r < 4; ++r) {
    std::set<std::int64_t> expect;
    for (std::int64_t e : a.domain(r).owned)
      for (std::int64_t n : g.neighbors(e))
        if (owner[static_cast<std::size_t>(n)] != r) expect.insert(n);
    std::set<std::int64_t> got;
    for (const Ghost& gh : a.domain(r).ghosts) got.insert(gh.global);
    CHECK(got == expect);
  }
}
