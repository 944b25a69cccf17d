#include <doctest.h>

#include <random>

#include "haloflow/errors.hpp"
#include "haloflow/halo.hpp"
#include "haloflow/topology.hpp"

using namespace haloflow;

namespace {

// Independent oracle: neighbour mean on the undistributed grid.
std::vector<double> global_step(const GlobalGrid& g, const std::vector<double>& in) {
  std::vector<double> out(in.size());
  for (std::size_t e = 0; e < in.size(); ++e) {
    const auto nb = g.neighbors(static_cast<std::int64_t>(e));
    if (nb.empty()) {
      out[e] = in[e];
      continue;
    }
    double sum = 0.0;
    for (std::int64_t n : nb) sum += in[static_cast<std::size_t>(n)];
    out[e] = sum / static_cast<double>(nb.size());
  }
  return out;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<double> distributed(const GlobalGrid& g, std::uint32_t ranks, const std::vector<double>& init,
                                int steps, OverlapMode mode, ExecMode exec) {
  const Partition part = partition_block(g, ranks);
  Router router(ranks);
  const HaloPlan plan = build_plan(part, router, exec);
  Fields f = scatter_global(part, init);
  ExchangeOptions opt;
  opt.mode = exec;
  for (int s = 0; s < steps; ++s) stencil_step(f, g, part, plan, router, mode, opt);
  CHECK(router.drained());
  return gather_global(part, f);
}

std::vector<std::uint32_t> slots_of(const Partition& p, std::uint32_t rank, std::vector<std::int64_t> globals) {
  std::vector<std::uint32_t> out;
  for (auto g : globals) out.push_back(*p.local_index(rank, g));
  return out;
}

}  // namespace

TEST_CASE("ring of eight on two ranks") {
  const GlobalGrid g = ring_grid(8);
  const Partition p = partition_block(g, 2);
  Router router(2);
  const HaloPlan plan = build_plan(p, router);
  CHECK(plan.rank[0].send_index[1] == slots_of(p, 0, {0, 3}));
  CHECK(plan.rank[1].recv_slot[0] == slots_of(p, 1, {0, 3}));
  CHECK(plan.rank[0].recv_slot[1] == slots_of(p, 0, {4, 7}));
  CHECK(plan.rank[0].send_counts == std::vector<std::uint32_t>{0, 2});
  CHECK(plan.rank[0].boundary == std::vector<std::uint32_t>{0, 3});
  CHECK(plan.rank[0].interior == std::vector<std::uint32_t>{1, 2});
  CHECK(plan.halo_bytes(8).at(0, 1) == 16);
  CHECK(router.drained());

  Fields f = scatter_global(p, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
  exchange(f, plan, router);
  // ghosts sorted by (owner, global): 4 then 7
  CHECK(std::vector<double>(f[0].ghosts().begin(), f[0].ghosts().end()) == std::vector<double>{4, 7});
  CHECK(std::vector<double>(f[1].ghosts().begin(), f[1].ghosts().end()) == std::vector<double>{0, 3});
  CHECK(f[0].ghosts_valid);
}

TEST_CASE("single rank has an empty plan") {
  const Partition p = partition_block(ring_grid(5), 1);
  Router router(1);
  const HaloPlan plan = build_plan(p, router);
  CHECK(plan.rank[0].ghost_count == 0);
  CHECK(plan.rank[0].send_index[0].empty());
  CHECK(plan.rank[0].interior.size() == 5);
}

TEST_CASE("plans are idempotent and cached per partition") {
  const GlobalGrid g = random_grid(150, 8, 3);
  const Partition p = partition_block(g, 4);
  Router router(4);
  const HaloPlan a = build_plan(p, router);
  const HaloPlan b = build_plan(p, router, ExecMode::RoundBased);
  CHECK(a == b);
  PlanCache cache;
  CHECK(&cache.get(p, router) == &cache.get(p, router));
  CHECK(cache.builds() == 1);
  const Partition q = partition_block(g, 4);
  cache.get(q, router);
  CHECK(cache.builds() == 2);
}

TEST_CASE("pack gathers requested owned values in order") {
  const Partition p = partition_block(ring_grid(8), 2);
  Router router(2);
  const HaloPlan plan = build_plan(p, router);
  Fields f = scatter_global(p, std::vector<double>{10, 0, 0, 30, 0, 0, 0, 0});
  PackAudit audit;
  CHECK(pack(f[0], plan, 1, &audit) == std::vector<double>{10, 30});
  CHECK(audit.reads == 2);
  CHECK(audit.mismatched_calls == 0);
  CHECK(pack(f[0], plan, 0).empty());
}

TEST_CASE("unpack rejects a wrong-length buffer and leaves the field alone") {
  const Partition p = partition_block(ring_grid(8), 2);
  Router router(2);
  const HaloPlan plan = build_plan(p, router);
  Fields f = scatter_global(p, std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
  const std::vector<double> before(f[0].values().begin(), f[0].values().end());
  const std::vector<double> bad{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(unpack(f[0], plan, 1, bad), ProtocolError);
  CHECK(std::vector<double>(f[0].values().begin(), f[0].values().end()) == before);
}

TEST_CASE("setup detects corrupt ownership") {
  const GlobalGrid g = ring_grid(8);
  const Partition good = partition_block(g, 2);
  std::vector<RankDomain> d{good.domain(0), good.domain(1)};
  for (ExecMode m : {ExecMode::Threaded, ExecMode::RoundBased}) {
    SUBCASE("ghost claims the wrong owner") {
      auto bad = d;
      bad[0].ghosts = {{3, 1}, {4, 1}};
      bad[0].owned = {0, 1, 2};
      Router router(2);
      CHECK_THROWS_AS(build_plan(Partition(good.owners(), bad), router, m), ProtocolError);
    }
  }
}

TEST_CASE("distributed stencil matches the global oracle bit for bit") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const GlobalGrid g = random_grid(257, 8, seed);
    const auto init = random_values(g.size(), seed + 100);
    std::vector<double> expect = init;
    for (int s = 0; s < 5; ++s) expect = global_step(g, expect);
    for (std::uint32_t P : {1u, 2u, 3u, 4u, 8u})
      for (OverlapMode m : {OverlapMode::None, OverlapMode::MaskArray, OverlapMode::IndirectionArray})
        for (ExecMode e : {ExecMode::Threaded, ExecMode::RoundBased}) {
          CAPTURE(P);
          CHECK(distributed(g, P, init, 5, m, e) == expect);
        }
  }
}

TEST_CASE("isolated elements keep their value") {
  const GlobalGrid g(std::vector<std::vector<std::int64_t>>{{}, {2}, {1}});
  CHECK(distributed(g, 2, {5.0, 1.0, 3.0}, 1, OverlapMode::MaskArray, ExecMode::Threaded) ==
        std::vector<double>{5.0, 3.0, 1.0});
}

TEST_CASE("pack reads only what it sends") {
  const GlobalGrid g = quad_grid(16, 16, QuadOrdering::Tiled);
  const Partition p = partition_block(g, 4);
  Router router(4);
  const HaloPlan plan = build_plan(p, router);
  Fields f = scatter_global(p, random_values(g.size(), 5));
  PackAudit audit;
  ExchangeOptions opt;
  opt.audit = &audit;
  for (int s = 0; s < 3; ++s) stencil_step(f, g, p, plan, router, OverlapMode::IndirectionArray, opt);
  CHECK(audit.calls > 0);
  CHECK(audit.reads == audit.packed);
  CHECK(audit.mismatched_calls == 0);
}

TEST_CASE("host staging costs more than direct transfer") {
  const GlobalGrid g = quad_grid(64, 64, QuadOrdering::Tiled);
  const Partition p = partition_block(g, 4);
  Router router(4);
  const HaloPlan plan = build_plan(p, router);
  const StagingCost c = staged_vs_direct_cost(p, plan, 1024, preset({PresetKind::Dgx1V}),
                                              RankMap::round_robin(4, 8), SimConfig{});
  CHECK(c.staged_s > c.direct_s);
  CHECK(c.direct_s > 0.0);
}

TEST_CASE("overlap mode names") {
  CHECK(parse_overlap("mask") == OverlapMode::MaskArray);
  CHECK(to_string(OverlapMode::IndirectionArray) == "indirection_array");
  CHECK_THROWS_AS(parse_overlap("bogus"), ConfigError);
}
