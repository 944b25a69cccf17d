#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "haloflow/collectives.hpp"
#include "haloflow/errors.hpp"

using namespace haloflow;

namespace {

SimConfig no_latency() {
  SimConfig c;
  c.alpha_intra = 0.0;
  c.alpha_inter = 0.0;
  return c;
}

SizeMatrix random_sizes(std::mt19937_64& rng, std::uint32_t p) {
  std::uniform_int_distribution<std::int64_t> size(0, 50'000'000);
  std::bernoulli_distribution zero(0.2);
  SizeMatrix m(p);
  for (std::uint32_t i = 0; i < p; ++i)
    for (std::uint32_t j = 0; j < p; ++j) m.set(i, j, zero(rng) ? 0 : size(rng));
  return m;
}

}  // namespace

TEST_CASE("rotated issue order") {
  CHECK(issue_order(ScheduleKind::RotatedConcurrent, 4, 1) == std::vector<std::uint32_t>{1, 2, 3, 0});
  CHECK(issue_order(ScheduleKind::StageSerialized, 4, 1) == std::vector<std::uint32_t>{2, 3, 0, 1});
  CHECK(issue_order(ScheduleKind::PairwiseXor, 4, 1) == std::vector<std::uint32_t>{1, 0, 3, 2});
  CHECK(issue_order(ScheduleKind::LinearSequential, 4, 3) == std::vector<std::uint32_t>{0, 1, 2, 3});
}

TEST_CASE("stage serialized layout") {
  const auto flows = build_alltoall(ScheduleKind::StageSerialized, SizeMatrix(4, 100));
  std::map<std::uint32_t, std::vector<Flow>> phases;
  for (const Flow& f : flows) phases[f.phase].push_back(f);
  REQUIRE(phases.size() == 4);
  for (std::uint32_t k = 0; k < 3; ++k) {
    REQUIRE(phases[k].size() == 4);
    for (const Flow& f : phases[k]) CHECK(f.dst_rank == (f.src_rank + k + 1) % 4);
  }
  for (const Flow& f : phases[3]) CHECK(f.src_rank == f.dst_rank);
}

TEST_CASE("phase shapes per schedule") {
  const SizeMatrix s(8, 1);
  auto count_phases = [&](ScheduleKind k) {
    std::set<std::uint32_t> p;
    for (const Flow& f : build_alltoall(k, s)) p.insert(f.phase);
    return p.size();
  };
  CHECK(count_phases(ScheduleKind::RotatedConcurrent) == 1);
  CHECK(count_phases(ScheduleKind::StageSerialized) == 8);
  CHECK(count_phases(ScheduleKind::PairwiseXor) == 8);
  CHECK(count_phases(ScheduleKind::LinearSequential) == 64);
  for (const Flow& f : build_alltoall(ScheduleKind::PairwiseXor, s)) {
    CHECK(f.phase == (f.src_rank ^ f.dst_rank));
    if (f.src_rank == f.dst_rank) CHECK(f.phase == 0);
  }
}

TEST_CASE("single rank is only a self copy") {
  for (ScheduleKind k : all_schedules()) {
    const auto flows = build_alltoall(k, SizeMatrix(1, 10));
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].src_rank == 0);
    CHECK(flows[0].dst_rank == 0);
  }
  const auto reps = compare_schedules(fully_connected(1), RankMap({0}), SizeMatrix(1, 1000), all_schedules(), {});
  for (const auto& r : reps) CHECK(r.makespan == reps.front().makespan);
}

TEST_CASE("pairwise xor needs a power of two") {
  CHECK_THROWS_AS(build_alltoall(ScheduleKind::PairwiseXor, SizeMatrix(6, 1)), ConfigError);
  CHECK_THROWS_AS(build_alltoall(ScheduleKind::RotatedConcurrent, SizeMatrix(0)), ConfigError);
  CHECK_THROWS_AS(parse_schedule("ring"), ConfigError);
  CHECK(parse_schedule("rotated") == ScheduleKind::RotatedConcurrent);
  CHECK_THROWS_AS(SizeMatrix(2, -1), ConfigError);
}

TEST_CASE("coverage and stage legality on random matrices") {
  std::mt19937_64 rng(11);
  for (std::uint32_t p : {1u, 2u, 3u, 4u, 5u, 8u}) {
    const SizeMatrix m = random_sizes(rng, p);
    for (ScheduleKind k : all_schedules()) {
      if (k == ScheduleKind::PairwiseXor && (p & (p - 1))) continue;
      const auto flows = build_alltoall(k, m);
      std::map<std::pair<std::uint32_t, std::uint32_t>, int> seen;
      for (const Flow& f : flows) {
        CHECK(f.bytes == m.at(f.src_rank, f.dst_rank));
        CHECK(f.bytes > 0);
        ++seen[{f.src_rank, f.dst_rank}];
      }
      std::size_t positive = 0;
      for (std::uint32_t i = 0; i < p; ++i)
        for (std::uint32_t j = 0; j < p; ++j) positive += m.at(i, j) > 0;
      CHECK(seen.size() == positive);
      for (const auto& [pair, n] : seen) CHECK(n == 1);
      for (std::size_t i = 0; i < flows.size(); ++i) CHECK(flows[i].id == i);

      if (k == ScheduleKind::StageSerialized) {
        std::map<std::uint32_t, std::set<std::uint32_t>> srcs, dsts;
        for (const Flow& f : flows) {
          CHECK(srcs[f.phase].insert(f.src_rank).second);
          CHECK(dsts[f.phase].insert(f.dst_rank).second);
        }
      }
    }
  }
}

TEST_CASE("schedule comparison on a four-device clique") {
  const auto reps = compare_schedules(fully_connected(4), RankMap::round_robin(4, 4), SizeMatrix(4, 100'000'000),
                                      {ScheduleKind::StageSerialized, ScheduleKind::RotatedConcurrent}, no_latency());
  const double serialized = 3 * (0.1 / 25) + 0.1 / 800;
  CHECK(reps[0].makespan == doctest::Approx(serialized).epsilon(1e-12));
  CHECK(reps[1].makespan == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(reps[0].phase_seconds.size() == 4);
  // per-pair dedicated links: rotated <= serialized / (P - 2)
  CHECK(reps[1].makespan <= reps[0].makespan / 2);
}

TEST_CASE("host staging is slower for every schedule on an island") {
  SimConfig staged = no_latency();
  staged.staging = Staging::HostStaged;
  const Topology t = preset({PresetKind::Dgx1V});
  const RankMap rm = RankMap::round_robin(4, 8);
  const auto direct = compare_schedules(t, rm, SizeMatrix(4, 10'000'000), all_schedules(), no_latency());
  const auto hosted = compare_schedules(t, rm, SizeMatrix(4, 10'000'000), all_schedules(), staged);
  for (std::size_t i = 0; i < direct.size(); ++i) CHECK(hosted[i].makespan > direct[i].makespan);
}

TEST_CASE("scaling sizes up never shortens a schedule") {
  std::mt19937_64 rng(5);
  const Topology t = preset({PresetKind::Dgx1V});
  const RankMap rm = RankMap::round_robin(8, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const SizeMatrix m = random_sizes(rng, 8);
    for (ScheduleKind k : all_schedules()) {
      const double base = simulate(t, rm, build_alltoall(k, m), {}).makespan;
      for (double f : {1.0, 1.5, 3.0}) CHECK(simulate(t, rm, build_alltoall(k, m.scaled(f)), {}).makespan >= base);
    }
  }
}
