#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "haloflow/collectives.hpp"
#include "haloflow/errors.hpp"
#include "haloflow/netsim.hpp"
#include "haloflow/topology.hpp"

using namespace haloflow;

namespace {

Topology two_devices(double bw) {
  return Topology("pair", {{NodeKind::Device, 0}, {NodeKind::Device, 1}},
                  {Link{{NodeKind::Device, 0}, {NodeKind::Device, 1}, bw, 1}});
}

SimConfig no_latency() {
  SimConfig c;
  c.alpha_intra = 0.0;
  c.alpha_inter = 0.0;
  return c;
}

Flow flow(std::uint64_t id, std::uint32_t src, std::uint32_t dst, std::int64_t bytes, std::uint32_t phase = 0) {
  Flow f;
  f.id = id;
  f.src_rank = src;
  f.dst_rank = dst;
  f.bytes = bytes;
  f.phase = phase;
  return f;
}

// Each batch of consecutive rate events is the complete allocation until the next event.
double worst_overload(const SimResult& r) {
  std::map<std::string, double> cap;
  for (const auto& l : r.links) cap[l.name] = l.capacity;
  double worst = 0.0;
  std::map<std::string, double> batch;
  auto close = [&] {
    for (const auto& [name, sum] : batch)
      if (cap.count(name)) worst = std::max(worst, sum / cap[name]);
    batch.clear();
  };
  for (const auto& e : r.events) {
    if (e.kind == SimEventKind::Rate) batch[e.resource] += e.rate;
    else close();
  }
  close();
  return worst;
}

std::vector<Flow> random_flows(std::mt19937_64& rng, std::uint32_t ranks, std::size_t n) {
  std::uniform_int_distribution<std::uint32_t> rank(0, ranks - 1);
  std::uniform_int_distribution<std::int64_t> size(0, 400'000'000);
  std::uniform_int_distribution<std::uint32_t> phase(0, 2);
  std::vector<Flow> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(flow(i, rank(rng), rank(rng), size(rng), phase(rng)));
  // keep phases contiguous
  for (std::uint32_t p = 0; p < 3; ++p) out.push_back(flow(n + p, 0, 1 % ranks, 1000, p));
  return out;
}

}  // namespace

TEST_CASE("single flow takes bytes over bandwidth") {
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}), {flow(0, 0, 1, 1'000'000'000)}, no_latency());
  CHECK(r.makespan == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("single flow time is alpha plus bytes over route bandwidth") {
  const Topology t = preset({PresetKind::Dgx1V});
  SimConfig cfg;
  for (DeviceId d : {1u, 5u, 7u}) {
    const SimResult r = simulate(t, RankMap::round_robin(8, 8), {flow(0, 0, d, 300'000'000)}, cfg);
    CHECK(r.flow_finish[0] == doctest::Approx(cfg.alpha_intra + 3e8 / t.route_bandwidth(0, d)).epsilon(1e-12));
  }
  const Topology two = preset({PresetKind::Dgx1V, 2});
  const SimResult r = simulate(two, RankMap::round_robin(16, 16), {flow(0, 0, 9, 300'000'000)}, cfg);
  CHECK(r.flow_finish[0] == doctest::Approx(cfg.alpha_inter + 3e8 / two.route_bandwidth(0, 9)).epsilon(1e-12));
}

TEST_CASE("two flows on one link share it equally") {
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1, 0, 1}),
                               {flow(0, 0, 1, 1'000'000'000), flow(1, 2, 3, 1'000'000'000)}, no_latency());
  CHECK(r.flow_finish[0] == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(r.flow_finish[1] == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("opposite directions do not interfere") {
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}),
                               {flow(0, 0, 1, 1'000'000'000), flow(1, 1, 0, 1'000'000'000)}, no_latency());
  CHECK(r.makespan == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("shares are recomputed when a flow finishes") {
  // 1 GB and 0.5 GB on a 50 GB/s link: both at 25 GB/s until 0.02 s, then the big one alone.
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}),
                               {flow(0, 0, 1, 1'000'000'000), flow(1, 0, 1, 500'000'000)}, no_latency());
  CHECK(r.flow_finish[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r.flow_finish[0] == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("dgx2 all-to-all is injection bound") {
  SizeMatrix sizes(16, 100'000'000);
  for (std::uint32_t i = 0; i < 16; ++i) sizes.set(i, i, 0);
  const SimResult r = simulate(preset({PresetKind::Dgx2}), RankMap::round_robin(16, 16),
                               build_alltoall(ScheduleKind::RotatedConcurrent, sizes), no_latency());
  CHECK(r.makespan == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("phases run back to back") {
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}),
                               {flow(0, 0, 1, 1'000'000'000, 0), flow(1, 0, 1, 1'000'000'000, 1)}, no_latency());
  CHECK(r.phase_finish[0] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r.flow_start[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(r.makespan == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(r.makespan == *std::max_element(r.phase_finish.begin(), r.phase_finish.end()));
}

TEST_CASE("zero-byte flows cost latency only") {
  SimConfig cfg;
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}), {flow(0, 0, 1, 0)}, cfg);
  CHECK(r.makespan == cfg.alpha_intra);
}

TEST_CASE("host staging is slower than device direct on an island") {
  const Topology t = preset({PresetKind::Dgx1V});
  const auto flows = build_alltoall(ScheduleKind::RotatedConcurrent, SizeMatrix(4, 100'000'000));
  SimConfig direct = no_latency(), staged = no_latency();
  staged.staging = Staging::HostStaged;
  const RankMap rm = RankMap::round_robin(4, 8);
  CHECK(simulate(t, rm, flows, staged).makespan > simulate(t, rm, flows, direct).makespan);
}

TEST_CASE("timestep busy fractions") {
  const Topology t = fully_connected(4);
  const RankMap rm = RankMap::round_robin(4, 4);
  SUBCASE("balanced") {
    const SimResult r = simulate_timestep(t, rm, {{1, 1, 1, 1}, {}, true}, no_latency());
    CHECK(r.makespan == 1.0);
    for (double b : r.busy_fraction) CHECK(b == 1.0);
  }
  SUBCASE("barrier wait") {
    const SimResult r = simulate_timestep(t, rm, {{2, 1, 1, 1}, {}, true}, no_latency());
    CHECK(r.makespan == 2.0);
    CHECK(r.busy_fraction == std::vector<double>{1.0, 0.5, 0.5, 0.5});
  }
  SUBCASE("no barrier measures each rank against itself") {
    const SimResult r = simulate_timestep(t, rm, {{2, 1, 1, 1}, {}, false}, no_latency());
    CHECK(r.busy_fraction == std::vector<double>{1.0, 1.0, 1.0, 1.0});
  }
  SUBCASE("zero compute reduces to simulate") {
    const auto flows = build_alltoall(ScheduleKind::RotatedConcurrent, SizeMatrix(4, 100'000'000));
    CHECK(simulate_timestep(t, rm, {{0, 0, 0, 0}, flows, true}, no_latency()).makespan ==
          simulate(t, rm, flows, no_latency()).makespan);
  }
  SUBCASE("flows wait for their source's compute") {
    const SimResult r =
        simulate_timestep(t, rm, {{0.5, 0, 0, 0}, {flow(0, 0, 1, 250'000'000)}, true}, no_latency());
    CHECK(r.flow_start[0] == 0.5);
    CHECK(r.makespan == doctest::Approx(0.51).epsilon(1e-12));
    CHECK(r.compute_fraction[0] == doctest::Approx(0.5 / 0.51).epsilon(1e-12));
  }
}

TEST_CASE("invalid flow sets") {
  const Topology t = two_devices(1e9);
  const RankMap rm({0, 1});
  CHECK_THROWS_AS(simulate(t, rm, {flow(0, 0, 5, 10)}, {}), SimulationError);
  CHECK_THROWS_AS(simulate(t, rm, {flow(0, 0, 1, -1)}, {}), SimulationError);
  CHECK_THROWS_AS(simulate(t, rm, {flow(0, 0, 1, 10, 1)}, {}), SimulationError);  // phase 0 missing
  CHECK_THROWS_AS(simulate_timestep(t, rm, {{1.0}, {}, true}, {}), SimulationError);
  CHECK_THROWS_AS(simulate_timestep(t, rm, {{1.0, -1.0}, {}, true}, {}), SimulationError);
}

TEST_CASE("properties on random flow sets") {
  const Topology t = preset({PresetKind::Dgx1V, 2});
  const RankMap rm = RankMap::round_robin(16, 16);
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto flows = random_flows(rng, 16, 60);
    SimConfig cfg = no_latency();
    cfg.record_events = true;
    cfg.staging = trial % 2 ? Staging::HostStaged : Staging::DeviceDirect;
    const SimResult r = simulate(t, rm, flows, cfg);

    CHECK(worst_overload(r) <= 1.0 + 1e-12);
    for (const auto& l : r.links) CHECK(l.peak_utilization <= 1.0);
    for (std::size_t i = 0; i < flows.size(); ++i) CHECK(r.flow_delivered[i] == static_cast<double>(flows[i].bytes));

    // permutation invariance
    auto shuffled = flows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    cfg.record_events = false;
    const SimResult s = simulate(t, rm, shuffled, cfg);
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      const auto it = std::find_if(flows.begin(), flows.end(), [&](const Flow& f) { return f.id == shuffled[i].id; });
      CHECK(s.flow_finish[i] == doctest::Approx(r.flow_finish[it - flows.begin()]).epsilon(1e-12));
    }
  }
}

TEST_CASE("event log csv") {
  SimConfig cfg = no_latency();
  cfg.record_events = true;
  const SimResult r = simulate(two_devices(50e9), RankMap({0, 1}), {flow(7, 0, 1, 1'000'000'000)}, cfg);
  std::ostringstream os;
  write_event_log_csv(os, r.events);
  const std::string text = os.str();
  CHECK(text.rfind("time,event,flow_id,link,rate\n", 0) == 0);
  CHECK(text.find("rate,7,gpu0->gpu1,50000000000") != std::string::npos);
  CHECK(text.find("finish,7") != std::string::npos);
}
