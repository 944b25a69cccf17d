#include <doctest.h>

#include <sstream>
#include <string>

#include "haloflow/app.hpp"
#include "haloflow/errors.hpp"
#include "haloflow/scenario.hpp"

using namespace haloflow;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::string render(const Report& r, const std::string& format = "csv") {
  std::ostringstream os;
  write_report(os, r, format);
  return os.str();
}

const std::string kDemo = std::string(HALOFLOW_SOURCE_DIR) + "/scenarios/demo.json";

}  // namespace

TEST_CASE("minimal scenario takes defaults") {
  const Scenario s = parse_scenario(json{{"schema", 1}});
  CHECK(s.ranks == 4);
  CHECK(s.output.format == "csv");
  CHECK_FALSE(s.alltoall.has_value());
}

TEST_CASE("strict parsing reports the json path") {
  CHECK(error_of(json{{"schema", 2}}).find("$.schema") != std::string::npos);
  CHECK(error_of(json::object()).find("missing field 'schema'") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"bogus", 1}}) == "unknown field $.bogus");
  CHECK(error_of(json{{"schema", 1}, {"sim", {{"alpha_intra", -1}}}}).find("$.sim.alpha_intra") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"sim", {{"sharing", "max_min"}}}}).find("$.sim.sharing") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"workload", {{"halo", {{"stepz", 1}}}}}}) ==
        "unknown field $.workload.halo.stepz");
  CHECK(error_of(json{{"schema", 1}, {"workload", {{"alltoall", {{"schedules", {"round_robin"}}}}}}})
            .find("$.workload.alltoall.schedules[0]") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"ranks", 0}}).find("$.ranks") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"topology", "dgx9"}}).find("$.topology") != std::string::npos);
  CHECK(error_of(json{{"schema", 1}, {"output", {{"format", "xml"}}}}).find("$.output.format") != std::string::npos);
}

TEST_CASE("topology strings and objects") {
  CHECK(topology_from_json("dgx2").device_count() == 16);
  CHECK(topology_from_json("dgx1v:2").device_count() == 16);
  CHECK(topology_from_json("clique:3").device_count() == 3);
  CHECK(topology_from_json("fattree:4x2").device_count() == 8);
  CHECK(topology_from_json(json{{"preset", "dgx1v"}, {"servers", 2}}).device_count() == 16);
  const json custom = json::parse(R"({"custom": {
      "name": "pair", "nodes": ["gpu0", "gpu1"],
      "links": [{"a": "gpu0", "b": "gpu1", "gbps_per_dir": 10, "lanes": 2}]}})");
  const Topology t = topology_from_json(custom);
  CHECK(t.device_count() == 2);
  CHECK(t.route_bandwidth(0, 1) == 20e9);
  CHECK_THROWS_AS(topology_from_json(json{{"custom", {{"nodes", {"cpu0"}}}}}), ValidationError);
}

TEST_CASE("grid fixtures") {
  CHECK(grid_fixture("ring8", 1).size() == 8);
  CHECK(grid_fixture("tiled16x8", 1).size() == 128);
  CHECK(grid_fixture("random100d4", 3).max_degree() <= 4);
  CHECK(grid_fixture("random100", 3) == grid_fixture("random100", 3));
  CHECK_THROWS_AS(grid_fixture("hex10", 1), ConfigError);
}

TEST_CASE("uniform message sizes include the self copy") {
  const SizeMatrix m = MessageSizes{100, std::nullopt}.resolve(3);
  CHECK(m.at(1, 1) == 100);
  CHECK(m.at(0, 2) == 100);
}

TEST_CASE("rank maps are checked against the machine") {
  Scenario s;
  s.ranks = 2;
  s.rank_map = std::vector<DeviceId>{0, 12};
  CHECK_THROWS_AS(s.resolve_rank_map(topology_from_json("dgx1v")), TopologyError);
  s.rank_map = std::vector<DeviceId>{0};
  CHECK_THROWS_AS(s.resolve_rank_map(topology_from_json("dgx1v")), ConfigError);
}

TEST_CASE("demo scenario runs and is reproducible") {
  const Scenario s = load_scenario(kDemo);
  const std::string a = render(run_report(s));
  const std::string b = render(run_report(load_scenario(kDemo)));
  CHECK(a == b);
  CHECK(a.find("# alltoall") != std::string::npos);
  CHECK(a.find("92.640000000000001") != std::string::npos);
  const Report r = run_report(s);
  for (const auto& row : r.table("halo_checksums").rows) CHECK(row[6] == true);
  const json j = json::parse(render(r, "json"));
  CHECK(j["scenario"] == "demo");
  CHECK(j["tables"]["power_trace"].back()["average_watts"] == 192.75);
}

TEST_CASE("halo report matches one rank") {
  Scenario s;
  s.halo = HaloWorkload{"ring8", 3, OverlapMode::MaskArray, 8, 0.0};
  s.ranks = 2;
  const Report r = run_halo(s);
  for (const auto& row : r.table("halo_checksums").rows) CHECK(row[6] == true);
}

TEST_CASE("sweep imbalance and speedups") {
  const auto loads = imbalanced_loads(1.6, 16, 0.25);
  CHECK(loads.front() == doctest::Approx(0.075).epsilon(1e-12));
  CHECK(loads.back() == doctest::Approx(0.125).epsilon(1e-12));
  Scenario s;
  s.sweep.emplace();
  const Report r = run_sweep(s);
  const auto& rows = r.table("sweep").rows;
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][3] == 1.0);
  CHECK(rows[2][3].get<double>() <= 4.0);
}

TEST_CASE("seeded values are reproducible and in range") {
  const auto a = seeded_values(100, 5);
  CHECK(a == seeded_values(100, 5));
  CHECK(a != seeded_values(100, 6));
  for (double v : a) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}
