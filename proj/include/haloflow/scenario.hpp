// Scenario files: versioned JSON describing a machine, a rank layout and the
// workloads to run on it. Parsing is strict; unknown keys are rejected with
// their JSON path.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "haloflow/collectives.hpp"
#include "haloflow/energy.hpp"
#include "haloflow/grid.hpp"
#include "haloflow/halo.hpp"
#include "haloflow/netsim.hpp"
#include "haloflow/perfmodel.hpp"
#include "haloflow/topology.hpp"

namespace haloflow {

inline constexpr int kScenarioSchema = 1;

/// Builds a machine from a string ("dgx1v", "dgx1v:2", "dgx2", "fattree:4x2",
/// "clique:4") or an object ({"preset": ...} or {"custom": {...}}).
Topology topology_from_json(const nlohmann::json& j, const std::string& path = "$.topology");

/// "ring<N>", "quad<W>x<H>", "tiled<W>x<H>", "random<N>" or "random<N>d<K>".
GlobalGrid grid_fixture(const std::string& name, std::uint64_t seed);

struct MessageSizes {
  std::optional<std::int64_t> uniform_bytes;
  std::optional<SizeMatrix> matrix;

  SizeMatrix resolve(std::uint32_t ranks) const;
};

struct AlltoallWorkload {
  std::vector<ScheduleKind> schedules = all_schedules();
  MessageSizes sizes{100'000'000, std::nullopt};
};

struct HaloWorkload {
  std::string grid = "ring8";
  std::uint32_t steps = 3;
  OverlapMode overlap = OverlapMode::None;
  std::int64_t bytes_per_element = 8;
  double compute_seconds_total = 0.0;  // split across ranks by owned count
};

struct TimestepWorkload {
  std::vector<double> compute_seconds;
  ScheduleKind schedule = ScheduleKind::RotatedConcurrent;
  MessageSizes sizes;
  bool barrier_at_end = true;
};

struct SweepWorkload {
  std::vector<nlohmann::json> topologies{nlohmann::json("dgx2")};
  std::vector<std::uint32_t> ranks{4, 8, 16};
  ScheduleKind schedule = ScheduleKind::RotatedConcurrent;
  double total_bytes = 4.0e9;           // all-to-all volume, split as total / ranks^2 per pair
  double compute_seconds_total = 0.0;   // split evenly across ranks
  std::map<std::uint32_t, double> imbalance;  // per rank count; loads spread +-f around the mean
};

struct EnergyAnchor {
  std::uint32_t ranks = 1;
  double watts = 0.0;
};

struct EnergySeriesWorkload {
  std::string grid = "tiled64x64";
  std::vector<std::uint32_t> ranks{1, 2, 4, 8};
  double compute_seconds_total = 0.02;
  std::int64_t bytes_per_element = 8;
  /// Two measured (rank count, watts) points the power model is fitted to;
  /// without them the configured model is used.
  std::vector<EnergyAnchor> anchors;
};

struct EnergyConfig {
  PowerModel model;
  std::optional<double> avg_watts;
  std::optional<double> step_seconds;
  std::optional<double> devices;
  std::optional<std::string> trace;  // CSV device,t_s,watts
  std::optional<EnergySeriesWorkload> series;
};

struct RooflineConfig {
  MachineModel machine;
  std::optional<std::string> kernels_csv;
  std::vector<KernelProfile> kernels;  // inline; fixture used when both are empty
};

struct OutputConfig {
  std::string format = "csv";
  std::optional<std::string> path;
  std::optional<std::string> svg;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  nlohmann::json topology = "dgx1v";
  std::uint32_t ranks = 4;
  std::optional<std::vector<DeviceId>> rank_map;
  SimConfig sim;
  std::optional<AlltoallWorkload> alltoall;
  std::optional<HaloWorkload> halo;
  std::optional<TimestepWorkload> timestep;
  std::optional<SweepWorkload> sweep;
  EnergyConfig energy;
  RooflineConfig roofline;
  OutputConfig output;

  RankMap resolve_rank_map(const Topology& t) const;
};

/// ValidationError (message carries the JSON path) on any schema violation.
Scenario parse_scenario(const nlohmann::json& j);
/// Relative trace and kernel CSV paths are taken relative to the scenario file.
Scenario load_scenario(const std::string& path);

}  // namespace haloflow
