// Flow-level (fluid) network simulator.
//
// Flows inside a phase run concurrently. Every resource (one direction of a
// link, a host's memory for staging copies, a device's memory for self
// copies) splits its capacity equally among the flows currently using it; a
// flow moves at the minimum share along its current segment. Shares are
// recomputed whenever a flow starts, changes segment or finishes. Phase p+1
// starts when the last flow of phase p has finished.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "haloflow/topology.hpp"

namespace haloflow {

enum class Staging { DeviceDirect, HostStaged };

/// What the endpoints of a flow are. Host copies move a rank's buffer between
/// its device and the device's host bridge; src_rank == dst_rank for those.
enum class FlowKind : std::uint8_t { RankToRank, DeviceToHost, HostToDevice };

struct Flow {
  std::uint64_t id = 0;
  std::uint32_t src_rank = 0;
  std::uint32_t dst_rank = 0;
  std::int64_t bytes = 0;
  std::uint32_t phase = 0;
  std::uint32_t issue = 0;  // position in the source rank's issue order
  FlowKind kind = FlowKind::RankToRank;
};

struct SimConfig {
  double alpha_intra = 1e-6;  // seconds per message, paths inside a server
  double alpha_inter = 10e-6; // seconds per message, paths through a NIC
  Staging staging = Staging::DeviceDirect;
  double host_mem_bw = kHostMemBw;  // staging copy bandwidth per host
  bool record_events = false;
};

enum class SimEventKind : std::uint8_t { Start, Rate, SegmentDone, Finish };

struct SimEvent {
  double time = 0.0;
  SimEventKind kind = SimEventKind::Start;
  std::uint64_t flow_id = 0;
  std::string resource;  // empty for Start/Finish
  double rate = 0.0;     // bytes/s on `resource` from `time` until the next event
};

struct ResourceUsage {
  std::string name;
  double capacity = 0.0;
  double peak_utilization = 0.0;  // in [0,1]
};

struct SimResult {
  std::vector<double> flow_start;      // transfer start (after latency), input order
  std::vector<double> flow_finish;     // input order
  std::vector<double> flow_delivered;  // bytes integrated over the final segment
  std::vector<double> phase_finish;
  double makespan = 0.0;
  std::vector<double> busy_fraction;     // per rank, compute + communication activity
  std::vector<double> compute_fraction;  // per rank, compute only
  std::vector<ResourceUsage> links;      // one entry per link direction
  std::vector<SimEvent> events;          // only when SimConfig::record_events
};

struct TimestepScenario {
  std::vector<double> compute_seconds;  // one per rank
  std::vector<Flow> flows;
  bool barrier_at_end = true;
};

SimResult simulate(const Topology& t, const RankMap& rm, const std::vector<Flow>& flows,
                   const SimConfig& cfg);

/// Ranks compute first; a rank's phase-0 flows are released when its compute
/// ends. With a barrier every rank's activity is measured against the global
/// step time, otherwise against its own finish time.
SimResult simulate_timestep(const Topology& t, const RankMap& rm, const TimestepScenario& ts,
                            const SimConfig& cfg);

/// CSV: time,event,flow_id,link,rate
void write_event_log_csv(std::ostream& os, const std::vector<SimEvent>& events);

std::string to_string(SimEventKind k);
std::string to_string(Staging s);
Staging parse_staging(const std::string& s);

}  // namespace haloflow
