// Interconnect graphs: devices, host bridges, switches and NICs joined by
// links with per-direction capacities, plus static single-path routing.
//
// All bandwidths are bytes/second *per direction*. Vendor figures quoted as
// bidirectional ("50 GB/s NVLink") are halved when building presets.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace haloflow {

enum class NodeKind : std::uint8_t { Device, HostBridge, Switch, Nic };

struct NodeId {
  NodeKind kind = NodeKind::Device;
  std::uint32_t index = 0;

  auto operator<=>(const NodeId&) const = default;
};

std::string node_name(NodeId n);

using DeviceId = std::uint32_t;

struct Link {
  NodeId a;
  NodeId b;
  double bw_per_dir = 0.0;  // bytes/s for one lane, one direction
  std::uint32_t lanes = 1;

  double capacity() const { return bw_per_dir * static_cast<double>(lanes); }
};

/// One traversal of a link; `forward` means a -> b.
struct Hop {
  std::size_t link = 0;
  bool forward = true;

  bool operator==(const Hop&) const = default;
};

using Route = std::vector<Hop>;

// Default capacities, bytes/s per direction.
inline constexpr double kGB = 1e9;
inline constexpr double kNvlinkVoltaLane = 25.0 * kGB;
inline constexpr double kNvlinkPascalLane = 20.0 * kGB;
inline constexpr double kPcieBw = 12.0 * kGB;
inline constexpr double kQpiBw = 8.0 * kGB;
inline constexpr double kEdrBw = 12.0 * kGB;
inline constexpr double kHostMemBw = 50.0 * kGB;
inline constexpr double kDeviceMemBw = 800.0 * kGB;

/// Immutable machine model. Routes are derived at construction unless given
/// explicitly; every device pair gets exactly one route and route(j,i) is the
/// reverse of route(i,j).
class Topology {
 public:
  using RouteTable = std::map<std::pair<DeviceId, DeviceId>, Route>;

  Topology(std::string name, std::vector<NodeId> nodes, std::vector<Link> links,
           double device_mem_bw = kDeviceMemBw,
           std::optional<RouteTable> explicit_routes = std::nullopt);

  const std::string& name() const { return name_; }
  const std::vector<NodeId>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  double device_mem_bw() const { return device_mem_bw_; }
  std::uint32_t device_count() const { return device_count_; }
  std::size_t host_count() const;

  /// Device-direct route. Empty for src == dst.
  const Route& route(DeviceId src, DeviceId dst) const;

  /// Route forced through host memory: src -> its host bridge -> ... ->
  /// dst's host bridge -> dst, never using device-device or device-switch links.
  const Route& host_route(DeviceId src, DeviceId dst) const;

  /// Host bridge a device hangs off (lowest index if several), if any.
  std::optional<NodeId> host_of(DeviceId d) const;
  /// Single-hop route from a device to its host bridge.
  Route device_to_host(DeviceId d) const;

  /// Bottleneck effective capacity of route(src, dst); device_mem_bw if src == dst.
  double route_bandwidth(DeviceId src, DeviceId dst) const;

  /// True if the route passes through a NIC (inter-node traffic).
  bool crosses_nic(const Route& r) const;

  /// Node sequence visited by a route starting at `from`.
  std::vector<NodeId> route_nodes(NodeId from, const Route& r) const;

  /// Name of the directed link "a->b" for a hop.
  std::string hop_name(const Hop& h) const;

  std::size_t node_position(NodeId n) const;
  bool has_node(NodeId n) const;

 private:
  void check_route(DeviceId src, DeviceId dst, const Route& r) const;
  std::optional<Route> shortest(std::size_t from, std::size_t to,
                                const std::vector<bool>& transit_ok) const;
  void derive_routes();
  void derive_host_routes();

  std::string name_;
  std::vector<NodeId> nodes_;
  std::vector<Link> links_;
  double device_mem_bw_;
  std::uint32_t device_count_ = 0;
  std::map<NodeId, std::size_t> position_;
  // adjacency: node position -> (neighbor position, link index)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj_;
  std::vector<Route> routes_;       // device_count^2, row-major
  std::vector<Route> host_routes_;  // empty when the machine has no host bridges
  bool has_host_routes_ = false;
};

/// Maps MPI-style ranks onto devices; several ranks may share a device.
class RankMap {
 public:
  RankMap() = default;
  explicit RankMap(std::vector<DeviceId> device_of_rank);

  /// Rank r on device r % devices.
  static RankMap round_robin(std::uint32_t ranks, std::uint32_t devices);

  std::uint32_t ranks() const { return static_cast<std::uint32_t>(device_.size()); }
  DeviceId device(std::uint32_t rank) const;
  const std::vector<DeviceId>& devices() const { return device_; }

  /// Throws TopologyError if any rank maps to a device outside `t`.
  void check_against(const Topology& t) const;

 private:
  std::vector<DeviceId> device_;
};

// Presets.

enum class PresetKind { Dgx1P, Dgx1V, Dgx2, FatTreeEdr };

struct PresetSpec {
  PresetKind kind = PresetKind::Dgx1V;
  std::uint32_t servers = 1;           // DGX-1 variants only: servers joined by EDR
  std::uint32_t nodes = 1;             // FatTreeEdr
  std::uint32_t devices_per_node = 1;  // FatTreeEdr
};

Topology preset(const PresetSpec& spec);

/// Parses "dgx1p", "dgx1v", "dgx2", "fattree" (case-insensitive); ConfigError otherwise.
PresetKind parse_preset(const std::string& name);

/// Fully connected clique of n devices, one link of `lane_bw` per pair.
Topology fully_connected(std::uint32_t n, double lane_bw = kNvlinkVoltaLane,
                         double device_mem_bw = kDeviceMemBw);

}  // namespace haloflow
