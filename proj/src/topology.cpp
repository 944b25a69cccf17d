#include "haloflow/topology.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <limits>

#include "haloflow/errors.hpp"

namespace haloflow {

std::string node_name(NodeId n) {
  const char* prefix = "gpu";
  switch (n.kind) {
    case NodeKind::Device: prefix = "gpu"; break;
    case NodeKind::HostBridge: prefix = "host"; break;
    case NodeKind::Switch: prefix = "sw"; break;
    case NodeKind::Nic: prefix = "nic"; break;
  }
  return prefix + std::to_string(n.index);
}

namespace {

Route reversed(const Route& r) {
  Route out;
  out.reserve(r.size());
  for (auto it = r.rbegin(); it != r.rend(); ++it) out.push_back(Hop{it->link, !it->forward});
  return out;
}

}  // namespace

Topology::Topology(std::string name, std::vector<NodeId> nodes, std::vector<Link> links,
                   double device_mem_bw, std::optional<RouteTable> explicit_routes)
    : name_(std::move(name)),
      nodes_(std::move(nodes)),
      links_(std::move(links)),
      device_mem_bw_(device_mem_bw) {
  if (!(device_mem_bw_ > 0.0)) throw TopologyError("device_mem_bw must be > 0");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!position_.emplace(nodes_[i], i).second)
      throw TopologyError("duplicate node " + node_name(nodes_[i]));
    if (nodes_[i].kind == NodeKind::Device) ++device_count_;
  }
  // Devices must be numbered 0..D-1 so that DeviceId doubles as the index.
  for (DeviceId d = 0; d < device_count_; ++d)
    if (!has_node({NodeKind::Device, d}))
      throw TopologyError("devices must be numbered contiguously from 0; missing gpu" +
                          std::to_string(d));

  adj_.resize(nodes_.size());
  for (std::size_t l = 0; l < links_.size(); ++l) {
    const Link& link = links_[l];
    if (!has_node(link.a) || !has_node(link.b))
      throw TopologyError("link references unknown node");
    if (link.a == link.b) throw TopologyError("self-loop link on " + node_name(link.a));
    if (!(link.bw_per_dir > 0.0)) throw TopologyError("link bandwidth must be > 0");
    if (link.lanes == 0) throw TopologyError("link lane count must be positive");
    const std::size_t pa = position_.at(link.a);
    const std::size_t pb = position_.at(link.b);
    adj_[pa].emplace_back(pb, l);
    adj_[pb].emplace_back(pa, l);
  }
  for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());

  derive_routes();
  if (explicit_routes) {
    for (const auto& [key, r] : *explicit_routes) {
      const auto [src, dst] = key;
      if (src >= device_count_ || dst >= device_count_)
        throw TopologyError("explicit route names an unknown device");
      check_route(src, dst, r);
      auto rev = explicit_routes->find({dst, src});
      if (rev != explicit_routes->end() && rev->second != reversed(r))
        throw TopologyError("explicit routes " + std::to_string(src) + "<->" +
                            std::to_string(dst) + " are not mutual reverses");
      routes_[src * device_count_ + dst] = r;
      routes_[dst * device_count_ + src] = reversed(r);
    }
  }
  derive_host_routes();
}

std::size_t Topology::host_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](NodeId n) { return n.kind == NodeKind::HostBridge; }));
}

bool Topology::has_node(NodeId n) const { return position_.count(n) != 0; }

std::size_t Topology::node_position(NodeId n) const {
  auto it = position_.find(n);
  if (it == position_.end()) throw TopologyError("unknown node " + node_name(n));
  return it->second;
}

std::optional<Route> Topology::shortest(std::size_t from, std::size_t to,
                                        const std::vector<bool>& transit_ok) const {
  if (from == to) return Route{};
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent_link(nodes_.size(), kNone);
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<std::size_t> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    if (u == to) break;
    if (u != from && !transit_ok[u]) continue;
    for (const auto& [v, l] : adj_[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      parent_link[v] = l;
      queue.push_back(v);
    }
  }
  if (!seen[to]) return std::nullopt;
  Route r;
  for (std::size_t v = to; v != from;) {
    const std::size_t l = parent_link[v];
    const std::size_t pa = position_.at(links_[l].a);
    const std::size_t pb = position_.at(links_[l].b);
    const bool forward = (pb == v);
    r.push_back(Hop{l, forward});
    v = forward ? pa : pb;
  }
  std::reverse(r.begin(), r.end());
  return r;
}

void Topology::derive_routes() {
  const std::size_t n = device_count_;
  routes_.assign(n * n, Route{});
  std::vector<bool> present(n * n, false);
  // Devices never forward traffic. Prefer the switched fabric; fall back to
  // paths through host bridges only when the fabric does not connect a pair.
  std::vector<bool> fabric(nodes_.size()), with_hosts(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    fabric[i] = nodes_[i].kind == NodeKind::Switch || nodes_[i].kind == NodeKind::Nic;
    with_hosts[i] = fabric[i] || nodes_[i].kind == NodeKind::HostBridge;
  }
  for (DeviceId s = 0; s < n; ++s) {
    present[s * n + s] = true;
    for (DeviceId d = s + 1; d < n; ++d) {
      const std::size_t ps = position_.at({NodeKind::Device, s});
      const std::size_t pd = position_.at({NodeKind::Device, d});
      auto r = shortest(ps, pd, fabric);
      if (!r) r = shortest(ps, pd, with_hosts);
      if (!r) continue;
      routes_[s * n + d] = *r;
      routes_[d * n + s] = reversed(*r);
      present[s * n + d] = present[d * n + s] = true;
    }
  }
  for (DeviceId s = 0; s < n; ++s)
    for (DeviceId d = 0; d < n; ++d)
      if (!present[s * n + d])
        throw TopologyError("no route between gpu" + std::to_string(s) + " and gpu" +
                            std::to_string(d));
}

void Topology::derive_host_routes() {
  const std::size_t n = device_count_;
  has_host_routes_ = n > 0;
  for (DeviceId d = 0; d < n; ++d)
    if (!host_of(d)) has_host_routes_ = false;
  if (!has_host_routes_) return;

  std::vector<bool> transit(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) transit[i] = nodes_[i].kind != NodeKind::Device;

  host_routes_.assign(n * n, Route{});
  for (DeviceId s = 0; s < n; ++s) {
    for (DeviceId d = s + 1; d < n; ++d) {
      const NodeId hs = *host_of(s);
      const NodeId hd = *host_of(d);
      // Host-to-host leg must not re-enter the device-facing NVLink fabric, so
      // switches that touch devices are excluded from transit.
      std::vector<bool> ok = transit;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind != NodeKind::Switch) continue;
        for (const auto& [v, l] : adj_[i])
          if (nodes_[v].kind == NodeKind::Device) ok[i] = false;
      }
      auto mid = shortest(position_.at(hs), position_.at(hd), ok);
      if (!mid) {
        has_host_routes_ = false;
        host_routes_.clear();
        return;
      }
      Route r = device_to_host(s);
      r.insert(r.end(), mid->begin(), mid->end());
      const Route tail = reversed(device_to_host(d));
      r.insert(r.end(), tail.begin(), tail.end());
      host_routes_[s * n + d] = r;
      host_routes_[d * n + s] = reversed(r);
    }
  }
}

void Topology::check_route(DeviceId src, DeviceId dst, const Route& r) const {
  NodeId at{NodeKind::Device, src};
  for (const Hop& h : r) {
    if (h.link >= links_.size()) throw TopologyError("route references unknown link");
    const Link& l = links_[h.link];
    const NodeId from = h.forward ? l.a : l.b;
    if (from != at)
      throw TopologyError("route gpu" + std::to_string(src) + "->gpu" + std::to_string(dst) +
                          " is not a connected path");
    at = h.forward ? l.b : l.a;
  }
  if (at != NodeId{NodeKind::Device, dst})
    throw TopologyError("route gpu" + std::to_string(src) + "->gpu" + std::to_string(dst) +
                        " does not end at its destination");
}

const Route& Topology::route(DeviceId src, DeviceId dst) const {
  if (src >= device_count_ || dst >= device_count_)
    throw TopologyError("route requested for unknown device gpu" +
                        std::to_string(std::max(src, dst)));
  return routes_[src * device_count_ + dst];
}

const Route& Topology::host_route(DeviceId src, DeviceId dst) const {
  if (!has_host_routes_)
    throw TopologyError("topology '" + name_ + "' has no host path for staged transfers");
  if (src >= device_count_ || dst >= device_count_)
    throw TopologyError("host route requested for unknown device");
  return host_routes_[src * device_count_ + dst];
}

std::optional<NodeId> Topology::host_of(DeviceId d) const {
  const std::size_t p = position_.at({NodeKind::Device, d});
  for (const auto& [v, l] : adj_[p])
    if (nodes_[v].kind == NodeKind::HostBridge) return nodes_[v];
  return std::nullopt;
}

Route Topology::device_to_host(DeviceId d) const {
  const auto h = host_of(d);
  if (!h) throw TopologyError("gpu" + std::to_string(d) + " has no host bridge");
  const std::size_t p = position_.at({NodeKind::Device, d});
  const std::size_t ph = position_.at(*h);
  for (const auto& [v, l] : adj_[p])
    if (v == ph) return Route{Hop{l, links_[l].a == NodeId{NodeKind::Device, d}}};
  throw TopologyError("unreachable");
}

double Topology::route_bandwidth(DeviceId src, DeviceId dst) const {
  const Route& r = route(src, dst);
  if (src == dst) return device_mem_bw_;
  double bw = std::numeric_limits<double>::infinity();
  for (const Hop& h : r) bw = std::min(bw, links_[h.link].capacity());
  return bw;
}

bool Topology::crosses_nic(const Route& r) const {
  for (const Hop& h : r) {
    const Link& l = links_[h.link];
    if (l.a.kind == NodeKind::Nic || l.b.kind == NodeKind::Nic) return true;
  }
  return false;
}

std::vector<NodeId> Topology::route_nodes(NodeId from, const Route& r) const {
  std::vector<NodeId> out{from};
  for (const Hop& h : r) out.push_back(h.forward ? links_[h.link].b : links_[h.link].a);
  return out;
}

std::string Topology::hop_name(const Hop& h) const {
  const Link& l = links_.at(h.link);
  return h.forward ? node_name(l.a) + "->" + node_name(l.b)
                   : node_name(l.b) + "->" + node_name(l.a);
}

// --- RankMap ---------------------------------------------------------------

RankMap::RankMap(std::vector<DeviceId> device_of_rank) : device_(std::move(device_of_rank)) {}

RankMap RankMap::round_robin(std::uint32_t ranks, std::uint32_t devices) {
  if (devices == 0) throw ConfigError("rank map needs at least one device");
  std::vector<DeviceId> d(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r) d[r] = r % devices;
  return RankMap(std::move(d));
}

DeviceId RankMap::device(std::uint32_t rank) const {
  if (rank >= device_.size())
    throw SimulationError("rank " + std::to_string(rank) + " out of range (" +
                          std::to_string(device_.size()) + " ranks)");
  return device_[rank];
}

void RankMap::check_against(const Topology& t) const {
  for (std::size_t r = 0; r < device_.size(); ++r)
    if (device_[r] >= t.device_count())
      throw TopologyError("rank " + std::to_string(r) + " mapped to missing device gpu" +
                          std::to_string(device_[r]));
}

// --- presets ---------------------------------------------------------------

namespace {

NodeId dev(std::uint32_t i) { return {NodeKind::Device, i}; }
NodeId host(std::uint32_t i) { return {NodeKind::HostBridge, i}; }
NodeId sw(std::uint32_t i) { return {NodeKind::Switch, i}; }
NodeId nic(std::uint32_t i) { return {NodeKind::Nic, i}; }

// DGX-1 family: two fully connected 4-device islands per server, each island
// on its own CPU socket. Pascal additionally has the i <-> i+4 cube links.
Topology dgx1(bool pascal, std::uint32_t servers) {
  if (servers == 0) throw ConfigError("dgx1 preset needs servers >= 1");
  const double lane = pascal ? kNvlinkPascalLane : kNvlinkVoltaLane;
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  for (std::uint32_t i = 0; i < 8 * servers; ++i) nodes.push_back(dev(i));
  for (std::uint32_t h = 0; h < 2 * servers; ++h) nodes.push_back(host(h));
  if (servers > 1) {
    nodes.push_back(sw(0));
    for (std::uint32_t h = 0; h < 2 * servers; ++h) nodes.push_back(nic(h));
  }
  for (std::uint32_t s = 0; s < servers; ++s) {
    const std::uint32_t base = 8 * s;
    for (std::uint32_t island = 0; island < 2; ++island)
      for (std::uint32_t i = 0; i < 4; ++i)
        for (std::uint32_t j = i + 1; j < 4; ++j)
          links.push_back({dev(base + 4 * island + i), dev(base + 4 * island + j), lane, 1});
    if (pascal)
      for (std::uint32_t i = 0; i < 4; ++i) links.push_back({dev(base + i), dev(base + i + 4), lane, 1});
    for (std::uint32_t i = 0; i < 8; ++i) links.push_back({dev(base + i), host(2 * s + i / 4), kPcieBw, 1});
    links.push_back({host(2 * s), host(2 * s + 1), kQpiBw, 1});
  }
  if (servers > 1) {
    for (std::uint32_t h = 0; h < 2 * servers; ++h) {
      links.push_back({host(h), nic(h), kEdrBw, 1});
      links.push_back({nic(h), sw(0), kEdrBw, 1});
    }
  }
  std::string name = pascal ? "dgx1p" : "dgx1v";
  if (servers > 1) name += "x" + std::to_string(servers);
  return Topology(name, std::move(nodes), std::move(links));
}

Topology dgx2() {
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  for (std::uint32_t i = 0; i < 16; ++i) nodes.push_back(dev(i));
  nodes.push_back(host(0));
  nodes.push_back(host(1));
  nodes.push_back(sw(0));
  for (std::uint32_t i = 0; i < 16; ++i) links.push_back({dev(i), sw(0), kNvlinkVoltaLane, 6});
  for (std::uint32_t i = 0; i < 16; ++i) links.push_back({dev(i), host(i / 8), kPcieBw, 1});
  links.push_back({host(0), host(1), kQpiBw, 1});
  return Topology("dgx2", std::move(nodes), std::move(links));
}

// CPU cluster: each node a host bridge with its sockets as devices; nodes
// joined through EDR NICs into one non-blocking switch (full-bisection fat tree).
Topology fat_tree(std::uint32_t n_nodes, std::uint32_t per_node) {
  if (n_nodes == 0 || per_node == 0)
    throw ConfigError("fattree preset needs nodes >= 1 and devices_per_node >= 1");
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  for (std::uint32_t i = 0; i < n_nodes * per_node; ++i) nodes.push_back(dev(i));
  const bool single = n_nodes == 1 && per_node == 1;
  if (!single) {
    for (std::uint32_t k = 0; k < n_nodes; ++k) nodes.push_back(host(k));
    for (std::uint32_t i = 0; i < n_nodes * per_node; ++i)
      links.push_back({dev(i), host(i / per_node), kHostMemBw, 1});
  }
  if (n_nodes > 1) {
    nodes.push_back(sw(0));
    for (std::uint32_t k = 0; k < n_nodes; ++k) {
      nodes.push_back(nic(k));
      links.push_back({host(k), nic(k), kEdrBw, 1});
      links.push_back({nic(k), sw(0), kEdrBw, 1});
    }
  }
  return Topology("fattree" + std::to_string(n_nodes) + "x" + std::to_string(per_node),
                  std::move(nodes), std::move(links));
}

}  // namespace

Topology preset(const PresetSpec& spec) {
  switch (spec.kind) {
    case PresetKind::Dgx1P: return dgx1(true, spec.servers);
    case PresetKind::Dgx1V: return dgx1(false, spec.servers);
    case PresetKind::Dgx2: return dgx2();
    case PresetKind::FatTreeEdr: return fat_tree(spec.nodes, spec.devices_per_node);
  }
  throw ConfigError("unknown preset");
}

PresetKind parse_preset(const std::string& name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "dgx1p") return PresetKind::Dgx1P;
  if (s == "dgx1v") return PresetKind::Dgx1V;
  if (s == "dgx2") return PresetKind::Dgx2;
  if (s == "fattree" || s == "fattreeedr") return PresetKind::FatTreeEdr;
  throw ConfigError("unknown topology preset '" + name + "'");
}

Topology fully_connected(std::uint32_t n, double lane_bw, double device_mem_bw) {
  if (n == 0) throw ConfigError("fully_connected needs n >= 1");
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  for (std::uint32_t i = 0; i < n; ++i) nodes.push_back(dev(i));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) links.push_back({dev(i), dev(j), lane_bw, 1});
  return Topology("clique" + std::to_string(n), std::move(nodes), std::move(links), device_mem_bw);
}

}  // namespace haloflow
