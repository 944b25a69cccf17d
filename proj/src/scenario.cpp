#include "haloflow/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <regex>

#include "haloflow/errors.hpp"

namespace haloflow {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

void expect_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!ok) throw ValidationError("unknown field " + path + "." + it.key());
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

double as_non_negative(const json& j, const std::string& path) {
  const double v = as_number(j, path);
  if (v < 0.0) fail(path, "must be >= 0");
  return v;
}

std::int64_t as_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  const double v = as_number(j, path);
  if (std::floor(v) != v || std::fabs(v) > 9.0e18) fail(path, "expected an integer");
  return static_cast<std::int64_t>(v);
}

std::uint32_t as_count(const json& j, const std::string& path, std::uint32_t min = 0) {
  const std::int64_t v = as_int(j, path);
  if (v < min || v > std::numeric_limits<std::uint32_t>::max())
    fail(path, "must be an integer >= " + std::to_string(min));
  return static_cast<std::uint32_t>(v);
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

NodeId parse_node(const std::string& s, const std::string& path) {
  static const std::regex re("(gpu|host|sw|nic)([0-9]+)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) fail(path, "expected a node name like gpu0, host1, sw0 or nic2");
  NodeKind kind = NodeKind::Device;
  if (m[1] == "host") kind = NodeKind::HostBridge;
  else if (m[1] == "sw") kind = NodeKind::Switch;
  else if (m[1] == "nic") kind = NodeKind::Nic;
  return {kind, static_cast<std::uint32_t>(std::stoul(m[2]))};
}

Topology custom_topology(const json& j, const std::string& path) {
  expect_keys(j, path, {"name", "nodes", "links", "routes", "device_mem_bw_gbps"});
  std::vector<NodeId> nodes;
  if (!j.contains("nodes")) fail(path, "missing field 'nodes'");
  const auto& jn = as_array(j["nodes"], path + ".nodes");
  for (std::size_t i = 0; i < jn.size(); ++i)
    nodes.push_back(parse_node(as_string(jn[i], path + ".nodes[" + std::to_string(i) + "]"),
                               path + ".nodes[" + std::to_string(i) + "]"));
  std::vector<Link> links;
  if (j.contains("links")) {
    const auto& jl = as_array(j["links"], path + ".links");
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const std::string lp = path + ".links[" + std::to_string(i) + "]";
      expect_keys(jl[i], lp, {"a", "b", "gbps_per_dir", "lanes"});
      for (const char* k : {"a", "b", "gbps_per_dir"})
        if (!jl[i].contains(k)) fail(lp, std::string("missing field '") + k + "'");
      Link l;
      l.a = parse_node(as_string(jl[i]["a"], lp + ".a"), lp + ".a");
      l.b = parse_node(as_string(jl[i]["b"], lp + ".b"), lp + ".b");
      l.bw_per_dir = as_non_negative(jl[i]["gbps_per_dir"], lp + ".gbps_per_dir") * kGB;
      if (jl[i].contains("lanes")) l.lanes = as_count(jl[i]["lanes"], lp + ".lanes", 1);
      links.push_back(l);
    }
  }
  std::optional<Topology::RouteTable> routes;
  if (j.contains("routes")) {
    routes.emplace();
    const auto& jr = as_array(j["routes"], path + ".routes");
    for (std::size_t i = 0; i < jr.size(); ++i) {
      const std::string rp = path + ".routes[" + std::to_string(i) + "]";
      expect_keys(jr[i], rp, {"path"});
      if (!jr[i].contains("path")) fail(rp, "missing field 'path'");
      const auto& hops = as_array(jr[i]["path"], rp + ".path");
      std::vector<NodeId> via;
      for (std::size_t k = 0; k < hops.size(); ++k)
        via.push_back(parse_node(as_string(hops[k], rp + ".path[" + std::to_string(k) + "]"),
                                 rp + ".path[" + std::to_string(k) + "]"));
      if (via.size() < 2 || via.front().kind != NodeKind::Device || via.back().kind != NodeKind::Device)
        fail(rp + ".path", "must run from one device to another");
      Route r;
      for (std::size_t k = 0; k + 1 < via.size(); ++k) {
        std::optional<Hop> hop;
        for (std::size_t l = 0; l < links.size() && !hop; ++l) {
          if (links[l].a == via[k] && links[l].b == via[k + 1]) hop = Hop{l, true};
          else if (links[l].b == via[k] && links[l].a == via[k + 1]) hop = Hop{l, false};
        }
        if (!hop) fail(rp + ".path", "no link joins " + node_name(via[k]) + " and " + node_name(via[k + 1]));
        r.push_back(*hop);
      }
      (*routes)[{via.front().index, via.back().index}] = std::move(r);
    }
  }
  const std::string name = j.contains("name") ? as_string(j["name"], path + ".name") : "custom";
  const double mem = j.contains("device_mem_bw_gbps")
                         ? as_non_negative(j["device_mem_bw_gbps"], path + ".device_mem_bw_gbps") * kGB
                         : kDeviceMemBw;
  return Topology(name, std::move(nodes), std::move(links), mem, std::move(routes));
}

Topology topology_from_string(const std::string& s, const std::string& path) {
  const auto colon = s.find(':');
  const std::string base = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  auto number = [&](const std::string& t) -> std::uint32_t {
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
      fail(path, "malformed topology '" + s + "'");
    return static_cast<std::uint32_t>(std::stoul(t));
  };
  if (base == "clique") return fully_connected(number(arg));
  const PresetKind kind = rethrow_at(path, [&] { return parse_preset(base); });
  PresetSpec spec;
  spec.kind = kind;
  if (!arg.empty()) {
    if (kind == PresetKind::FatTreeEdr) {
      const auto x = arg.find('x');
      spec.nodes = number(arg.substr(0, x));
      spec.devices_per_node = x == std::string::npos ? 1 : number(arg.substr(x + 1));
    } else if (kind == PresetKind::Dgx1P || kind == PresetKind::Dgx1V) {
      spec.servers = number(arg);
    } else {
      fail(path, "preset '" + base + "' takes no argument");
    }
  }
  return preset(spec);
}

MessageSizes parse_sizes(const json& j, const std::string& path) {
  MessageSizes m;
  if (j.contains("uniform_bytes") && j.contains("size_matrix"))
    fail(path, "give either uniform_bytes or size_matrix, not both");
  if (j.contains("uniform_bytes")) {
    const std::int64_t v = as_int(j["uniform_bytes"], path + ".uniform_bytes");
    if (v < 0) fail(path + ".uniform_bytes", "must be >= 0");
    m.uniform_bytes = v;
  }
  if (j.contains("size_matrix")) {
    const std::string mp = path + ".size_matrix";
    const auto& rows = as_array(j["size_matrix"], mp);
    std::vector<std::vector<std::int64_t>> v;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = as_array(rows[i], mp + "[" + std::to_string(i) + "]");
      v.emplace_back();
      for (std::size_t k = 0; k < row.size(); ++k) {
        const std::string ep = mp + "[" + std::to_string(i) + "][" + std::to_string(k) + "]";
        const std::int64_t b = as_int(row[k], ep);
        if (b < 0) fail(ep, "must be >= 0");
        v.back().push_back(b);
      }
    }
    m.matrix = rethrow_at(mp, [&] { return SizeMatrix::from_rows(v); });
  }
  return m;
}

ScheduleKind parse_schedule_at(const json& j, const std::string& path) {
  const std::string s = as_string(j, path);
  return rethrow_at(path, [&] { return parse_schedule(s); });
}

std::vector<std::uint32_t> parse_rank_list(const json& j, const std::string& path) {
  std::vector<std::uint32_t> out;
  const auto& a = as_array(j, path);
  if (a.empty()) fail(path, "must not be empty");
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_count(a[i], path + "[" + std::to_string(i) + "]", 1));
  return out;
}

AlltoallWorkload parse_alltoall(const json& j, const std::string& path) {
  expect_keys(j, path, {"schedules", "uniform_bytes", "size_matrix"});
  AlltoallWorkload w;
  if (j.contains("schedules")) {
    w.schedules.clear();
    const auto& a = as_array(j["schedules"], path + ".schedules");
    for (std::size_t i = 0; i < a.size(); ++i)
      w.schedules.push_back(parse_schedule_at(a[i], path + ".schedules[" + std::to_string(i) + "]"));
    if (w.schedules.empty()) fail(path + ".schedules", "must not be empty");
  }
  if (j.contains("uniform_bytes") || j.contains("size_matrix")) w.sizes = parse_sizes(j, path);
  return w;
}

HaloWorkload parse_halo(const json& j, const std::string& path) {
  expect_keys(j, path, {"grid", "steps", "overlap", "bytes_per_element", "compute_seconds_total"});
  HaloWorkload w;
  if (j.contains("grid")) w.grid = as_string(j["grid"], path + ".grid");
  if (j.contains("steps")) w.steps = as_count(j["steps"], path + ".steps");
  if (j.contains("overlap")) {
    const std::string s = as_string(j["overlap"], path + ".overlap");
    w.overlap = rethrow_at(path + ".overlap", [&] { return parse_overlap(s); });
  }
  if (j.contains("bytes_per_element")) {
    w.bytes_per_element = as_int(j["bytes_per_element"], path + ".bytes_per_element");
    if (w.bytes_per_element < 0) fail(path + ".bytes_per_element", "must be >= 0");
  }
  if (j.contains("compute_seconds_total"))
    w.compute_seconds_total = as_non_negative(j["compute_seconds_total"], path + ".compute_seconds_total");
  return w;
}

TimestepWorkload parse_timestep(const json& j, const std::string& path) {
  expect_keys(j, path, {"compute_seconds", "collective", "barrier_at_end"});
  TimestepWorkload w;
  if (!j.contains("compute_seconds")) fail(path, "missing field 'compute_seconds'");
  const auto& c = as_array(j["compute_seconds"], path + ".compute_seconds");
  for (std::size_t i = 0; i < c.size(); ++i)
    w.compute_seconds.push_back(as_non_negative(c[i], path + ".compute_seconds[" + std::to_string(i) + "]"));
  if (j.contains("collective")) {
    const std::string cp = path + ".collective";
    expect_keys(j["collective"], cp, {"schedule", "uniform_bytes", "size_matrix"});
    if (j["collective"].contains("schedule")) w.schedule = parse_schedule_at(j["collective"]["schedule"], cp + ".schedule");
    w.sizes = parse_sizes(j["collective"], cp);
  }
  if (j.contains("barrier_at_end")) {
    if (!j["barrier_at_end"].is_boolean()) fail(path + ".barrier_at_end", "expected a boolean");
    w.barrier_at_end = j["barrier_at_end"].get<bool>();
  }
  return w;
}

SweepWorkload parse_sweep(const json& j, const std::string& path) {
  expect_keys(j, path, {"topologies", "ranks", "schedule", "total_bytes", "compute_seconds_total", "imbalance"});
  SweepWorkload w;
  if (j.contains("topologies")) {
    const auto& a = as_array(j["topologies"], path + ".topologies");
    if (a.empty()) fail(path + ".topologies", "must not be empty");
    w.topologies.assign(a.begin(), a.end());
    for (std::size_t i = 0; i < a.size(); ++i)
      (void)topology_from_json(a[i], path + ".topologies[" + std::to_string(i) + "]");
  }
  if (j.contains("ranks")) w.ranks = parse_rank_list(j["ranks"], path + ".ranks");
  if (j.contains("schedule")) w.schedule = parse_schedule_at(j["schedule"], path + ".schedule");
  if (j.contains("total_bytes")) w.total_bytes = as_non_negative(j["total_bytes"], path + ".total_bytes");
  if (j.contains("compute_seconds_total"))
    w.compute_seconds_total = as_non_negative(j["compute_seconds_total"], path + ".compute_seconds_total");
  if (j.contains("imbalance")) {
    const std::string ip = path + ".imbalance";
    if (!j["imbalance"].is_object()) fail(ip, "expected an object keyed by rank count");
    for (auto it = j["imbalance"].begin(); it != j["imbalance"].end(); ++it) {
      const std::string kp = ip + "." + it.key();
      if (it.key().empty() || !std::all_of(it.key().begin(), it.key().end(), [](unsigned char c) { return std::isdigit(c); }))
        throw ValidationError("unknown field " + kp);
      const double f = as_non_negative(it.value(), kp);
      if (f > 1.0) fail(kp, "must lie in [0, 1]");
      w.imbalance[static_cast<std::uint32_t>(std::stoul(it.key()))] = f;
    }
  }
  return w;
}

EnergySeriesWorkload parse_series(const json& j, const std::string& path) {
  expect_keys(j, path, {"grid", "ranks", "compute_seconds_total", "bytes_per_element", "anchors"});
  EnergySeriesWorkload w;
  if (j.contains("grid")) w.grid = as_string(j["grid"], path + ".grid");
  if (j.contains("ranks")) w.ranks = parse_rank_list(j["ranks"], path + ".ranks");
  if (j.contains("compute_seconds_total"))
    w.compute_seconds_total = as_non_negative(j["compute_seconds_total"], path + ".compute_seconds_total");
  if (j.contains("bytes_per_element")) {
    w.bytes_per_element = as_int(j["bytes_per_element"], path + ".bytes_per_element");
    if (w.bytes_per_element < 0) fail(path + ".bytes_per_element", "must be >= 0");
  }
  if (j.contains("anchors")) {
    const auto& a = as_array(j["anchors"], path + ".anchors");
    if (a.size() != 2) fail(path + ".anchors", "expected exactly two anchors");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string ap = path + ".anchors[" + std::to_string(i) + "]";
      expect_keys(a[i], ap, {"ranks", "watts"});
      if (!a[i].contains("ranks") || !a[i].contains("watts")) fail(ap, "needs ranks and watts");
      w.anchors.push_back({as_count(a[i]["ranks"], ap + ".ranks", 1), as_non_negative(a[i]["watts"], ap + ".watts")});
      if (std::find(w.ranks.begin(), w.ranks.end(), w.anchors.back().ranks) == w.ranks.end())
        fail(ap + ".ranks", "anchor rank count is not part of the series");
    }
  }
  return w;
}

EnergyConfig parse_energy(const json& j, const std::string& path) {
  expect_keys(j, path, {"p_idle", "p_max", "avg_watts", "step_s", "devices", "trace", "series"});
  EnergyConfig c;
  if (j.contains("p_idle")) c.model.p_idle = as_non_negative(j["p_idle"], path + ".p_idle");
  if (j.contains("p_max")) c.model.p_max = as_non_negative(j["p_max"], path + ".p_max");
  rethrow_at(path, [&] { c.model.validate(); });
  if (j.contains("avg_watts")) c.avg_watts = as_non_negative(j["avg_watts"], path + ".avg_watts");
  if (j.contains("step_s")) c.step_seconds = as_non_negative(j["step_s"], path + ".step_s");
  if (j.contains("devices")) c.devices = as_non_negative(j["devices"], path + ".devices");
  if (j.contains("trace")) c.trace = as_string(j["trace"], path + ".trace");
  if (j.contains("series")) c.series = parse_series(j["series"], path + ".series");
  return c;
}

RooflineConfig parse_roofline(const json& j, const std::string& path) {
  expect_keys(j, path, {"peak_flops", "stream_bw", "kernels_csv", "kernels"});
  RooflineConfig c;
  if (j.contains("peak_flops")) c.machine.peak_flops = as_number(j["peak_flops"], path + ".peak_flops");
  if (j.contains("stream_bw")) c.machine.stream_bw = as_number(j["stream_bw"], path + ".stream_bw");
  rethrow_at(path, [&] { c.machine.validate(); });
  if (j.contains("kernels_csv")) c.kernels_csv = as_string(j["kernels_csv"], path + ".kernels_csv");
  if (j.contains("kernels")) {
    const auto& a = as_array(j["kernels"], path + ".kernels");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string kp = path + ".kernels[" + std::to_string(i) + "]";
      expect_keys(a[i], kp, {"name", "flops", "bytes", "time_s"});
      for (const char* k : {"name", "flops", "bytes", "time_s"})
        if (!a[i].contains(k)) fail(kp, std::string("missing field '") + k + "'");
      KernelProfile k{as_string(a[i]["name"], kp + ".name"), as_number(a[i]["flops"], kp + ".flops"),
                      as_number(a[i]["bytes"], kp + ".bytes"), as_number(a[i]["time_s"], kp + ".time_s")};
      try {
        k.validate();
      } catch (const ValidationError& e) {
        fail(kp, e.what());
      }
      c.kernels.push_back(std::move(k));
    }
  }
  return c;
}

SimConfig parse_sim(const json& j, const std::string& path) {
  expect_keys(j, path, {"alpha_intra", "alpha_inter", "staging", "host_mem_bw", "sharing"});
  SimConfig c;
  if (j.contains("alpha_intra")) c.alpha_intra = as_non_negative(j["alpha_intra"], path + ".alpha_intra");
  if (j.contains("alpha_inter")) c.alpha_inter = as_non_negative(j["alpha_inter"], path + ".alpha_inter");
  if (j.contains("staging")) {
    const std::string s = as_string(j["staging"], path + ".staging");
    c.staging = rethrow_at(path + ".staging", [&] { return parse_staging(s); });
  }
  if (j.contains("host_mem_bw")) {
    c.host_mem_bw = as_number(j["host_mem_bw"], path + ".host_mem_bw");
    if (!(c.host_mem_bw > 0.0)) fail(path + ".host_mem_bw", "must be > 0");
  }
  if (j.contains("sharing") && as_string(j["sharing"], path + ".sharing") != "equal_split")
    fail(path + ".sharing", "only \"equal_split\" is supported");
  return c;
}

OutputConfig parse_output(const json& j, const std::string& path) {
  expect_keys(j, path, {"format", "path", "svg"});
  OutputConfig o;
  if (j.contains("format")) {
    o.format = as_string(j["format"], path + ".format");
    if (o.format != "csv" && o.format != "json") fail(path + ".format", "expected \"csv\" or \"json\"");
  }
  if (j.contains("path")) o.path = as_string(j["path"], path + ".path");
  if (j.contains("svg")) o.svg = as_string(j["svg"], path + ".svg");
  return o;
}

}  // namespace

Topology topology_from_json(const json& j, const std::string& path) {
  try {
    if (j.is_string()) return topology_from_string(j.get<std::string>(), path);
    if (!j.is_object()) fail(path, "expected a preset name or an object");
    if (j.contains("custom")) {
      expect_keys(j, path, {"custom"});
      return custom_topology(j["custom"], path + ".custom");
    }
    expect_keys(j, path, {"preset", "servers", "nodes", "devices_per_node", "devices", "lane_bw"});
    if (!j.contains("preset")) fail(path, "missing field 'preset'");
    const std::string name = as_string(j["preset"], path + ".preset");
    if (name == "clique") {
      const std::uint32_t n = j.contains("devices") ? as_count(j["devices"], path + ".devices", 1) : 4;
      const double bw = j.contains("lane_bw") ? as_number(j["lane_bw"], path + ".lane_bw") : kNvlinkVoltaLane;
      return fully_connected(n, bw);
    }
    PresetSpec spec;
    spec.kind = rethrow_at(path + ".preset", [&] { return parse_preset(name); });
    if (j.contains("servers")) spec.servers = as_count(j["servers"], path + ".servers", 1);
    if (j.contains("nodes")) spec.nodes = as_count(j["nodes"], path + ".nodes", 1);
    if (j.contains("devices_per_node")) spec.devices_per_node = as_count(j["devices_per_node"], path + ".devices_per_node", 1);
    return preset(spec);
  } catch (const TopologyError& e) {
    fail(path, e.what());
  }
}

GlobalGrid grid_fixture(const std::string& name, std::uint64_t seed) {
  static const std::regex ring("ring([0-9]+)");
  static const std::regex quad("(quad|tiled)([0-9]+)x([0-9]+)");
  static const std::regex rnd("random([0-9]+)(d([0-9]+))?");
  std::smatch m;
  try {
    if (std::regex_match(name, m, ring)) return ring_grid(std::stoull(m[1]));
    if (std::regex_match(name, m, quad))
      return quad_grid(std::stoull(m[2]), std::stoull(m[3]),
                       m[1] == "tiled" ? QuadOrdering::Tiled : QuadOrdering::RowMajor);
    if (std::regex_match(name, m, rnd))
      return random_grid(std::stoull(m[1]), m[3].matched ? std::stoull(m[3]) : 8, seed);
  } catch (const std::out_of_range&) {
    throw ConfigError("grid size out of range in '" + name + "'");
  }
  throw ConfigError("unknown grid fixture '" + name + "' (expected ringN, quadWxH, tiledWxH or randomN[dK])");
}

SizeMatrix MessageSizes::resolve(std::uint32_t ranks) const {
  if (matrix) {
    if (matrix->ranks() != ranks)
      throw ConfigError("size matrix is " + std::to_string(matrix->ranks()) + "x" +
                        std::to_string(matrix->ranks()) + " but the scenario has " + std::to_string(ranks) +
                        " ranks");
    return *matrix;
  }
  return SizeMatrix(ranks, uniform_bytes.value_or(0));
}

RankMap Scenario::resolve_rank_map(const Topology& t) const {
  RankMap rm = rank_map ? RankMap(*rank_map) : RankMap::round_robin(ranks, t.device_count());
  if (rm.ranks() != ranks)
    throw ConfigError("rank_map has " + std::to_string(rm.ranks()) + " entries for " + std::to_string(ranks) +
                      " ranks");
  rm.check_against(t);
  return rm;
}

Scenario parse_scenario(const json& j) {
  expect_keys(j, "$", {"schema", "name", "seed", "topology", "ranks", "rank_map", "sim", "workload", "energy",
                       "roofline", "output"});
  if (!j.contains("schema")) fail("$", "missing field 'schema'");
  if (as_int(j["schema"], "$.schema") != kScenarioSchema)
    fail("$.schema", "unsupported schema version (expected " + std::to_string(kScenarioSchema) + ")");
  Scenario s;
  if (j.contains("name")) s.name = as_string(j["name"], "$.name");
  if (j.contains("seed")) {
    const std::int64_t seed = as_int(j["seed"], "$.seed");
    if (seed < 0) fail("$.seed", "must be >= 0");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (j.contains("topology")) s.topology = j["topology"];
  const Topology topo = topology_from_json(s.topology, "$.topology");
  if (j.contains("ranks")) s.ranks = as_count(j["ranks"], "$.ranks", 1);
  if (j.contains("rank_map")) {
    const auto& a = as_array(j["rank_map"], "$.rank_map");
    std::vector<DeviceId> devs;
    for (std::size_t i = 0; i < a.size(); ++i) devs.push_back(as_count(a[i], "$.rank_map[" + std::to_string(i) + "]"));
    s.rank_map = devs;
    if (!j.contains("ranks")) s.ranks = static_cast<std::uint32_t>(devs.size());
  }
  try {
    (void)s.resolve_rank_map(topo);
  } catch (const std::runtime_error& e) {
    fail("$.rank_map", e.what());
  }
  if (j.contains("sim")) s.sim = parse_sim(j["sim"], "$.sim");
  if (j.contains("workload")) {
    const json& w = j["workload"];
    expect_keys(w, "$.workload", {"alltoall", "halo", "timestep", "sweep"});
    if (w.contains("alltoall")) {
      s.alltoall = parse_alltoall(w["alltoall"], "$.workload.alltoall");
      if (s.alltoall->sizes.matrix && s.alltoall->sizes.matrix->ranks() != s.ranks)
        fail("$.workload.alltoall.size_matrix", "dimension differs from $.ranks");
    }
    if (w.contains("halo")) s.halo = parse_halo(w["halo"], "$.workload.halo");
    if (w.contains("timestep")) {
      s.timestep = parse_timestep(w["timestep"], "$.workload.timestep");
      if (s.timestep->compute_seconds.size() != s.ranks)
        fail("$.workload.timestep.compute_seconds", "needs one entry per rank");
      if (s.timestep->sizes.matrix && s.timestep->sizes.matrix->ranks() != s.ranks)
        fail("$.workload.timestep.collective.size_matrix", "dimension differs from $.ranks");
    }
    if (w.contains("sweep")) s.sweep = parse_sweep(w["sweep"], "$.workload.sweep");
  }
  if (j.contains("energy")) s.energy = parse_energy(j["energy"], "$.energy");
  if (j.contains("roofline")) s.roofline = parse_roofline(j["roofline"], "$.roofline");
  if (j.contains("output")) s.output = parse_output(j["output"], "$.output");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  Scenario s = parse_scenario(j);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::optional<std::string>& file) {
    if (file && std::filesystem::path(*file).is_relative()) file = (base / *file).string();
  };
  rebase(s.energy.trace);
  rebase(s.roofline.kernels_csv);
  return s;
}

}  // namespace haloflow
