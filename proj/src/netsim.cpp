#include "haloflow/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "haloflow/csv.hpp"
#include "haloflow/errors.hpp"

namespace haloflow {

std::string to_string(SimEventKind k) {
  switch (k) {
    case SimEventKind::Start: return "start";
    case SimEventKind::Rate: return "rate";
    case SimEventKind::SegmentDone: return "segment_done";
    case SimEventKind::Finish: return "finish";
  }
  return "?";
}

std::string to_string(Staging s) {
  return s == Staging::DeviceDirect ? "device_direct" : "host_staged";
}

Staging parse_staging(const std::string& s) {
  if (s == "device_direct" || s == "direct") return Staging::DeviceDirect;
  if (s == "host_staged" || s == "staged") return Staging::HostStaged;
  throw ConfigError("unknown staging mode '" + s + "'");
}

namespace {

// Completion snap: a segment whose remaining bytes fall below this fraction of
// its size after an advance is treated as finished at that instant.
constexpr double kSnap = 1e-12;

// Resource table: both directions of every link, then host memories, then
// device memories.
class Resources {
 public:
  Resources(const Topology& t, double host_mem_bw) {
    const auto& links = t.links();
    for (std::size_t l = 0; l < links.size(); ++l) {
      names_.push_back(t.hop_name({l, true}));
      caps_.push_back(links[l].capacity());
      names_.push_back(t.hop_name({l, false}));
      caps_.push_back(links[l].capacity());
    }
    link_resources_ = names_.size();
    for (NodeId n : t.nodes()) {
      if (n.kind == NodeKind::HostBridge) {
        mem_.emplace(n, names_.size());
        names_.push_back("mem:" + node_name(n));
        caps_.push_back(host_mem_bw);
      }
    }
    for (DeviceId d = 0; d < t.device_count(); ++d) {
      const NodeId n{NodeKind::Device, d};
      mem_.emplace(n, names_.size());
      names_.push_back("mem:" + node_name(n));
      caps_.push_back(t.device_mem_bw());
    }
  }

  std::uint32_t hop(const Hop& h) const {
    return static_cast<std::uint32_t>(2 * h.link + (h.forward ? 0 : 1));
  }
  std::uint32_t memory(NodeId n) const { return static_cast<std::uint32_t>(mem_.at(n)); }
  std::size_t size() const { return caps_.size(); }
  std::size_t link_resources() const { return link_resources_; }
  double capacity(std::size_t r) const { return caps_[r]; }
  const std::string& name(std::size_t r) const { return names_[r]; }

 private:
  std::vector<std::string> names_;
  std::vector<double> caps_;
  std::map<NodeId, std::size_t> mem_;
  std::size_t link_resources_ = 0;
};

using Segment = std::vector<std::uint32_t>;

enum class State { Pending, Active, Done };

struct FlowState {
  std::vector<Segment> segments;
  std::size_t seg = 0;
  double bytes = 0.0;
  double remaining = 0.0;
  double issue = 0.0;  // when the rank hands the message over
  double ready = 0.0;  // issue + latency: transfer may start
  double finish = 0.0;
  // Byte accounting of the current segment in extended precision; the step
  // that completes a segment drains exactly what is left.
  long double moved_total = 0.0L;
  long double left = 0.0L;
  State state = State::Pending;
};

// Splits a host route into link legs separated by one memory copy on every
// host bridge the route visits.
std::vector<Segment> staged_segments(const Topology& t, const Resources& res, DeviceId src,
                                     const Route& r) {
  std::vector<Segment> out;
  Segment leg;
  NodeId at{NodeKind::Device, src};
  for (const Hop& h : r) {
    leg.push_back(res.hop(h));
    const Link& l = t.links()[h.link];
    at = h.forward ? l.b : l.a;
    if (at.kind == NodeKind::HostBridge) {
      out.push_back(std::move(leg));
      leg.clear();
      out.push_back(Segment{res.memory(at)});
    }
  }
  if (!leg.empty()) out.push_back(std::move(leg));
  return out;
}

Segment route_segment(const Resources& res, const Route& r) {
  Segment s;
  for (const Hop& h : r) s.push_back(res.hop(h));
  return s;
}

void validate(const Topology& t, const RankMap& rm, const std::vector<Flow>& flows,
              const SimConfig& cfg) {
  if (!(cfg.alpha_intra >= 0.0) || !(cfg.alpha_inter >= 0.0))
    throw SimulationError("latencies must be >= 0");
  if (cfg.staging == Staging::HostStaged && !(cfg.host_mem_bw > 0.0))
    throw SimulationError("host_mem_bw must be > 0");
  rm.check_against(t);
  std::uint32_t max_phase = 0;
  for (const Flow& f : flows) {
    if (f.src_rank >= rm.ranks() || f.dst_rank >= rm.ranks())
      throw SimulationError("flow " + std::to_string(f.id) + " names rank out of range");
    if (f.bytes < 0) throw SimulationError("flow " + std::to_string(f.id) + " has negative size");
    if (f.kind != FlowKind::RankToRank && f.src_rank != f.dst_rank)
      throw SimulationError("host copy flow " + std::to_string(f.id) + " must have src == dst");
    max_phase = std::max(max_phase, f.phase);
  }
  if (flows.empty()) return;
  std::vector<bool> used(max_phase + 1, false);
  for (const Flow& f : flows) used[f.phase] = true;
  for (std::uint32_t p = 0; p <= max_phase; ++p)
    if (!used[p]) throw SimulationError("phases must form a contiguous range; phase " +
                                        std::to_string(p) + " is empty");
}

double interval_union(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double total = 0.0;
  double lo = 0.0, hi = 0.0;
  bool open = false;
  for (const auto& [a, b] : iv) {
    if (b <= a) continue;
    if (!open) {
      lo = a, hi = b, open = true;
    } else if (a <= hi) {
      hi = std::max(hi, b);
    } else {
      total += hi - lo;
      lo = a, hi = b;
    }
  }
  if (open) total += hi - lo;
  return total;
}

}  // namespace

SimResult simulate_timestep(const Topology& t, const RankMap& rm, const TimestepScenario& ts,
                            const SimConfig& cfg) {
  const std::vector<Flow>& flows = ts.flows;
  validate(t, rm, flows, cfg);
  const std::uint32_t ranks = rm.ranks();
  if (ts.compute_seconds.size() != ranks)
    throw SimulationError("compute_seconds has " + std::to_string(ts.compute_seconds.size()) +
                          " entries for " + std::to_string(ranks) + " ranks");
  for (double c : ts.compute_seconds)
    if (!(c >= 0.0) || !std::isfinite(c)) throw SimulationError("compute_seconds must be finite and >= 0");

  const Resources res(t, cfg.host_mem_bw);
  std::vector<FlowState> st(flows.size());
  std::uint32_t phases = 0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const Flow& f = flows[i];
    phases = std::max(phases, f.phase + 1);
    FlowState& s = st[i];
    s.bytes = static_cast<double>(f.bytes);
    const DeviceId sd = rm.device(f.src_rank);
    const DeviceId dd = rm.device(f.dst_rank);
    bool inter = false;
    switch (f.kind) {
      case FlowKind::DeviceToHost:
        s.segments.push_back(route_segment(res, t.device_to_host(sd)));
        break;
      case FlowKind::HostToDevice: {
        Route r = t.device_to_host(sd);
        r.front().forward = !r.front().forward;
        s.segments.push_back(route_segment(res, r));
        break;
      }
      case FlowKind::RankToRank:
        if (sd == dd) {
          s.segments.push_back(Segment{res.memory({NodeKind::Device, sd})});
        } else if (cfg.staging == Staging::DeviceDirect) {
          const Route& r = t.route(sd, dd);
          inter = t.crosses_nic(r);
          s.segments.push_back(route_segment(res, r));
        } else {
          const Route& r = t.host_route(sd, dd);
          inter = t.crosses_nic(r);
          s.segments = staged_segments(t, res, sd, r);
        }
        break;
    }
    s.ready = inter ? cfg.alpha_inter : cfg.alpha_intra;  // latency; made absolute below
  }

  SimResult out;
  out.flow_start.assign(flows.size(), 0.0);
  out.flow_finish.assign(flows.size(), 0.0);
  out.flow_delivered.assign(flows.size(), 0.0);
  out.phase_finish.assign(phases, 0.0);
  std::vector<double> peak(res.link_resources(), 0.0);

  std::vector<std::vector<std::size_t>> by_phase(phases);
  for (std::size_t i = 0; i < flows.size(); ++i) by_phase[flows[i].phase].push_back(i);

  auto log = [&](double time, SimEventKind kind, std::size_t i, std::string resource, double rate) {
    if (cfg.record_events) out.events.push_back({time, kind, flows[i].id, std::move(resource), rate});
  };

  std::vector<std::uint32_t> count(res.size(), 0);
  std::vector<double> load(res.size(), 0.0);
  std::vector<double> rate(flows.size(), 0.0);
  double phase_start = 0.0;
  for (std::uint32_t p = 0; p < phases; ++p) {
    const auto& members = by_phase[p];
    for (std::size_t i : members) {
      FlowState& s = st[i];
      s.issue = std::max(phase_start, ts.compute_seconds[flows[i].src_rank]);
      s.ready = s.issue + s.ready;
    }
    double now = phase_start;
    std::size_t done = 0;
    while (done < members.size()) {
      for (std::size_t i : members) {
        FlowState& s = st[i];
        if (s.state != State::Pending || s.ready > now) continue;
        out.flow_start[i] = s.ready;
        log(s.ready, SimEventKind::Start, i, "", 0.0);
        if (s.bytes == 0.0) {
          s.state = State::Done;
          s.finish = s.ready;
          ++done;
          log(s.finish, SimEventKind::Finish, i, "", 0.0);
        } else {
          s.state = State::Active;
          s.remaining = s.bytes;
          s.left = s.bytes;
        }
      }
      if (done == members.size()) break;

      std::fill(count.begin(), count.end(), 0);
      for (std::size_t i : members)
        if (st[i].state == State::Active)
          for (std::uint32_t r : st[i].segments[st[i].seg]) ++count[r];

      double next = std::numeric_limits<double>::infinity();
      std::fill(load.begin(), load.end(), 0.0);
      for (std::size_t i : members) {
        FlowState& s = st[i];
        if (s.state == State::Pending) next = std::min(next, s.ready);
        if (s.state != State::Active) continue;
        double r = std::numeric_limits<double>::infinity();
        for (std::uint32_t k : s.segments[s.seg]) r = std::min(r, res.capacity(k) / count[k]);
        rate[i] = r;
        next = std::min(next, now + s.remaining / r);
        for (std::uint32_t k : s.segments[s.seg]) {
          load[k] += r;
          if (cfg.record_events) log(now, SimEventKind::Rate, i, res.name(k), r);
        }
      }
      for (std::size_t k = 0; k < res.link_resources(); ++k)
        peak[k] = std::max(peak[k], load[k] / res.capacity(k));

      const double dt = next - now;
      for (std::size_t i : members) {
        FlowState& s = st[i];
        if (s.state != State::Active) continue;
        const double moved = rate[i] * dt;
        const bool last = s.seg + 1 == s.segments.size();
        const bool finished = now + s.remaining / rate[i] == next || s.remaining - moved <= kSnap * s.bytes;
        if (!finished) {
          s.remaining -= moved;
          s.moved_total += moved;
          s.left -= moved;
          continue;
        }
        s.moved_total += s.left;
        s.left = 0.0L;
        if (!last) {
          ++s.seg;
          s.remaining = s.bytes;
          s.moved_total = 0.0L;
          s.left = s.bytes;
          log(next, SimEventKind::SegmentDone, i, "", 0.0);
          continue;
        }
        s.state = State::Done;
        s.finish = next;
        ++done;
        log(next, SimEventKind::Finish, i, "", 0.0);
      }
      now = next;
    }
    double end = phase_start;
    for (std::size_t i : members) end = std::max(end, st[i].finish);
    out.phase_finish[p] = end;
    phase_start = end;
  }

  for (std::size_t i = 0; i < flows.size(); ++i) {
    out.flow_finish[i] = st[i].finish;
    out.flow_delivered[i] = static_cast<double>(st[i].moved_total);
  }

  double comm_end = phases ? out.phase_finish.back() : 0.0;
  double makespan = comm_end;
  for (double c : ts.compute_seconds) makespan = std::max(makespan, c);
  out.makespan = makespan;

  std::vector<std::vector<std::pair<double, double>>> activity(ranks);
  for (std::uint32_t r = 0; r < ranks; ++r)
    if (ts.compute_seconds[r] > 0.0) activity[r].emplace_back(0.0, ts.compute_seconds[r]);
  for (std::size_t i = 0; i < flows.size(); ++i) {
    activity[flows[i].src_rank].emplace_back(st[i].issue, st[i].finish);
    if (flows[i].dst_rank != flows[i].src_rank)
      activity[flows[i].dst_rank].emplace_back(st[i].issue, st[i].finish);
  }
  out.busy_fraction.assign(ranks, 0.0);
  out.compute_fraction.assign(ranks, 0.0);
  for (std::uint32_t r = 0; r < ranks; ++r) {
    double horizon = makespan;
    if (!ts.barrier_at_end) {
      horizon = 0.0;
      for (const auto& [a, b] : activity[r]) horizon = std::max(horizon, b);
    }
    if (horizon <= 0.0) continue;
    out.busy_fraction[r] = std::min(1.0, interval_union(activity[r]) / horizon);
    out.compute_fraction[r] = std::min(1.0, ts.compute_seconds[r] / horizon);
  }

  for (std::size_t k = 0; k < res.link_resources(); ++k)
    out.links.push_back({res.name(k), res.capacity(k), std::min(1.0, peak[k])});
  return out;
}

SimResult simulate(const Topology& t, const RankMap& rm, const std::vector<Flow>& flows,
                   const SimConfig& cfg) {
  TimestepScenario ts;
  ts.compute_seconds.assign(rm.ranks(), 0.0);
  ts.flows = flows;
  return simulate_timestep(t, rm, ts, cfg);
}

void write_event_log_csv(std::ostream& os, const std::vector<SimEvent>& events) {
  csv::Writer w(os);
  w.row({"time", "event", "flow_id", "link", "rate"});
  for (const SimEvent& e : events)
    w.row({csv::num(e.time), to_string(e.kind), csv::num(e.flow_id), e.resource, csv::num(e.rate)});
}

}  // namespace haloflow
