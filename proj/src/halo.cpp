#include "haloflow/halo.hpp"

#include <algorithm>
#include <thread>

#include "haloflow/errors.hpp"

namespace haloflow {

std::string to_string(OverlapMode m) {
  switch (m) {
    case OverlapMode::None: return "none";
    case OverlapMode::MaskArray: return "mask_array";
    case OverlapMode::IndirectionArray: return "indirection_array";
  }
  return "?";
}

OverlapMode parse_overlap(const std::string& s) {
  if (s == "none") return OverlapMode::None;
  if (s == "mask_array" || s == "mask") return OverlapMode::MaskArray;
  if (s == "indirection_array" || s == "indirection") return OverlapMode::IndirectionArray;
  throw ConfigError("unknown overlap mode '" + s + "'");
}

SizeMatrix HaloPlan::halo_bytes(std::int64_t bytes_per_element) const {
  if (bytes_per_element < 0) throw ConfigError("bytes_per_element must be >= 0");
  SizeMatrix m(ranks());
  for (std::uint32_t r = 0; r < ranks(); ++r)
    for (std::uint32_t q = 0; q < ranks(); ++q)
      m.set(r, q, static_cast<std::int64_t>(rank[r].send_index[q].size()) * bytes_per_element);
  return m;
}

namespace {

void for_each_rank(std::uint32_t ranks, ExecMode mode, const std::function<void(std::uint32_t)>& fn) {
  if (mode == ExecMode::RoundBased || ranks == 1) {
    for (std::uint32_t r = 0; r < ranks; ++r) fn(r);
    return;
  }
  std::vector<std::exception_ptr> errors(ranks);
  {
    std::vector<std::jthread> workers;
    for (std::uint32_t r = 0; r < ranks; ++r)
      workers.emplace_back([&, r] {
        try {
          fn(r);
        } catch (...) {
          errors[r] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void finish_rank_plan(RankPlan& rp) {
  const std::size_t p = rp.send_index.size();
  rp.send_counts.assign(p, 0);
  rp.send_displs.assign(p, 0);
  rp.recv_counts.assign(p, 0);
  rp.recv_displs.assign(p, 0);
  std::uint32_t so = 0, ro = 0;
  for (std::size_t q = 0; q < p; ++q) {
    rp.send_counts[q] = static_cast<std::uint32_t>(rp.send_index[q].size());
    rp.recv_counts[q] = static_cast<std::uint32_t>(rp.recv_slot[q].size());
    rp.send_displs[q] = so;
    rp.recv_displs[q] = ro;
    so += rp.send_counts[q];
    ro += rp.recv_counts[q];
  }
  rp.boundary_mask.assign(rp.owned_count, 0);
  for (const auto& list : rp.send_index)
    for (std::uint32_t i : list) rp.boundary_mask[i] = 1;
  rp.boundary.clear();
  rp.interior.clear();
  for (std::uint32_t i = 0; i < rp.owned_count; ++i)
    (rp.boundary_mask[i] ? rp.boundary : rp.interior).push_back(i);
}

// Per source rank, the peers in the order the schedule issues them (self excluded).
std::vector<std::vector<std::uint32_t>> send_orders(const HaloPlan& plan, ScheduleKind kind) {
  const auto flows = build_alltoall(kind, plan.halo_bytes(1));
  std::vector<std::vector<std::uint32_t>> order(plan.ranks());
  for (const Flow& f : flows)
    if (f.src_rank != f.dst_rank) order[f.src_rank].push_back(f.dst_rank);
  return order;
}

void check_fields(const Fields& fields, const HaloPlan& plan) {
  if (fields.size() != plan.ranks())
    throw ProtocolError("expected " + std::to_string(plan.ranks()) + " fields, got " +
                        std::to_string(fields.size()));
  for (std::uint32_t r = 0; r < plan.ranks(); ++r) {
    const Field& f = fields[r];
    if (f.rank() != r || f.owned_count() != plan.rank[r].owned_count ||
        f.ghost_count() != plan.rank[r].ghost_count)
      throw ProtocolError("field " + std::to_string(r) + " does not match the plan's layout");
  }
}

}  // namespace

HaloPlan build_plan(const Partition& part, Router& router, ExecMode mode) {
  const std::uint32_t p = part.ranks();
  if (router.ranks() != p)
    throw ConfigError("router has " + std::to_string(router.ranks()) + " ranks, partition " +
                      std::to_string(p));
  HaloPlan plan;
  plan.partition_id = part.id();
  plan.rank.resize(p);

  // needed[r][s]: globals rank r must receive from owner s, ascending.
  std::vector<std::vector<std::vector<std::int64_t>>> needed(p, std::vector<std::vector<std::int64_t>>(p));
  std::vector<std::vector<std::int64_t>> incoming(p, std::vector<std::int64_t>(p, 0));
  for (std::uint32_t r = 0; r < p; ++r) {
    const RankDomain& d = part.domain(r);
    RankPlan& rp = plan.rank[r];
    rp.owned_count = static_cast<std::uint32_t>(d.owned.size());
    rp.ghost_count = static_cast<std::uint32_t>(d.ghosts.size());
    rp.send_index.assign(p, {});
    rp.recv_slot.assign(p, {});
    for (std::size_t k = 0; k < d.ghosts.size(); ++k) {
      const Ghost& g = d.ghosts[k];
      if (g.owner == r)
        throw ProtocolError("rank " + std::to_string(r) + " lists its own element " +
                            std::to_string(g.global) + " as a ghost");
      needed[r][g.owner].push_back(g.global);
      rp.recv_slot[g.owner].push_back(static_cast<std::uint32_t>(d.owned.size() + k));
    }
  }

  // Round 1: request counts.
  run_round(
      router, mode,
      [&](std::uint32_t r) {
        for (std::uint32_t s = 0; s < p; ++s)
          if (s != r)
            router.send(r, s, {Tag::Counts, std::vector<std::int64_t>{static_cast<std::int64_t>(needed[r][s].size())}});
      },
      [&](std::uint32_t r) {
        for (std::uint32_t s = 0; s < p; ++s) {
          if (s == r) continue;
          const auto m = router.recv(r, s, Tag::Counts);
          const auto& v = std::get<std::vector<std::int64_t>>(m.payload);
          if (v.size() != 1 || v[0] < 0) throw ProtocolError("malformed count message");
          incoming[r][s] = v[0];
        }
        router.complete_round(r);
      });

  // Round 2: requested global indices; owners translate to local slots.
  run_round(
      router, mode,
      [&](std::uint32_t r) {
        for (std::uint32_t s = 0; s < p; ++s)
          if (s != r && !needed[r][s].empty()) router.send(r, s, {Tag::Indices, needed[r][s]});
      },
      [&](std::uint32_t r) {
        RankPlan& rp = plan.rank[r];
        for (std::uint32_t s = 0; s < p; ++s) {
          if (s == r || incoming[r][s] == 0) continue;
          const auto m = router.recv(r, s, Tag::Indices);
          const auto& req = std::get<std::vector<std::int64_t>>(m.payload);
          if (static_cast<std::int64_t>(req.size()) != incoming[r][s])
            throw ProtocolError("rank " + std::to_string(s) + " announced " +
                                std::to_string(incoming[r][s]) + " indices but sent " +
                                std::to_string(req.size()));
          auto& out = rp.send_index[s];
          out.reserve(req.size());
          for (std::int64_t g : req) {
            const auto local = part.owned_index(r, g);
            if (!local)
              throw ProtocolError("rank " + std::to_string(s) + " requested element " +
                                  std::to_string(g) + " from rank " + std::to_string(r) +
                                  ", which does not own it");
            out.push_back(*local);
          }
        }
        finish_rank_plan(rp);
        router.complete_round(r);
      });
  return plan;
}

const HaloPlan& PlanCache::get(const Partition& part, Router& router, ExecMode mode) {
  auto it = plans_.find(part.id());
  if (it != plans_.end()) return it->second;
  ++builds_;
  return plans_.emplace(part.id(), build_plan(part, router, mode)).first->second;
}

Fields scatter_global(const Partition& part, std::span<const double> global) {
  if (global.size() != part.elements())
    throw ConfigError("global array has " + std::to_string(global.size()) + " values for " +
                      std::to_string(part.elements()) + " elements");
  Fields fields;
  for (std::uint32_t r = 0; r < part.ranks(); ++r) {
    const RankDomain& d = part.domain(r);
    Field f(r, d.owned.size(), d.ghosts.size());
    for (std::size_t i = 0; i < d.owned.size(); ++i)
      f.values()[i] = global[static_cast<std::size_t>(d.owned[i])];
    fields.push_back(std::move(f));
  }
  return fields;
}

std::vector<double> gather_global(const Partition& part, const Fields& fields) {
  if (fields.size() != part.ranks()) throw ProtocolError("field count differs from rank count");
  std::vector<double> out(part.elements(), 0.0);
  for (std::uint32_t r = 0; r < part.ranks(); ++r) {
    const RankDomain& d = part.domain(r);
    if (fields[r].owned_count() != d.owned.size()) throw ProtocolError("field layout mismatch");
    for (std::size_t i = 0; i < d.owned.size(); ++i)
      out[static_cast<std::size_t>(d.owned[i])] = fields[r].owned()[i];
  }
  return out;
}

double checksum(std::span<const double> global) {
  double s = 0.0;
  for (double v : global) s += v;
  return s;
}

std::vector<double> pack(const Field& field, const HaloPlan& plan, std::uint32_t dest,
                         PackAudit* audit) {
  const std::uint32_t r = field.rank();
  if (r >= plan.ranks() || dest >= plan.ranks()) throw ProtocolError("pack: rank out of range");
  const RankPlan& rp = plan.rank[r];
  if (field.owned_count() != rp.owned_count) throw ProtocolError("pack: field does not match plan");
  const auto& idx = rp.send_index[dest];
  std::vector<double> buf(idx.size());
  const std::uint64_t reads = kernels::gather_omp(field.owned(), idx, buf);
  if (audit) {
    audit->calls += 1;
    audit->reads += reads;
    audit->packed += buf.size();
    if (reads != buf.size()) audit->mismatched_calls += 1;
  }
  return buf;
}

void unpack(Field& field, const HaloPlan& plan, std::uint32_t src, std::span<const double> buffer) {
  const std::uint32_t r = field.rank();
  if (r >= plan.ranks() || src >= plan.ranks()) throw ProtocolError("unpack: rank out of range");
  const RankPlan& rp = plan.rank[r];
  if (field.ghost_count() != rp.ghost_count) throw ProtocolError("unpack: field does not match plan");
  const auto& slots = rp.recv_slot[src];
  if (buffer.size() != slots.size())
    throw ProtocolError("unpack: rank " + std::to_string(r) + " expected " +
                        std::to_string(slots.size()) + " values from rank " + std::to_string(src) +
                        ", got " + std::to_string(buffer.size()));
  kernels::scatter_serial(buffer, slots, field.values());
}

void exchange(Fields& fields, const HaloPlan& plan, Router& router, const ExchangeOptions& opt) {
  check_fields(fields, plan);
  if (router.ranks() != plan.ranks()) throw ConfigError("router size differs from plan");
  const auto order = send_orders(plan, opt.schedule);
  run_round(
      router, opt.mode,
      [&](std::uint32_t r) {
        for (std::uint32_t q : order[r]) router.send(r, q, {Tag::Halo, pack(fields[r], plan, q, opt.audit)});
      },
      [&](std::uint32_t r) {
        for (std::uint32_t s = 0; s < plan.ranks(); ++s) {
          if (s == r || plan.rank[r].recv_slot[s].empty()) continue;
          const auto m = router.recv(r, s, Tag::Halo);
          unpack(fields[r], plan, s, std::get<std::vector<double>>(m.payload));
        }
        fields[r].ghosts_valid = true;
        router.complete_round(r);
      });
}

kernels::LocalCsr local_stencil(const GlobalGrid& grid, const Partition& part, std::uint32_t rank) {
  kernels::LocalCsr csr;
  const RankDomain& d = part.domain(rank);
  csr.offsets.reserve(d.owned.size() + 1);
  for (std::int64_t e : d.owned) {
    for (std::int64_t g : grid.neighbors(e)) {
      const auto local = part.local_index(rank, g);
      if (!local)
        throw ProtocolError("rank " + std::to_string(rank) + " has no slot for neighbour " +
                            std::to_string(g) + " of element " + std::to_string(e));
      csr.cols.push_back(*local);
    }
    csr.offsets.push_back(static_cast<std::uint32_t>(csr.cols.size()));
  }
  return csr;
}

void stencil_step(Fields& fields, const GlobalGrid& grid, const Partition& part, const HaloPlan& plan,
                  Router& router, OverlapMode mode, const ExchangeOptions& opt) {
  check_fields(fields, plan);
  if (plan.ranks() != part.ranks())
    throw ConfigError("plan was built for a different partition");
  const std::uint32_t p = plan.ranks();
  std::vector<kernels::LocalCsr> csr(p);
  for (std::uint32_t r = 0; r < p; ++r) csr[r] = local_stencil(grid, part, r);

  if (mode == OverlapMode::None) {
    exchange(fields, plan, router, opt);
    for_each_rank(p, opt.mode, [&](std::uint32_t r) {
      std::vector<double> out(fields[r].owned_count());
      kernels::neighbor_mean_omp(csr[r], fields[r].values(), out);
      std::copy(out.begin(), out.end(), fields[r].owned().begin());
      fields[r].ghosts_valid = false;
    });
    return;
  }

  const bool stale = std::any_of(fields.begin(), fields.end(), [](const Field& f) { return !f.ghosts_valid; });
  if (stale) exchange(fields, plan, router, opt);

  const auto order = send_orders(plan, opt.schedule);
  Fields next = fields;
  run_round(
      router, opt.mode,
      [&](std::uint32_t r) {
        const RankPlan& rp = plan.rank[r];
        auto out = next[r].owned();
        if (mode == OverlapMode::MaskArray)
          kernels::neighbor_mean_masked_omp(csr[r], fields[r].values(), out, rp.boundary_mask, true);
        else
          kernels::neighbor_mean_indexed_omp(csr[r], fields[r].values(), out, rp.boundary);
        for (std::uint32_t q : order[r]) router.send(r, q, {Tag::Halo, pack(next[r], plan, q, opt.audit)});
      },
      [&](std::uint32_t r) {
        const RankPlan& rp = plan.rank[r];
        auto out = next[r].owned();
        if (mode == OverlapMode::MaskArray)
          kernels::neighbor_mean_masked_omp(csr[r], fields[r].values(), out, rp.boundary_mask, false);
        else
          kernels::neighbor_mean_indexed_omp(csr[r], fields[r].values(), out, rp.interior);
        for (std::uint32_t s = 0; s < p; ++s) {
          if (s == r || rp.recv_slot[s].empty()) continue;
          const auto m = router.recv(r, s, Tag::Halo);
          unpack(next[r], plan, s, std::get<std::vector<double>>(m.payload));
        }
        next[r].ghosts_valid = true;
        router.complete_round(r);
      });
  fields = std::move(next);
}

StagingCost staged_vs_direct_cost(const Partition& part, const HaloPlan& plan,
                                  std::int64_t bytes_per_element, const Topology& t,
                                  const RankMap& rm, const SimConfig& cfg,
                                  std::vector<double> compute_seconds) {
  const std::uint32_t p = plan.ranks();
  if (rm.ranks() != p || part.ranks() != p)
    throw ConfigError("rank map, partition and plan disagree on the rank count");
  if (compute_seconds.empty()) compute_seconds.assign(p, 0.0);

  const auto halo = build_alltoall(ScheduleKind::RotatedConcurrent, plan.halo_bytes(bytes_per_element));

  TimestepScenario direct{compute_seconds, halo, true};
  SimConfig direct_cfg = cfg;
  direct_cfg.staging = Staging::DeviceDirect;

  // Host-staged: whole local field down, halo through host memory, whole field up.
  TimestepScenario staged{compute_seconds, {}, true};
  const std::uint32_t halo_phase = halo.empty() ? 0u : 1u;
  std::uint64_t id = 0;
  for (std::uint32_t r = 0; r < p; ++r) {
    Flow f;
    f.id = id++;
    f.src_rank = f.dst_rank = r;
    f.bytes = static_cast<std::int64_t>(part.domain(r).local_size()) * bytes_per_element;
    f.kind = FlowKind::DeviceToHost;
    f.phase = 0;
    staged.flows.push_back(f);
  }
  for (Flow f : halo) {
    f.id = id++;
    f.phase = 1;
    staged.flows.push_back(f);
  }
  for (std::uint32_t r = 0; r < p; ++r) {
    Flow f;
    f.id = id++;
    f.src_rank = f.dst_rank = r;
    f.bytes = static_cast<std::int64_t>(part.domain(r).local_size()) * bytes_per_element;
    f.kind = FlowKind::HostToDevice;
    f.phase = halo_phase + 1;
    staged.flows.push_back(f);
  }
  SimConfig staged_cfg = cfg;
  staged_cfg.staging = Staging::HostStaged;

  StagingCost out;
  out.direct = simulate_timestep(t, rm, direct, direct_cfg);
  out.staged = simulate_timestep(t, rm, staged, staged_cfg);
  out.direct_s = out.direct.makespan;
  out.staged_s = out.staged.makespan;
  return out;
}

}  // namespace haloflow
