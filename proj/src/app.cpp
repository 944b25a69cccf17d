#include "haloflow/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "haloflow/csv.hpp"
#include "haloflow/errors.hpp"

namespace haloflow {

using ojson = nlohmann::ordered_json;

const ReportTable& Report::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw ConfigError("report has no table '" + name + "'");
}

namespace {

std::string cell_text(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return csv::num(v.get<std::uint64_t>());
  if (v.is_number_integer()) return csv::num(v.get<std::int64_t>());
  if (v.is_number_float()) return csv::num(v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

void write_table_csv(std::ostream& os, const ReportTable& t) {
  csv::Writer w(os);
  w.row(t.header);
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (const auto& v : row) cells.push_back(cell_text(v));
    w.row(cells);
  }
}

void append(Report& into, Report from) {
  for (auto& t : from.tables) into.tables.push_back(std::move(t));
  for (auto& w : from.warnings) into.warnings.push_back(std::move(w));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> owned_share(const Partition& part, double total) {
  std::vector<double> c(part.ranks());
  for (std::uint32_t r = 0; r < part.ranks(); ++r)
    c[r] = total * static_cast<double>(part.domain(r).owned.size()) / static_cast<double>(part.elements());
  return c;
}

struct HaloRun {
  std::vector<double> checksums;  // after each step
  std::vector<double> final_values;
};

HaloRun run_halo_engine(const GlobalGrid& grid, std::uint32_t ranks, std::uint32_t steps, OverlapMode mode,
                        std::uint64_t seed) {
  const Partition part = partition_block(grid, ranks);
  Router router(ranks);
  const HaloPlan plan = build_plan(part, router);
  const auto init = seeded_values(grid.size(), seed);
  Fields fields = scatter_global(part, init);
  HaloRun out;
  for (std::uint32_t s = 0; s < steps; ++s) {
    stencil_step(fields, grid, part, plan, router, mode);
    out.checksums.push_back(checksum(gather_global(part, fields)));
  }
  out.final_values = gather_global(part, fields);
  return out;
}

}  // namespace

void write_report(std::ostream& os, const Report& r, const std::string& format) {
  if (format == "json") {
    ojson j;
    j["scenario"] = r.scenario;
    j["tables"] = ojson::object();
    for (const auto& t : r.tables) {
      ojson rows = ojson::array();
      for (const auto& row : t.rows) {
        ojson o;
        for (std::size_t c = 0; c < t.header.size(); ++c) o[t.header[c]] = row.at(c);
        rows.push_back(std::move(o));
      }
      j["tables"][t.name] = std::move(rows);
    }
    j["warnings"] = r.warnings;
    os << j.dump(2) << '\n';
    return;
  }
  if (format != "csv") throw ConfigError("unknown output format '" + format + "'");
  if (r.tables.size() == 1) {
    write_table_csv(os, r.tables.front());
    return;
  }
  for (std::size_t i = 0; i < r.tables.size(); ++i) {
    if (i) os << '\n';
    os << "# " << r.tables[i].name << '\n';
    write_table_csv(os, r.tables[i]);
  }
}

std::vector<double> seeded_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return v;
}

std::vector<double> imbalanced_loads(double total_seconds, std::uint32_t ranks, double factor) {
  if (ranks == 0) throw ConfigError("load split needs at least one rank");
  if (!(factor >= 0.0 && factor <= 1.0)) throw ConfigError("imbalance factor must lie in [0, 1]");
  const double m = total_seconds / ranks;
  std::vector<double> loads(ranks, m);
  if (ranks > 1)
    for (std::uint32_t r = 0; r < ranks; ++r)
      loads[r] = m * (1.0 + factor * (2.0 * r / (ranks - 1) - 1.0));
  return loads;
}

Report run_alltoall(const Scenario& s) {
  const AlltoallWorkload w = s.alltoall.value_or(AlltoallWorkload{});
  const Topology topo = topology_from_json(s.topology);
  const RankMap rm = s.resolve_rank_map(topo);
  const auto reps = compare_schedules(topo, rm, w.sizes.resolve(s.ranks), w.schedules, s.sim);
  double best = reps.front().makespan;
  for (const auto& r : reps) best = std::min(best, r.makespan);
  ReportTable t{"alltoall", {"topology", "ranks", "schedule", "makespan_s", "phases", "relative_to_best", "per_phase_s"}, {}};
  for (const auto& r : reps) {
    std::string phases;
    for (std::size_t i = 0; i < r.phase_seconds.size(); ++i) phases += (i ? ";" : "") + csv::num(r.phase_seconds[i]);
    t.rows.push_back({topo.name(), s.ranks, to_string(r.kind), r.makespan, r.phase_seconds.size(),
                      best > 0.0 ? r.makespan / best : 1.0, phases});
  }
  return {s.name, {std::move(t)}, {}};
}

Report run_halo(const Scenario& s) {
  const HaloWorkload w = s.halo.value_or(HaloWorkload{});
  const GlobalGrid grid = grid_fixture(w.grid, s.seed);
  if (s.ranks > grid.size())
    throw ConfigError("halo needs at most one rank per element (" + std::to_string(grid.size()) + ")");
  const HaloRun dist = run_halo_engine(grid, s.ranks, w.steps, w.overlap, s.seed);
  const HaloRun single = run_halo_engine(grid, 1, w.steps, OverlapMode::None, s.seed);

  ReportTable sums{"halo_checksums", {"grid", "ranks", "overlap", "step", "checksum", "single_rank_checksum", "identical"}, {}};
  for (std::uint32_t i = 0; i < w.steps; ++i)
    sums.rows.push_back({w.grid, s.ranks, to_string(w.overlap), i + 1, dist.checksums[i], single.checksums[i],
                         dist.checksums[i] == single.checksums[i]});
  const bool all_equal = dist.final_values == single.final_values;

  const Topology topo = topology_from_json(s.topology);
  const RankMap rm = s.resolve_rank_map(topo);
  const Partition part = partition_block(grid, s.ranks);
  Router router(s.ranks);
  const HaloPlan plan = build_plan(part, router);
  const StagingCost cost =
      staged_vs_direct_cost(part, plan, w.bytes_per_element, topo, rm, s.sim, owned_share(part, w.compute_seconds_total));
  std::int64_t owned_boundary = 0;
  for (const auto& rp : plan.rank) owned_boundary += static_cast<std::int64_t>(rp.boundary.size());
  ReportTable timing{"halo_staging",
                     {"topology", "ranks", "bytes_per_element", "halo_fraction", "direct_s", "staged_s", "ratio",
                      "fields_identical"},
                     {}};
  timing.rows.push_back({topo.name(), s.ranks, w.bytes_per_element,
                         static_cast<double>(owned_boundary) / static_cast<double>(grid.size()), cost.direct_s,
                         cost.staged_s, cost.direct_s > 0.0 ? cost.staged_s / cost.direct_s : 0.0, all_equal});
  return {s.name, {std::move(sums), std::move(timing)}, {}};
}

Report run_timestep(const Scenario& s) {
  if (!s.timestep) throw ConfigError("scenario has no timestep workload");
  const TimestepWorkload& w = *s.timestep;
  const Topology topo = topology_from_json(s.topology);
  const RankMap rm = s.resolve_rank_map(topo);
  const TimestepScenario ts{w.compute_seconds, build_alltoall(w.schedule, w.sizes.resolve(s.ranks)), w.barrier_at_end};
  const SimResult r = simulate_timestep(topo, rm, ts, s.sim);
  ReportTable t{"timestep", {"rank", "device", "compute_s", "busy_fraction", "compute_fraction", "makespan_s"}, {}};
  for (std::uint32_t k = 0; k < s.ranks; ++k)
    t.rows.push_back({k, rm.device(k), w.compute_seconds[k], r.busy_fraction[k], r.compute_fraction[k], r.makespan});
  return {s.name, {std::move(t)}, {}};
}

Report run_sweep(const Scenario& s) {
  const SweepWorkload w = s.sweep.value_or(SweepWorkload{});
  ReportTable t{"sweep",
                {"topology", "ranks", "makespan_s", "speedup", "ideal_speedup", "efficiency", "imbalance"},
                {}};
  for (const auto& tj : w.topologies) {
    const Topology topo = topology_from_json(tj);
    double base_time = 0.0;
    std::uint32_t base_ranks = 0;
    for (std::uint32_t p : w.ranks) {
      const double f = w.imbalance.count(p) ? w.imbalance.at(p) : 0.0;
      const RankMap rm = RankMap::round_robin(p, topo.device_count());
      const SizeMatrix sizes(p, static_cast<std::int64_t>(std::llround(w.total_bytes / (static_cast<double>(p) * p))));
      const TimestepScenario ts{imbalanced_loads(w.compute_seconds_total, p, f), build_alltoall(w.schedule, sizes), true};
      const double m = simulate_timestep(topo, rm, ts, s.sim).makespan;
      if (base_ranks == 0) {
        base_time = m;
        base_ranks = p;
      }
      const double speedup = m > 0.0 ? base_time / m : 1.0;
      const double ideal = static_cast<double>(p) / base_ranks;
      t.rows.push_back({topo.name(), p, m, speedup, ideal, speedup / ideal, f});
    }
  }
  return {s.name, {std::move(t)}, {}};
}

Report run_roofline(const Scenario& s, std::string* svg) {
  std::vector<KernelProfile> kernels = s.roofline.kernels;
  if (s.roofline.kernels_csv) {
    std::ifstream in(*s.roofline.kernels_csv);
    if (!in) throw IoError("cannot open kernel profile '" + *s.roofline.kernels_csv + "'");
    for (auto& k : read_kernel_profiles(in)) kernels.push_back(std::move(k));
  }
  if (kernels.empty()) kernels = advection_kernel_fixture(s.roofline.machine);
  const RooflineReport rep = roofline_report(s.roofline.machine, kernels);
  ReportTable t{"roofline", {"name", "ai", "achieved_flops", "attainable_flops", "percent", "time_share", "bound"}, {}};
  for (const auto& row : rep.rows)
    t.rows.push_back({row.name, row.ai, row.achieved, row.attainable, row.percent, row.time_share,
                      row.memory_bound ? "memory" : "compute"});
  if (svg) {
    std::ostringstream os;
    write_roofline_svg(os, rep);
    *svg = os.str();
  }
  return {s.name, {std::move(t)}, rep.warnings};
}

Report run_energy(const Scenario& s) {
  const EnergyConfig& e = s.energy;
  Report out{s.name, {}, {}};
  const bool step = e.avg_watts || e.step_seconds || e.devices;
  if (step) {
    if (!(e.avg_watts && e.step_seconds && e.devices))
      throw ConfigError("energy per step needs avg_watts, step_s and devices together");
    ReportTable t{"energy_step", {"avg_watts", "step_s", "devices", "energy_j"}, {}};
    t.rows.push_back({*e.avg_watts, *e.step_seconds, *e.devices, energy_per_step(*e.avg_watts, *e.step_seconds, *e.devices)});
    out.tables.push_back(std::move(t));
  }
  if (e.trace) {
    std::ifstream in(*e.trace);
    if (!in) throw IoError("cannot open power trace '" + *e.trace + "'");
    const PowerTrace trace = read_power_trace(in);
    const auto avg = device_averages(trace);
    ReportTable t{"power_trace", {"device", "average_watts"}, {}};
    for (const auto& [d, wts] : avg) t.rows.push_back({std::to_string(d), wts});
    t.rows.push_back({"all", overall_average(avg)});
    out.tables.push_back(std::move(t));
  }
  if (e.series) {
    const EnergySeriesWorkload& w = *e.series;
    const GlobalGrid grid = grid_fixture(w.grid, s.seed);
    const Topology topo = topology_from_json(s.topology);
    std::vector<EnergyRun> runs;
    for (std::uint32_t p : w.ranks) {
      if (p > topo.device_count())
        throw ConfigError("energy series rank count " + std::to_string(p) + " exceeds the machine's " +
                          std::to_string(topo.device_count()) + " devices");
      const Partition part = partition_block(grid, p);
      Router router(p);
      const HaloPlan plan = build_plan(part, router);
      const RankMap rm = RankMap::round_robin(p, topo.device_count());
      const StagingCost cost = staged_vs_direct_cost(part, plan, w.bytes_per_element, topo, rm, s.sim,
                                                     owned_share(part, w.compute_seconds_total));
      runs.push_back({p, cost.direct.makespan, cost.direct.compute_fraction});
    }
    PowerModel pm = e.model;
    if (!w.anchors.empty()) {
      auto util_at = [&](std::uint32_t p) {
        for (const auto& r : runs)
          if (r.devices == p) return mean(r.utilisation);
        throw ConfigError("anchor rank count missing from series");
      };
      pm = fit_power_model(util_at(w.anchors[0].ranks), w.anchors[0].watts, util_at(w.anchors[1].ranks),
                           w.anchors[1].watts);
    }
    ReportTable model{"power_model", {"p_idle", "p_max", "fitted"}, {}};
    model.rows.push_back({pm.p_idle, pm.p_max, !w.anchors.empty()});
    out.tables.push_back(std::move(model));
    ReportTable t{"energy_series", {"devices", "step_s", "mean_utilisation", "mean_watts", "energy_j"}, {}};
    for (const auto& r : energy_vs_time_series(runs, pm))
      t.rows.push_back({r.devices, r.step_seconds, r.mean_utilisation, r.mean_watts, r.energy_j});
    out.tables.push_back(std::move(t));
  }
  if (out.tables.empty())
    throw ConfigError("nothing to compute: give avg_watts/step_s/devices, a trace or a series");
  return out;
}

Report run_report(const Scenario& s, std::string* svg) {
  Report out{s.name, {}, {}};
  if (s.alltoall) append(out, run_alltoall(s));
  if (s.timestep) append(out, run_timestep(s));
  if (s.halo) append(out, run_halo(s));
  if (s.sweep) append(out, run_sweep(s));
  append(out, run_roofline(s, svg));
  const EnergyConfig& e = s.energy;
  if (e.avg_watts || e.step_seconds || e.devices || e.trace || e.series) append(out, run_energy(s));
  return out;
}

}  // namespace haloflow
