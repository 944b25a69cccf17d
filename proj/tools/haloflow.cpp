// haloflow: run interconnect, halo-exchange, roofline and energy scenarios.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "haloflow/app.hpp"
#include "haloflow/errors.hpp"

namespace {

using namespace haloflow;

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kValidation = 3,
  kIo = 4,
  kConfig = 5,
  kSimulation = 6,
};

const char* kExitHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  usage error (bad flags or arguments)\n"
    "  3  validation error (scenario schema, CSV input, model ranges)\n"
    "  4  I/O error (missing or unwritable file)\n"
    "  5  configuration or topology error\n"
    "  6  simulation or halo protocol error\n"
    "Errors are also printed to stderr as one JSON object.\n"
    "HALOFLOW_SEED, when set, overrides --seed and the scenario seed.";

struct Options {
  std::string scenario;
  std::optional<std::string> topology, schedule, ranks, grid, overlap, staging, output, format, svg, trace, kernels;
  std::optional<std::int64_t> msg_bytes, bytes_per_element;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> steps;
  std::optional<double> avg_watts, step_s, devices, peak_flops, stream_bw, alpha_intra, alpha_inter;
};

int report_error(const char* kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

std::vector<std::uint32_t> parse_rank_list(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || v == 0)
      throw CLI::ValidationError("--ranks", "expected positive integers separated by commas");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--ranks", "expected at least one rank count");
  return out;
}

nlohmann::json topology_arg(const std::string& s) {
  if (!s.empty() && s.front() == '{') {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("--topology is not valid JSON: ") + e.what());
    }
  }
  return s;
}

Scenario build_scenario(const std::string& command, const Options& o) {
  Scenario s = o.scenario.empty() ? Scenario{} : load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (const char* env = std::getenv("HALOFLOW_SEED")) {
    try {
      std::size_t used = 0;
      s.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ValidationError(std::string("HALOFLOW_SEED must be a non-negative integer, got '") + env + "'");
    }
  }
  if (o.topology) {
    s.topology = topology_arg(*o.topology);
    (void)topology_from_json(s.topology, "--topology");
    if (command == "sweep") {
      if (!s.sweep) s.sweep.emplace();
      s.sweep->topologies = {s.topology};
    }
  }
  if (o.ranks) {
    const auto list = parse_rank_list(*o.ranks);
    if (command == "sweep") {
      if (!s.sweep) s.sweep.emplace();
      s.sweep->ranks = list;
    } else {
      if (list.size() != 1) throw CLI::ValidationError("--ranks", "only `sweep` accepts a list");
      s.ranks = list.front();
      s.rank_map.reset();
    }
  }
  if (o.schedule) {
    const ScheduleKind k = parse_schedule(*o.schedule);
    if (command == "alltoall") {
      if (!s.alltoall) s.alltoall.emplace();
      s.alltoall->schedules = {k};
    }
    if (command == "sweep") {
      if (!s.sweep) s.sweep.emplace();
      s.sweep->schedule = k;
    }
    if (s.timestep) s.timestep->schedule = k;
  }
  if (o.msg_bytes) {
    if (*o.msg_bytes < 0) throw CLI::ValidationError("--msg-bytes", "must be >= 0");
    if (!s.alltoall) s.alltoall.emplace();
    s.alltoall->sizes = MessageSizes{*o.msg_bytes, std::nullopt};
  }
  if (o.grid || o.steps || o.overlap || o.bytes_per_element) {
    if (!s.halo) s.halo.emplace();
    if (o.grid) s.halo->grid = *o.grid;
    if (o.steps) s.halo->steps = *o.steps;
    if (o.overlap) s.halo->overlap = parse_overlap(*o.overlap);
    if (o.bytes_per_element) {
      if (*o.bytes_per_element < 0) throw CLI::ValidationError("--bytes-per-element", "must be >= 0");
      s.halo->bytes_per_element = *o.bytes_per_element;
    }
  }
  if (o.staging) s.sim.staging = parse_staging(*o.staging);
  if (o.alpha_intra) s.sim.alpha_intra = *o.alpha_intra;
  if (o.alpha_inter) s.sim.alpha_inter = *o.alpha_inter;
  if (o.avg_watts) s.energy.avg_watts = *o.avg_watts;
  if (o.step_s) s.energy.step_seconds = *o.step_s;
  if (o.devices) s.energy.devices = *o.devices;
  if (o.trace) s.energy.trace = *o.trace;
  if (o.kernels) s.roofline.kernels_csv = *o.kernels;
  if (o.peak_flops) s.roofline.machine.peak_flops = *o.peak_flops;
  if (o.stream_bw) s.roofline.machine.stream_bw = *o.stream_bw;
  s.roofline.machine.validate();
  if (o.format) s.output.format = *o.format;
  if (o.output) s.output.path = *o.output;
  if (o.svg) s.output.svg = *o.svg;
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

int run(const std::string& command, const Options& o) {
  const Scenario s = build_scenario(command, o);
  std::string svg;
  std::string* svg_out = s.output.svg ? &svg : nullptr;
  Report r;
  if (command == "alltoall") r = run_alltoall(s);
  else if (command == "halo") r = run_halo(s);
  else if (command == "sweep") r = run_sweep(s);
  else if (command == "timestep") r = run_timestep(s);
  else if (command == "roofline") r = run_roofline(s, svg_out);
  else if (command == "energy") r = run_energy(s);
  else r = run_report(s, svg_out);

  for (const auto& w : r.warnings) {
    nlohmann::ordered_json j;
    j["warning"] = w;
    std::cerr << j.dump() << '\n';
  }
  std::ostringstream text;
  write_report(text, r, s.output.format);
  if (s.output.path) write_text(*s.output.path, text.str());
  else std::cout << text.str();
  if (s.output.svg && !svg.empty()) write_text(*s.output.svg, svg);
  return kOk;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("scenario", o.scenario, "Scenario JSON file (optional)");
  sub->add_option("--topology", o.topology, "Machine: dgx1p, dgx1v[:servers], dgx2, fattree:NxD, clique:N or JSON");
  sub->add_option("--schedule", o.schedule, "All-to-all schedule: stage_serialized, rotated_concurrent, pairwise_xor, linear_sequential");
  sub->add_option("--ranks", o.ranks, "Rank count (sweep: comma-separated list)");
  sub->add_option("--msg-bytes", o.msg_bytes, "Uniform all-to-all message size in bytes");
  sub->add_option("--seed", o.seed, "Seed for generated grids and fields");
  sub->add_option("--steps", o.steps, "Halo stencil steps");
  sub->add_option("--grid", o.grid, "Grid fixture: ringN, quadWxH, tiledWxH, randomN[dK]");
  sub->add_option("--overlap", o.overlap, "Halo overlap mode: none, mask_array, indirection_array");
  sub->add_option("--bytes-per-element", o.bytes_per_element, "Bytes moved per halo element");
  sub->add_option("--staging", o.staging, "Transfer mode: device_direct or host_staged");
  sub->add_option("--alpha-intra", o.alpha_intra, "Per-message latency inside a server (s)");
  sub->add_option("--alpha-inter", o.alpha_inter, "Per-message latency across servers (s)");
  sub->add_option("--avg-watts", o.avg_watts, "Average device power (W)");
  sub->add_option("--step-s", o.step_s, "Time per timestep (s)");
  sub->add_option("--devices", o.devices, "Device count");
  sub->add_option("--trace", o.trace, "Power trace CSV (device,t_s,watts)");
  sub->add_option("--kernels", o.kernels, "Kernel profile CSV (name,flops,bytes,time_s)");
  sub->add_option("--peak-flops", o.peak_flops, "Machine peak flop/s");
  sub->add_option("--stream-bw", o.stream_bw, "Machine memory bandwidth (bytes/s)");
  sub->add_option("--output,-o", o.output, "Write results here instead of stdout");
  sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--svg", o.svg, "Also write a roofline SVG (roofline, report)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interconnect and halo-exchange scenario runner"};
  app.footer(kExitHelp);
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"alltoall", "Compare all-to-all schedules on one machine"},
      {"halo", "Run the distributed stencil, check it against one rank, time staged vs direct halos"},
      {"sweep", "All-to-all timestep makespan and speedup versus rank count"},
      {"timestep", "Compute followed by one all-to-all; per-rank activity"},
      {"roofline", "Roofline placement of kernel profiles"},
      {"energy", "Energy per step, power-trace averages and energy versus time"},
      {"report", "Every section the scenario configures"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->footer(kExitHelp);
    add_common(sub, o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << '\n';
    return report_error("usage", e.what(), kUsage);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const CLI::Error& e) {
    return report_error("usage", e.what(), kUsage);
  } catch (const ValidationError& e) {
    return report_error("validation", e.what(), kValidation);
  } catch (const IoError& e) {
    return report_error("io", e.what(), kIo);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kConfig);
  } catch (const TopologyError& e) {
    return report_error("topology", e.what(), kConfig);
  } catch (const SimulationError& e) {
    return report_error("simulation", e.what(), kSimulation);
  } catch (const ProtocolError& e) {
    return report_error("protocol", e.what(), kSimulation);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kInternal);
  }
}
