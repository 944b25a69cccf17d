#include "haloflow/perfmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "haloflow/csv.hpp"
#include "haloflow/errors.hpp"

namespace haloflow {

void MachineModel::validate() const {
  if (!(peak_flops > 0.0) || !std::isfinite(peak_flops))
    throw ConfigError("machine peak_flops must be > 0");
  if (!(stream_bw > 0.0) || !std::isfinite(stream_bw))
    throw ConfigError("machine stream_bw must be > 0");
}

void KernelProfile::validate() const {
  if (!(time > 0.0)) throw ValidationError("kernel '" + name + "': time must be > 0");
  if (flops < 0.0 || bytes < 0.0) throw ValidationError("kernel '" + name + "': negative counts");
  if (flops == 0.0 && bytes == 0.0)
    throw ValidationError("kernel '" + name + "': flops and bytes are both zero");
}

double arithmetic_intensity(const KernelProfile& k) {
  k.validate();
  if (k.bytes == 0.0)
    throw ValidationError("kernel '" + k.name + "' moves no bytes; arithmetic intensity is undefined");
  return k.flops / k.bytes;
}

double attainable(const MachineModel& m, double ai) {
  m.validate();
  if (!(ai >= 0.0)) throw ValidationError("arithmetic intensity must be >= 0");
  if (std::isinf(ai)) return m.peak_flops;
  return std::min(m.peak_flops, ai * m.stream_bw);
}

double percent_of_roofline(const MachineModel& m, const KernelProfile& k,
                           std::vector<std::string>* warnings) {
  m.validate();
  const double ai = arithmetic_intensity(k);
  const double pct = ai < m.ridge() ? 100.0 * (k.bytes / k.time) / m.stream_bw
                                    : 100.0 * (k.flops / k.time) / m.peak_flops;
  if (pct > 100.0 && warnings) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "kernel '%s' reaches %.6g%% of the roofline", k.name.c_str(), pct);
    warnings->push_back(buf);
  }
  return pct;
}

RooflineReport roofline_report(const MachineModel& m, const std::vector<KernelProfile>& kernels) {
  m.validate();
  if (kernels.empty()) throw ValidationError("roofline report needs at least one kernel");
  RooflineReport rep;
  rep.machine = m;
  double total = 0.0;
  for (const auto& k : kernels) {
    k.validate();
    total += k.time;
  }
  for (const auto& k : kernels) {
    RooflineRow row;
    row.name = k.name;
    row.ai = arithmetic_intensity(k);
    row.achieved = k.flops / k.time;
    row.attainable = attainable(m, row.ai);
    row.percent = percent_of_roofline(m, k, &rep.warnings);
    row.time_share = 100.0 * k.time / total;
    row.memory_bound = row.ai < m.ridge();
    rep.rows.push_back(std::move(row));
  }
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const RooflineRow& a, const RooflineRow& b) { return a.time_share > b.time_share; });
  return rep;
}

void write_roofline_csv(std::ostream& os, const RooflineReport& r) {
  csv::Writer w(os);
  w.row({"name", "ai", "achieved_flops", "attainable_flops", "percent", "time_share", "bound"});
  for (const auto& row : r.rows)
    w.row({row.name, csv::num(row.ai), csv::num(row.achieved), csv::num(row.attainable),
           csv::num(row.percent), csv::num(row.time_share), row.memory_bound ? "memory" : "compute"});
}

nlohmann::ordered_json to_json(const RooflineReport& r) {
  nlohmann::ordered_json j;
  j["machine"] = {{"peak_flops", r.machine.peak_flops}, {"stream_bw", r.machine.stream_bw}};
  j["kernels"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows)
    j["kernels"].push_back({{"name", row.name},
                            {"ai", row.ai},
                            {"achieved_flops", row.achieved},
                            {"attainable_flops", row.attainable},
                            {"percent", row.percent},
                            {"time_share", row.time_share},
                            {"bound", row.memory_bound ? "memory" : "compute"}});
  j["warnings"] = r.warnings;
  return j;
}

void write_roofline_svg(std::ostream& os, const RooflineReport& r) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 20, B = 50;
  double ai_lo = r.machine.ridge() / 100.0, ai_hi = r.machine.ridge() * 10.0;
  for (const auto& row : r.rows)
    if (row.ai > 0.0) {
      ai_lo = std::min(ai_lo, row.ai / 2.0);
      ai_hi = std::max(ai_hi, row.ai * 2.0);
    }
  double f_hi = r.machine.peak_flops * 2.0;
  double f_lo = std::min(attainable(r.machine, ai_lo), r.machine.peak_flops) / 2.0;
  for (const auto& row : r.rows)
    if (row.achieved > 0.0) f_lo = std::min(f_lo, row.achieved / 2.0);

  auto x = [&](double ai) { return L + (W - L - R) * std::log10(ai / ai_lo) / std::log10(ai_hi / ai_lo); };
  auto y = [&](double f) { return H - B - (H - T - B) * std::log10(f / f_lo) / std::log10(f_hi / f_lo); };

  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"%.2f,%.2f %.2f,%.2f %.2f,%.2f\"/>\n",
                x(ai_lo), y(attainable(r.machine, ai_lo)), x(r.machine.ridge()), y(r.machine.peak_flops),
                x(ai_hi), y(r.machine.peak_flops));
  os << buf;
  for (const auto& row : r.rows) {
    if (row.ai <= 0.0 || row.achieved <= 0.0) continue;
    const double radius = 4.0 + 20.0 * std::sqrt(row.time_share / 100.0);
    std::snprintf(buf, sizeof buf,
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"steelblue\" fill-opacity=\"0.5\"><title>%s %.1f%%</title></circle>\n",
                  x(row.ai), y(row.achieved), radius, row.name.c_str(), row.percent);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\">arithmetic intensity (flop/byte, log)</text>\n"
                "<text x=\"12\" y=\"%.0f\" font-size=\"12\" transform=\"rotate(-90 12 %.0f)\">flop/s (log)</text>\n",
                L, H - 15, H / 2, H / 2);
  os << buf << "</svg>\n";
}

std::vector<KernelProfile> read_kernel_profiles(std::istream& is) {
  const csv::Table t = csv::read(is);
  const std::size_t cn = t.column("name"), cf = t.column("flops"), cb = t.column("bytes"),
                    ct = t.column("time_s");
  std::vector<KernelProfile> out;
  for (const auto& row : t.rows) {
    KernelProfile k{row.at(cn), csv::to_double(row.at(cf), "flops"), csv::to_double(row.at(cb), "bytes"),
                    csv::to_double(row.at(ct), "time_s")};
    k.validate();
    out.push_back(std::move(k));
  }
  return out;
}

std::vector<KernelProfile> advection_kernel_fixture(const MachineModel& m) {
  m.validate();
  struct Spec {
    const char* name;
    double gbytes;   // moved per call, 1e9 bytes
    double ai;       // flop/byte
    double percent;  // of stream bandwidth
  };
  static const Spec specs[] = {
      {"upwind_flux", 2.40, 0.45, 93.0},   {"antidiffusive_flux", 3.10, 0.80, 88.0},
      {"nonoscillatory_bounds", 1.90, 0.60, 91.0}, {"limiter", 1.60, 0.95, 84.0},
      {"divergence", 1.20, 0.35, 96.0},    {"advect_update", 0.90, 0.25, 98.0},
      {"metric_terms", 0.70, 0.70, 82.0},  {"boundary_fill", 0.12, 0.15, 61.0},
  };
  std::vector<KernelProfile> out;
  for (const Spec& s : specs) {
    const double bytes = s.gbytes * 1e9;
    out.push_back({s.name, bytes * s.ai, bytes, bytes / (m.stream_bw * s.percent / 100.0)});
  }
  return out;
}

}  // namespace haloflow
