// Roofline placement of measured kernels.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace haloflow {

// V100-class defaults, configurable.
inline constexpr double kDefaultPeakFlops = 7.8e12;
inline constexpr double kDefaultStreamBw = 8.55e11;

struct MachineModel {
  double peak_flops = kDefaultPeakFlops;  // flop/s
  double stream_bw = kDefaultStreamBw;    // bytes/s

  void validate() const;
  double ridge() const { return peak_flops / stream_bw; }
};

struct KernelProfile {
  std::string name;
  double flops = 0.0;
  double bytes = 0.0;
  double time = 0.0;  // seconds

  void validate() const;
};

/// flops / bytes. ValidationError for compute-only kernels (bytes == 0).
double arithmetic_intensity(const KernelProfile& k);

/// min(peak, ai * stream_bw).
double attainable(const MachineModel& m, double ai);

/// Memory-bound kernels (ai < ridge) are measured against stream bandwidth,
/// the rest against peak. Values above 100 mean the inputs are inconsistent
/// with the machine; a message is appended to `warnings` if given.
double percent_of_roofline(const MachineModel& m, const KernelProfile& k,
                           std::vector<std::string>* warnings = nullptr);

struct RooflineRow {
  std::string name;
  double ai = 0.0;
  double achieved = 0.0;    // flop/s
  double attainable = 0.0;  // flop/s
  double percent = 0.0;
  double time_share = 0.0;  // percent of total kernel time
  bool memory_bound = false;
};

struct RooflineReport {
  MachineModel machine;
  std::vector<RooflineRow> rows;  // by time_share, descending
  std::vector<std::string> warnings;
};

RooflineReport roofline_report(const MachineModel& m, const std::vector<KernelProfile>& kernels);

void write_roofline_csv(std::ostream& os, const RooflineReport& r);
nlohmann::ordered_json to_json(const RooflineReport& r);
/// Log-log roofline with one circle per kernel, area proportional to time share.
void write_roofline_svg(std::ostream& os, const RooflineReport& r);

/// CSV with columns name,flops,bytes,time_s.
std::vector<KernelProfile> read_kernel_profiles(std::istream& is);

/// Advection-like kernel set: most kernels memory-bound at 80-100% of the
/// roofline, one short kernel well below.
std::vector<KernelProfile> advection_kernel_fixture(const MachineModel& m = {});

}  // namespace haloflow
