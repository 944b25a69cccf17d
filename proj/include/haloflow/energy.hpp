// Power traces, energy per timestep and a utilisation-driven power model.
#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "haloflow/topology.hpp"

namespace haloflow {

struct PowerSample {
  DeviceId device = 0;
  double t = 0.0;      // seconds
  double watts = 0.0;
};

/// Samples of one device hold their value until the next sample
/// (last value holds to the end of any window).
using PowerTrace = std::vector<PowerSample>;

/// Negative watts or out-of-order samples of a device raise ValidationError.
void validate_trace(const PowerTrace& trace);

/// Time-weighted mean power of `device` over [t0, t1]. A sample taken before
/// t0 carries into the window. ValidationError when no sample of the device
/// lies in the window.
double window_average(const PowerTrace& trace, DeviceId device, double t0, double t1);

/// window_average * (t1 - t0).
double window_energy(const PowerTrace& trace, DeviceId device, double t0, double t1);

/// Per device, the average over the span of that device's samples.
std::map<DeviceId, double> device_averages(const PowerTrace& trace);

/// Mean of the per-device averages.
double overall_average(const std::map<DeviceId, double>& per_device);

/// avg_watts * step_seconds * n_devices.
double energy_per_step(double avg_watts, double step_seconds, double n_devices);

inline constexpr double kDefaultIdleWatts = 50.0;
inline constexpr double kDefaultMaxWatts = 300.0;

struct PowerModel {
  double p_idle = kDefaultIdleWatts;
  double p_max = kDefaultMaxWatts;

  void validate() const;
};

/// p_idle + u * (p_max - p_idle), u in [0, 1].
double predict_power(const PowerModel& pm, double utilisation);

/// Line through (u_a, p_a) and (u_b, p_b) evaluated at u = 0 and u = 1.
PowerModel fit_power_model(double u_a, double p_a, double u_b, double p_b);

struct EnergyRun {
  std::uint32_t devices = 0;
  double step_seconds = 0.0;
  std::vector<double> utilisation;  // one per device
};

struct EnergyRow {
  std::uint32_t devices = 0;
  double step_seconds = 0.0;
  double mean_utilisation = 0.0;
  double mean_watts = 0.0;
  double energy_j = 0.0;
};

/// One row per run, sorted by step_seconds descending.
std::vector<EnergyRow> energy_vs_time_series(const std::vector<EnergyRun>& runs, const PowerModel& pm);

void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows);

/// CSV with columns device,t_s,watts.
PowerTrace read_power_trace(std::istream& is);

/// Sample series plus per-device and overall average lines:
/// series,device,t_s,watts with series in {sample, average, overall}.
void write_trace_plot_csv(std::ostream& os, const PowerTrace& trace);

}  // namespace haloflow
