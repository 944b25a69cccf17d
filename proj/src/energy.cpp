#include "haloflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "haloflow/csv.hpp"
#include "haloflow/errors.hpp"

namespace haloflow {

namespace {

std::vector<PowerSample> samples_of(const PowerTrace& trace, DeviceId device) {
  std::vector<PowerSample> s;
  for (const auto& p : trace)
    if (p.device == device) s.push_back(p);
  return s;
}

void check_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be a finite value >= 0");
}

}  // namespace

void validate_trace(const PowerTrace& trace) {
  std::map<DeviceId, double> last;
  for (const auto& p : trace) {
    check_non_negative(p.watts, "watts");
    if (!std::isfinite(p.t)) throw ValidationError("sample time must be finite");
    auto [it, fresh] = last.try_emplace(p.device, p.t);
    if (!fresh) {
      if (p.t < it->second)
        throw ValidationError("samples of device " + std::to_string(p.device) + " are not time-ordered");
      it->second = p.t;
    }
  }
}

double window_average(const PowerTrace& trace, DeviceId device, double t0, double t1) {
  validate_trace(trace);
  if (!(t1 >= t0)) throw ValidationError("window end precedes its start");
  const auto s = samples_of(trace, device);
  const bool any_inside = std::any_of(s.begin(), s.end(), [&](const PowerSample& p) { return p.t >= t0 && p.t <= t1; });
  if (!any_inside)
    throw ValidationError("no samples of device " + std::to_string(device) + " in the window");

  // Value held at t0: last sample at or before t0, else the window starts at the first sample inside.
  double start = t0;
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i + 1].t <= t0) ++i;
  if (s[i].t > t0) start = s[i].t;
  if (t1 == start) return s[i].watts;

  double integral = 0.0;
  double t = start;
  for (; i < s.size() && t < t1; ++i) {
    const double seg_end = (i + 1 < s.size()) ? std::min(s[i + 1].t, t1) : t1;
    if (seg_end > t) {
      integral += s[i].watts * (seg_end - t);
      t = seg_end;
    }
  }
  return integral / (t1 - start);
}

double window_energy(const PowerTrace& trace, DeviceId device, double t0, double t1) {
  return window_average(trace, device, t0, t1) * (t1 - t0);
}

std::map<DeviceId, double> device_averages(const PowerTrace& trace) {
  validate_trace(trace);
  std::map<DeviceId, std::pair<double, double>> span;
  for (const auto& p : trace) {
    auto [it, fresh] = span.try_emplace(p.device, p.t, p.t);
    if (!fresh) it->second.second = p.t;
  }
  std::map<DeviceId, double> out;
  for (const auto& [d, range] : span) out[d] = window_average(trace, d, range.first, range.second);
  return out;
}

double overall_average(const std::map<DeviceId, double>& per_device) {
  if (per_device.empty()) throw ValidationError("no devices to average");
  double sum = 0.0;
  for (const auto& [d, w] : per_device) sum += w;
  return sum / static_cast<double>(per_device.size());
}

double energy_per_step(double avg_watts, double step_seconds, double n_devices) {
  check_non_negative(avg_watts, "average power");
  check_non_negative(step_seconds, "step time");
  check_non_negative(n_devices, "device count");
  return avg_watts * step_seconds * n_devices;
}

void PowerModel::validate() const {
  if (!(p_idle >= 0.0) || !(p_max >= p_idle) || !std::isfinite(p_max))
    throw ConfigError("power model needs 0 <= p_idle <= p_max");
}

double predict_power(const PowerModel& pm, double utilisation) {
  pm.validate();
  if (!(utilisation >= 0.0 && utilisation <= 1.0))
    throw ValidationError("utilisation must lie in [0, 1]");
  return pm.p_idle + utilisation * (pm.p_max - pm.p_idle);
}

PowerModel fit_power_model(double u_a, double p_a, double u_b, double p_b) {
  for (double u : {u_a, u_b})
    if (!(u >= 0.0 && u <= 1.0)) throw ValidationError("utilisation must lie in [0, 1]");
  if (u_a == u_b) throw ValidationError("power model fit needs two distinct utilisations");
  const double slope = (p_a - p_b) / (u_a - u_b);
  PowerModel pm{p_a - slope * u_a, p_a + slope * (1.0 - u_a)};
  pm.validate();
  return pm;
}

std::vector<EnergyRow> energy_vs_time_series(const std::vector<EnergyRun>& runs, const PowerModel& pm) {
  if (runs.empty()) throw ValidationError("energy series needs at least one run");
  std::vector<EnergyRow> rows;
  for (const auto& run : runs) {
    if (run.devices == 0 || run.utilisation.size() != run.devices)
      throw ValidationError("run needs one utilisation value per device");
    double u_sum = 0.0, w_sum = 0.0;
    for (double u : run.utilisation) {
      u_sum += u;
      w_sum += predict_power(pm, u);
    }
    EnergyRow row;
    row.devices = run.devices;
    row.step_seconds = run.step_seconds;
    row.mean_utilisation = u_sum / run.devices;
    row.mean_watts = w_sum / run.devices;
    row.energy_j = energy_per_step(row.mean_watts, run.step_seconds, run.devices);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const EnergyRow& a, const EnergyRow& b) { return a.step_seconds > b.step_seconds; });
  return rows;
}

void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows) {
  csv::Writer w(os);
  w.row({"devices", "step_s", "mean_utilisation", "mean_watts", "energy_j"});
  for (const auto& r : rows)
    w.row({csv::num(r.devices), csv::num(r.step_seconds), csv::num(r.mean_utilisation),
           csv::num(r.mean_watts), csv::num(r.energy_j)});
}

PowerTrace read_power_trace(std::istream& is) {
  const csv::Table t = csv::read(is);
  const std::size_t cd = t.column("device"), ct = t.column("t_s"), cw = t.column("watts");
  PowerTrace out;
  for (const auto& row : t.rows) {
    const std::int64_t d = csv::to_int(row.at(cd), "device");
    if (d < 0) throw ValidationError("device must be >= 0");
    out.push_back({static_cast<DeviceId>(d), csv::to_double(row.at(ct), "t_s"),
                   csv::to_double(row.at(cw), "watts")});
  }
  validate_trace(out);
  return out;
}

void write_trace_plot_csv(std::ostream& os, const PowerTrace& trace) {
  const auto avg = device_averages(trace);
  csv::Writer w(os);
  w.row({"series", "device", "t_s", "watts"});
  for (const auto& p : trace) w.row({"sample", csv::num(p.device), csv::num(p.t), csv::num(p.watts)});
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& [d, watts] : avg) {
    double d_lo = 0.0, d_hi = 0.0;
    bool seen = false;
    for (const auto& p : trace)
      if (p.device == d) {
        d_lo = seen ? std::min(d_lo, p.t) : p.t;
        d_hi = seen ? std::max(d_hi, p.t) : p.t;
        seen = true;
      }
    w.row({"average", csv::num(d), csv::num(d_lo), csv::num(watts)});
    w.row({"average", csv::num(d), csv::num(d_hi), csv::num(watts)});
    lo = first ? d_lo : std::min(lo, d_lo);
    hi = first ? d_hi : std::max(hi, d_hi);
    first = false;
  }
  if (!avg.empty()) {
    const double all = overall_average(avg);
    w.row({"overall", "", csv::num(lo), csv::num(all)});
    w.row({"overall", "", csv::num(hi), csv::num(all)});
  }
}

}  // namespace haloflow
