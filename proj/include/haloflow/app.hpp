// Scenario runners behind the command-line tool. Each returns named tables
// that render as CSV or JSON; nothing here depends on wall-clock time, so
// identical scenarios give byte-identical output.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "haloflow/scenario.hpp"

namespace haloflow {

struct ReportTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<nlohmann::ordered_json>> rows;  // numbers, strings or booleans
};

struct Report {
  std::string scenario;
  std::vector<ReportTable> tables;
  std::vector<std::string> warnings;

  const ReportTable& table(const std::string& name) const;
};

/// CSV: a lone table is written as plain CSV; several tables are each
/// preceded by a "# name" line and separated by a blank line.
void write_report(std::ostream& os, const Report& r, const std::string& format);

Report run_alltoall(const Scenario& s);
Report run_halo(const Scenario& s);
Report run_timestep(const Scenario& s);
Report run_sweep(const Scenario& s);
/// `svg` receives the roofline chart when non-null.
Report run_roofline(const Scenario& s, std::string* svg = nullptr);
Report run_energy(const Scenario& s);
/// Every section the scenario configures, plus the roofline table.
Report run_report(const Scenario& s, std::string* svg = nullptr);

/// Deterministic initial field in [0, 1).
std::vector<double> seeded_values(std::size_t n, std::uint64_t seed);

/// Sweep loads for one rank count: mean * (1 + f * (2r/(P-1) - 1)).
std::vector<double> imbalanced_loads(double total_seconds, std::uint32_t ranks, double factor);

}  // namespace haloflow
