// Error types shared by all haloflow modules. Each category maps to a
// distinct CLI exit code (see tools/haloflow.cpp).
#pragma once

#include <stdexcept>
#include <string>

namespace haloflow {

/// Invalid preset, schedule or model parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing routes, unknown nodes, or a topology that cannot serve a request.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flow sets the simulator cannot execute (bad ranks, negative sizes, gaps in phases).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Halo protocol violations: corrupt partitions, buffer size mismatches, router failures.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario files or tabular inputs that fail schema checks.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Files that cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace haloflow
