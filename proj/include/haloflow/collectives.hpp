// All-to-all(v) schedules expressed as phased flow sets.
//
//   StageSerialized    P phases; phase k < P-1 sends i -> (i+k+1) mod P, the
//                      last phase holds the self copies.
//   RotatedConcurrent  one phase with every transfer; rank r issues to targets
//                      (k + r) mod P, k = 0..P-1.
//   PairwiseXor        P phases (P a power of two), phase k pairs i <-> i^k.
//   LinearSequential   P*P phases, one transfer each, rank-major.
//
// Zero-sized entries produce no flow; phases left empty are dropped and the
// rest renumbered so phase indices stay contiguous.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "haloflow/netsim.hpp"
#include "haloflow/topology.hpp"

namespace haloflow {

enum class ScheduleKind { StageSerialized, RotatedConcurrent, PairwiseXor, LinearSequential };

std::string to_string(ScheduleKind k);
/// Accepts the canonical snake_case names plus short aliases ("rotated", "staged", "xor", "linear").
ScheduleKind parse_schedule(const std::string& s);
const std::vector<ScheduleKind>& all_schedules();

/// P x P byte counts; entry (i, j) is what rank i sends rank j.
class SizeMatrix {
 public:
  SizeMatrix() = default;
  explicit SizeMatrix(std::uint32_t ranks, std::int64_t fill = 0);
  static SizeMatrix uniform(std::uint32_t ranks, std::int64_t bytes) { return SizeMatrix(ranks, bytes); }
  static SizeMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  std::uint32_t ranks() const { return ranks_; }
  std::int64_t at(std::uint32_t i, std::uint32_t j) const { return bytes_[i * ranks_ + j]; }
  void set(std::uint32_t i, std::uint32_t j, std::int64_t v);
  SizeMatrix scaled(double k) const;

 private:
  std::uint32_t ranks_ = 0;
  std::vector<std::int64_t> bytes_;
};

/// Target order rank `rank` walks for a schedule (all P targets, self included).
std::vector<std::uint32_t> issue_order(ScheduleKind kind, std::uint32_t ranks, std::uint32_t rank);

/// Flows are returned sorted by (phase, src_rank, issue); ids are positions.
std::vector<Flow> build_alltoall(ScheduleKind kind, const SizeMatrix& sizes);

struct ScheduleReport {
  ScheduleKind kind;
  double makespan = 0.0;
  std::vector<double> phase_seconds;  // duration of each phase
};

std::vector<ScheduleReport> compare_schedules(const Topology& t, const RankMap& rm,
                                              const SizeMatrix& sizes,
                                              const std::vector<ScheduleKind>& kinds,
                                              const SimConfig& cfg);

}  // namespace haloflow
