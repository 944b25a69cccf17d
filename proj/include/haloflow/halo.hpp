// Halo exchange for unstructured grids.
//
// Setup (build_plan) runs once per partition as a two-round protocol over the
// router: ranks exchange per-owner request counts, then the requested global
// indices; owners translate them to local slots. Each step then packs the
// requested owned values into one contiguous buffer per peer, moves the
// buffers, and unpacks them into ghost slots.
#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "haloflow/collectives.hpp"
#include "haloflow/grid.hpp"
#include "haloflow/kernels.hpp"
#include "haloflow/netsim.hpp"
#include "haloflow/partition.hpp"
#include "haloflow/router.hpp"

namespace haloflow {

struct RankPlan {
  std::uint32_t owned_count = 0;
  std::uint32_t ghost_count = 0;
  std::vector<std::vector<std::uint32_t>> send_index;  // [peer] owned slots, ascending global
  std::vector<std::vector<std::uint32_t>> recv_slot;   // [peer] ghost slots, sender's order
  std::vector<std::uint32_t> send_counts, send_displs;
  std::vector<std::uint32_t> recv_counts, recv_displs;
  // Overlap helpers: owned elements packed for at least one peer.
  std::vector<std::uint8_t> boundary_mask;
  std::vector<std::uint32_t> boundary;
  std::vector<std::uint32_t> interior;

  bool operator==(const RankPlan&) const = default;
};

struct HaloPlan {
  std::uint64_t partition_id = 0;
  std::vector<RankPlan> rank;

  std::uint32_t ranks() const { return static_cast<std::uint32_t>(rank.size()); }
  /// Bytes rank `src` sends rank `dst` per exchange.
  SizeMatrix halo_bytes(std::int64_t bytes_per_element) const;
  bool operator==(const HaloPlan& o) const { return rank == o.rank; }
};

HaloPlan build_plan(const Partition& part, Router& router, ExecMode mode = ExecMode::Threaded);

/// Reuses a plan until it is asked about a partition with a different identity.
class PlanCache {
 public:
  const HaloPlan& get(const Partition& part, Router& router, ExecMode mode = ExecMode::Threaded);
  std::size_t builds() const { return builds_; }

 private:
  std::map<std::uint64_t, HaloPlan> plans_;
  std::size_t builds_ = 0;
};

/// Values of one rank: owned elements, then ghost slots.
class Field {
 public:
  Field() = default;
  Field(std::uint32_t rank, std::size_t owned, std::size_t ghosts)
      : rank_(rank), owned_(owned), values_(owned + ghosts, 0.0) {}

  std::uint32_t rank() const { return rank_; }
  std::size_t owned_count() const { return owned_; }
  std::size_t ghost_count() const { return values_.size() - owned_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> owned() { return std::span<double>(values_).first(owned_); }
  std::span<const double> owned() const { return std::span<const double>(values_).first(owned_); }
  std::span<const double> ghosts() const { return std::span<const double>(values_).subspan(owned_); }

  /// Set by an exchange; cleared when owned values change without one.
  bool ghosts_valid = false;

 private:
  std::uint32_t rank_ = 0;
  std::size_t owned_ = 0;
  std::vector<double> values_;
};

using Fields = std::vector<Field>;

/// Distributes a global array; ghosts start zeroed and invalid.
Fields scatter_global(const Partition& part, std::span<const double> global);
/// Reassembles owned values into global order.
std::vector<double> gather_global(const Partition& part, const Fields& fields);
/// Sum in ascending global order.
double checksum(std::span<const double> global);

/// Pack instrumentation: counts reads of field memory by pack calls.
struct PackAudit {
  std::atomic<std::uint64_t> calls{0};
  std::atomic<std::uint64_t> reads{0};
  std::atomic<std::uint64_t> packed{0};
  std::atomic<std::uint64_t> mismatched_calls{0};  // calls where reads != packed elements
};

std::vector<double> pack(const Field& field, const HaloPlan& plan, std::uint32_t dest,
                         PackAudit* audit = nullptr);

/// Fills the ghost slots fed by `src`. ProtocolError (field untouched) on a length mismatch.
void unpack(Field& field, const HaloPlan& plan, std::uint32_t src, std::span<const double> buffer);

enum class OverlapMode { None, MaskArray, IndirectionArray };

std::string to_string(OverlapMode m);
OverlapMode parse_overlap(const std::string& s);

struct ExchangeOptions {
  ScheduleKind schedule = ScheduleKind::RotatedConcurrent;
  ExecMode mode = ExecMode::Threaded;
  PackAudit* audit = nullptr;
};

/// Refreshes every ghost slot from its owner. Each rank issues its sends in
/// the order the chosen all-to-all schedule gives it.
void exchange(Fields& fields, const HaloPlan& plan, Router& router, const ExchangeOptions& opt = {});

/// One step of the neighbour-mean stencil on every rank.
///   None:             exchange, then update all owned elements.
///   MaskArray:        update boundary elements (mask loop), send them, update
///                     interior elements (inverted mask loop), receive.
///   IndirectionArray: same split through explicit boundary/interior lists.
/// All modes yield bit-identical owned values. Overlap modes leave ghosts
/// holding the new values; None leaves them stale.
void stencil_step(Fields& fields, const GlobalGrid& grid, const Partition& part, const HaloPlan& plan,
                  Router& router, OverlapMode mode, const ExchangeOptions& opt = {});

/// Local neighbour lists for one rank (owned rows, columns in local slots).
kernels::LocalCsr local_stencil(const GlobalGrid& grid, const Partition& part, std::uint32_t rank);

struct StagingCost {
  double staged_s = 0.0;
  double direct_s = 0.0;
  SimResult staged;
  SimResult direct;
};

/// Time of one halo update done directly between devices versus the
/// host-staged mechanism (full local field copied device->host, halo moved
/// through host memory, full field copied back). `compute_seconds`, if given,
/// is charged per rank before the exchange.
StagingCost staged_vs_direct_cost(const Partition& part, const HaloPlan& plan,
                                  std::int64_t bytes_per_element, const Topology& t,
                                  const RankMap& rm, const SimConfig& cfg,
                                  std::vector<double> compute_seconds = {});

}  // namespace haloflow
