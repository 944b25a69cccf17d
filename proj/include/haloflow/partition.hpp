// Element ownership and ghost metadata for a distributed grid.
//
// Local layout on every rank: owned elements in ascending global order,
// followed by ghosts sorted by (owner, global index).
#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "haloflow/grid.hpp"

namespace haloflow {

struct Ghost {
  std::int64_t global = 0;
  std::uint32_t owner = 0;

  bool operator==(const Ghost&) const = default;
};

struct RankDomain {
  std::vector<std::int64_t> owned;
  std::vector<Ghost> ghosts;

  std::size_t local_size() const { return owned.size() + ghosts.size(); }
  bool operator==(const RankDomain&) const = default;
};

class Partition {
 public:
  /// Checks only shapes and local ordering, so corrupt ownership can be
  /// represented and caught later by the setup protocol or validate().
  Partition(std::vector<std::uint32_t> owner, std::vector<RankDomain> domains);

  /// Owned lists from `owner`, ghosts from the grid's adjacency.
  static Partition derive(const GlobalGrid& grid, std::vector<std::uint32_t> owner,
                          std::uint32_t ranks);

  std::uint32_t ranks() const { return static_cast<std::uint32_t>(domains_.size()); }
  std::size_t elements() const { return owner_.size(); }
  std::uint32_t owner(std::int64_t global) const { return owner_.at(static_cast<std::size_t>(global)); }
  const std::vector<std::uint32_t>& owners() const { return owner_; }
  const RankDomain& domain(std::uint32_t rank) const { return domains_.at(rank); }

  /// Local slot of a global element on `rank` (owned or ghost), if present.
  std::optional<std::uint32_t> local_index(std::uint32_t rank, std::int64_t global) const;
  /// Local slot of an owned element; nullopt if `rank` does not own it.
  std::optional<std::uint32_t> owned_index(std::uint32_t rank, std::int64_t global) const;

  /// Identity used for plan caching; copies share it.
  std::uint64_t id() const { return id_; }

  /// Full invariant check against a grid; ConfigError on violation.
  void validate(const GlobalGrid& grid) const;

  bool operator==(const Partition& o) const { return owner_ == o.owner_ && domains_ == o.domains_; }

 private:
  std::vector<std::uint32_t> owner_;
  std::vector<RankDomain> domains_;
  std::vector<std::unordered_map<std::int64_t, std::uint32_t>> ghost_slot_;
  std::uint64_t id_ = 0;
};

/// Contiguous blocks of ceil(N/P) global indices per rank.
Partition partition_block(const GlobalGrid& grid, std::uint32_t ranks);

}  // namespace haloflow
