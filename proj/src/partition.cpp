#include "haloflow/partition.hpp"

#include <algorithm>
#include <atomic>
#include <tuple>

#include "haloflow/errors.hpp"

namespace haloflow {

namespace {
std::atomic<std::uint64_t> next_partition_id{1};
}

Partition::Partition(std::vector<std::uint32_t> owner, std::vector<RankDomain> domains)
    : owner_(std::move(owner)), domains_(std::move(domains)), id_(next_partition_id++) {
  if (domains_.empty()) throw ConfigError("partition needs at least one rank");
  const auto p = static_cast<std::uint32_t>(domains_.size());
  for (std::uint32_t o : owner_)
    if (o >= p) throw ConfigError("owner rank " + std::to_string(o) + " out of range");
  ghost_slot_.resize(p);
  for (std::uint32_t r = 0; r < p; ++r) {
    const RankDomain& d = domains_[r];
    if (!std::is_sorted(d.owned.begin(), d.owned.end()) ||
        std::adjacent_find(d.owned.begin(), d.owned.end()) != d.owned.end())
      throw ConfigError("rank " + std::to_string(r) + ": owned list must be strictly ascending");
    const bool ordered = std::is_sorted(d.ghosts.begin(), d.ghosts.end(), [](const Ghost& a, const Ghost& b) {
      return std::tie(a.owner, a.global) < std::tie(b.owner, b.global);
    });
    if (!ordered) throw ConfigError("rank " + std::to_string(r) + ": ghosts must be sorted by (owner, global)");
    for (std::size_t k = 0; k < d.ghosts.size(); ++k) {
      const Ghost& g = d.ghosts[k];
      if (g.global < 0 || static_cast<std::size_t>(g.global) >= owner_.size())
        throw ConfigError("rank " + std::to_string(r) + ": ghost index out of range");
      if (g.owner >= p) throw ConfigError("rank " + std::to_string(r) + ": ghost owner out of range");
      if (!ghost_slot_[r].emplace(g.global, static_cast<std::uint32_t>(d.owned.size() + k)).second)
        throw ConfigError("rank " + std::to_string(r) + ": duplicate ghost " + std::to_string(g.global));
    }
  }
}

Partition Partition::derive(const GlobalGrid& grid, std::vector<std::uint32_t> owner,
                            std::uint32_t ranks) {
  if (ranks == 0) throw ConfigError("partition needs at least one rank");
  if (owner.size() != grid.size()) throw ConfigError("owner map size differs from grid size");
  std::vector<RankDomain> domains(ranks);
  for (std::size_t e = 0; e < owner.size(); ++e) {
    if (owner[e] >= ranks) throw ConfigError("owner rank out of range");
    domains[owner[e]].owned.push_back(static_cast<std::int64_t>(e));
  }
  for (std::uint32_t r = 0; r < ranks; ++r) {
    auto& ghosts = domains[r].ghosts;
    for (std::int64_t e : domains[r].owned)
      for (std::int64_t g : grid.neighbors(e))
        if (owner[static_cast<std::size_t>(g)] != r) ghosts.push_back({g, owner[static_cast<std::size_t>(g)]});
    std::sort(ghosts.begin(), ghosts.end(), [](const Ghost& a, const Ghost& b) {
      return std::tie(a.owner, a.global) < std::tie(b.owner, b.global);
    });
    ghosts.erase(std::unique(ghosts.begin(), ghosts.end()), ghosts.end());
  }
  return Partition(std::move(owner), std::move(domains));
}

std::optional<std::uint32_t> Partition::owned_index(std::uint32_t rank, std::int64_t global) const {
  const auto& owned = domains_.at(rank).owned;
  auto it = std::lower_bound(owned.begin(), owned.end(), global);
  if (it == owned.end() || *it != global) return std::nullopt;
  return static_cast<std::uint32_t>(it - owned.begin());
}

std::optional<std::uint32_t> Partition::local_index(std::uint32_t rank, std::int64_t global) const {
  if (auto o = owned_index(rank, global)) return o;
  const auto& slots = ghost_slot_.at(rank);
  auto it = slots.find(global);
  if (it == slots.end()) return std::nullopt;
  return it->second;
}

void Partition::validate(const GlobalGrid& grid) const {
  if (owner_.size() != grid.size()) throw ConfigError("partition covers a different element count");
  const Partition expect = derive(grid, owner_, ranks());
  for (std::uint32_t r = 0; r < ranks(); ++r) {
    if (domains_[r].owned != expect.domains_[r].owned)
      throw ConfigError("rank " + std::to_string(r) + ": owned list disagrees with owner map");
    for (const Ghost& g : domains_[r].ghosts) {
      if (g.owner == r) throw ConfigError("rank " + std::to_string(r) + " holds a ghost it owns");
      if (owner_[static_cast<std::size_t>(g.global)] != g.owner)
        throw ConfigError("rank " + std::to_string(r) + ": ghost " + std::to_string(g.global) +
                          " names the wrong owner");
    }
    if (domains_[r].ghosts != expect.domains_[r].ghosts)
      throw ConfigError("rank " + std::to_string(r) +
                        ": ghosts are not exactly the non-owned neighbours of owned elements");
  }
}

Partition partition_block(const GlobalGrid& grid, std::uint32_t ranks) {
  if (ranks == 0) throw ConfigError("partition needs at least one rank");
  if (ranks > grid.size())
    throw ConfigError("cannot split " + std::to_string(grid.size()) + " elements over " +
                      std::to_string(ranks) + " ranks");
  const std::size_t block = (grid.size() + ranks - 1) / ranks;
  std::vector<std::uint32_t> owner(grid.size());
  for (std::size_t e = 0; e < grid.size(); ++e) owner[e] = static_cast<std::uint32_t>(e / block);
  return Partition::derive(grid, std::move(owner), ranks);
}

}  // namespace haloflow
