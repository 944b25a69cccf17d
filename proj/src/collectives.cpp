#include "haloflow/collectives.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "haloflow/errors.hpp"

namespace haloflow {

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::StageSerialized: return "stage_serialized";
    case ScheduleKind::RotatedConcurrent: return "rotated_concurrent";
    case ScheduleKind::PairwiseXor: return "pairwise_xor";
    case ScheduleKind::LinearSequential: return "linear_sequential";
  }
  return "?";
}

ScheduleKind parse_schedule(const std::string& s) {
  if (s == "stage_serialized" || s == "staged" || s == "serialized") return ScheduleKind::StageSerialized;
  if (s == "rotated_concurrent" || s == "rotated") return ScheduleKind::RotatedConcurrent;
  if (s == "pairwise_xor" || s == "xor" || s == "pairwise") return ScheduleKind::PairwiseXor;
  if (s == "linear_sequential" || s == "linear") return ScheduleKind::LinearSequential;
  throw ConfigError("unknown schedule '" + s + "'");
}

const std::vector<ScheduleKind>& all_schedules() {
  static const std::vector<ScheduleKind> kinds{
      ScheduleKind::StageSerialized, ScheduleKind::RotatedConcurrent, ScheduleKind::PairwiseXor,
      ScheduleKind::LinearSequential};
  return kinds;
}

SizeMatrix::SizeMatrix(std::uint32_t ranks, std::int64_t fill)
    : ranks_(ranks), bytes_(static_cast<std::size_t>(ranks) * ranks, fill) {
  if (fill < 0) throw ConfigError("message sizes must be >= 0");
}

SizeMatrix SizeMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  SizeMatrix m(static_cast<std::uint32_t>(rows.size()));
  for (std::uint32_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ConfigError("size matrix must be square");
    for (std::uint32_t j = 0; j < rows.size(); ++j) m.set(i, j, rows[i][j]);
  }
  return m;
}

void SizeMatrix::set(std::uint32_t i, std::uint32_t j, std::int64_t v) {
  if (v < 0) throw ConfigError("message sizes must be >= 0");
  bytes_.at(static_cast<std::size_t>(i) * ranks_ + j) = v;
}

SizeMatrix SizeMatrix::scaled(double k) const {
  SizeMatrix m(ranks_);
  for (std::size_t i = 0; i < bytes_.size(); ++i)
    m.bytes_[i] = static_cast<std::int64_t>(std::llround(static_cast<double>(bytes_[i]) * k));
  return m;
}

namespace {

bool power_of_two(std::uint32_t p) { return p != 0 && (p & (p - 1)) == 0; }

void check_ranks(ScheduleKind kind, std::uint32_t ranks) {
  if (ranks == 0) throw ConfigError("all-to-all needs at least one rank");
  if (kind == ScheduleKind::PairwiseXor && !power_of_two(ranks))
    throw ConfigError("pairwise_xor needs a power-of-two rank count, got " + std::to_string(ranks));
}

std::uint32_t phase_of(ScheduleKind kind, std::uint32_t ranks, std::uint32_t src, std::uint32_t pos,
                       std::uint32_t dst) {
  switch (kind) {
    case ScheduleKind::StageSerialized: return pos;
    case ScheduleKind::RotatedConcurrent: return 0;
    case ScheduleKind::PairwiseXor: return src ^ dst;
    case ScheduleKind::LinearSequential: return src * ranks + dst;
  }
  return 0;
}

}  // namespace

std::vector<std::uint32_t> issue_order(ScheduleKind kind, std::uint32_t ranks, std::uint32_t rank) {
  check_ranks(kind, ranks);
  if (rank >= ranks) throw ConfigError("rank out of range in issue_order");
  std::vector<std::uint32_t> order(ranks);
  for (std::uint32_t k = 0; k < ranks; ++k) {
    switch (kind) {
      case ScheduleKind::StageSerialized:
        order[k] = k + 1 < ranks ? (rank + k + 1) % ranks : rank;
        break;
      case ScheduleKind::RotatedConcurrent: order[k] = (k + rank) % ranks; break;
      case ScheduleKind::PairwiseXor: order[k] = rank ^ k; break;
      case ScheduleKind::LinearSequential: order[k] = k; break;
    }
  }
  return order;
}

std::vector<Flow> build_alltoall(ScheduleKind kind, const SizeMatrix& sizes) {
  const std::uint32_t p = sizes.ranks();
  check_ranks(kind, p);
  std::vector<Flow> flows;
  for (std::uint32_t src = 0; src < p; ++src) {
    const auto order = issue_order(kind, p, src);
    for (std::uint32_t pos = 0; pos < p; ++pos) {
      const std::uint32_t dst = order[pos];
      if (sizes.at(src, dst) == 0) continue;
      Flow f;
      f.src_rank = src;
      f.dst_rank = dst;
      f.bytes = sizes.at(src, dst);
      f.phase = phase_of(kind, p, src, pos, dst);
      f.issue = pos;
      flows.push_back(f);
    }
  }
  std::vector<std::uint32_t> phases;
  for (const Flow& f : flows) phases.push_back(f.phase);
  std::sort(phases.begin(), phases.end());
  phases.erase(std::unique(phases.begin(), phases.end()), phases.end());
  for (Flow& f : flows)
    f.phase = static_cast<std::uint32_t>(std::lower_bound(phases.begin(), phases.end(), f.phase) - phases.begin());
  std::sort(flows.begin(), flows.end(), [](const Flow& a, const Flow& b) {
    return std::tie(a.phase, a.src_rank, a.issue) < std::tie(b.phase, b.src_rank, b.issue);
  });
  for (std::size_t i = 0; i < flows.size(); ++i) flows[i].id = i;
  return flows;
}

std::vector<ScheduleReport> compare_schedules(const Topology& t, const RankMap& rm,
                                              const SizeMatrix& sizes,
                                              const std::vector<ScheduleKind>& kinds,
                                              const SimConfig& cfg) {
  if (sizes.ranks() != rm.ranks())
    throw ConfigError("size matrix has " + std::to_string(sizes.ranks()) + " ranks, rank map " +
                      std::to_string(rm.ranks()));
  std::vector<ScheduleReport> out;
  for (ScheduleKind k : kinds) {
    const SimResult r = simulate(t, rm, build_alltoall(k, sizes), cfg);
    ScheduleReport rep{k, r.makespan, {}};
    double prev = 0.0;
    for (double end : r.phase_finish) {
      rep.phase_seconds.push_back(end - prev);
      prev = end;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace haloflow
