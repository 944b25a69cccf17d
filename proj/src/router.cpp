#include "haloflow/router.hpp"

#include <exception>
#include <thread>

#include "haloflow/errors.hpp"

namespace haloflow {

std::string to_string(Tag t) {
  switch (t) {
    case Tag::Counts: return "counts";
    case Tag::Indices: return "indices";
    case Tag::Halo: return "halo";
  }
  return "?";
}

Router::Router(std::uint32_t ranks)
    : ranks_(ranks), boxes_(static_cast<std::size_t>(ranks) * ranks), rounds_(ranks, 0) {
  if (ranks == 0) throw ConfigError("router needs at least one rank");
}

void Router::check_rank(std::uint32_t r) const {
  if (r >= ranks_) throw ProtocolError("rank " + std::to_string(r) + " not attached to router");
}

void Router::send(std::uint32_t src, std::uint32_t dst, Message m) {
  check_rank(src);
  check_rank(dst);
  {
    std::lock_guard lock(mu_);
    if (failure_) throw ProtocolError("router failed: " + *failure_);
    box(src, dst).push_back(std::move(m));
    ++sent_;
  }
  cv_.notify_all();
}

Message Router::recv(std::uint32_t dst, std::uint32_t src, Tag expected) {
  check_rank(src);
  check_rank(dst);
  std::unique_lock lock(mu_);
  auto& q = box(src, dst);
  if (blocking_) {
    cv_.wait(lock, [&] { return failure_.has_value() || !q.empty(); });
  }
  if (failure_) throw ProtocolError("router failed: " + *failure_);
  if (q.empty())
    throw ProtocolError("rank " + std::to_string(dst) + " expected a " + to_string(expected) +
                        " message from rank " + std::to_string(src) + " but none was posted");
  Message m = std::move(q.front());
  q.pop_front();
  if (m.tag != expected)
    throw ProtocolError("rank " + std::to_string(dst) + " expected " + to_string(expected) +
                        " from rank " + std::to_string(src) + ", got " + to_string(m.tag));
  return m;
}

void Router::fail(const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    if (!failure_) failure_ = reason;
  }
  cv_.notify_all();
}

bool Router::failed() const {
  std::lock_guard lock(mu_);
  return failure_.has_value();
}

void Router::set_blocking(bool blocking) {
  std::lock_guard lock(mu_);
  blocking_ = blocking;
}

std::uint64_t Router::rounds(std::uint32_t rank) const {
  check_rank(rank);
  std::lock_guard lock(mu_);
  return rounds_[rank];
}

void Router::complete_round(std::uint32_t rank) {
  check_rank(rank);
  std::lock_guard lock(mu_);
  ++rounds_[rank];
}

std::uint64_t Router::messages_sent() const {
  std::lock_guard lock(mu_);
  return sent_;
}

bool Router::drained() const {
  std::lock_guard lock(mu_);
  for (const auto& q : boxes_)
    if (!q.empty()) return false;
  return true;
}

void run_round(Router& router, ExecMode mode, const std::function<void(std::uint32_t)>& post,
               const std::function<void(std::uint32_t)>& complete) {
  const std::uint32_t p = router.ranks();
  if (mode == ExecMode::RoundBased) {
    router.set_blocking(false);
    try {
      for (std::uint32_t r = 0; r < p; ++r) post(r);
      for (std::uint32_t r = 0; r < p; ++r) complete(r);
    } catch (const std::exception& e) {
      router.fail(e.what());
      throw;
    }
    return;
  }

  router.set_blocking(true);
  std::mutex err_mu;
  std::exception_ptr first;
  {
    std::vector<std::jthread> workers;
    workers.reserve(p);
    for (std::uint32_t r = 0; r < p; ++r) {
      workers.emplace_back([&, r] {
        try {
          post(r);
          complete(r);
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mu);
          // Peers woken by the poisoning report secondary errors; keep the root cause.
          if (!first) first = std::current_exception();
          router.fail(e.what());
        }
      });
    }
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace haloflow
