// In-process message router standing in for MPI between rank contexts.
//
// Messages are typed, reliable and FIFO per (src, dst) pair. The router is
// safe for concurrent use. Protocols are written as collective rounds: every
// rank first posts its sends, then completes its receives. run_round executes
// a round either with one thread per rank or sequentially on the caller.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace haloflow {

enum class Tag : std::uint8_t { Counts, Indices, Halo };

std::string to_string(Tag t);

struct Message {
  Tag tag = Tag::Halo;
  std::variant<std::vector<std::int64_t>, std::vector<double>> payload;
};

enum class ExecMode { Threaded, RoundBased };

class Router {
 public:
  explicit Router(std::uint32_t ranks);

  std::uint32_t ranks() const { return ranks_; }

  void send(std::uint32_t src, std::uint32_t dst, Message m);
  /// Next message from src to dst; ProtocolError if its tag is not `expected`.
  /// Blocks in threaded mode; fails immediately on an empty queue otherwise.
  Message recv(std::uint32_t dst, std::uint32_t src, Tag expected);

  /// Poisons the router: pending and future operations throw ProtocolError.
  void fail(const std::string& reason);
  bool failed() const;

  void set_blocking(bool blocking);

  /// Collective rounds completed by `rank`.
  std::uint64_t rounds(std::uint32_t rank) const;
  void complete_round(std::uint32_t rank);

  std::uint64_t messages_sent() const;
  /// True when no message is in flight.
  bool drained() const;

 private:
  std::deque<Message>& box(std::uint32_t src, std::uint32_t dst) { return boxes_[dst * ranks_ + src]; }
  void check_rank(std::uint32_t r) const;

  std::uint32_t ranks_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::deque<Message>> boxes_;
  std::vector<std::uint64_t> rounds_;
  std::optional<std::string> failure_;
  std::uint64_t sent_ = 0;
  bool blocking_ = true;
};

/// Runs post(r) then complete(r) for every rank r. The first exception raised
/// by any rank poisons the router (waking blocked peers) and is rethrown.
void run_round(Router& router, ExecMode mode, const std::function<void(std::uint32_t)>& post,
               const std::function<void(std::uint32_t)>& complete);

}  // namespace haloflow
