#pragma once

// Halo transport between localities arranged in a ring.
//
// Wire frame (all little-endian):
//   u64 length   = 5 + payload bytes (excludes the length field itself)
//   u32 step
//   u8  direction  0 = left, 1 = right (the sender's send direction)
//   f64 payload[(length - 5) / 8]

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pibench/taskgraph.hpp"

namespace pibench::netlayer {

enum class Direction : std::uint8_t { left = 0, right = 1 };

constexpr Direction mirror(Direction d) { return d == Direction::left ? Direction::right : Direction::left; }
std::string to_string(Direction d);

struct HaloKey {
  std::uint32_t step = 0;
  Direction direction = Direction::left;
  auto operator<=>(const HaloKey&) const = default;
};

using HaloChannel = taskgraph::Channel<HaloKey, std::vector<double>>;

struct Frame {
  std::uint32_t step = 0;
  Direction direction = Direction::left;
  std::vector<double> payload;
  bool operator==(const Frame&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kFrameHeaderBytes = 8 + 4 + 1;

/// Throws std::invalid_argument on an empty payload.
std::vector<std::uint8_t> encode_frame(const Frame& f);

/// Decodes one frame from the front of `bytes`. Returns nullopt when more
/// bytes are needed; throws ProtocolError on a malformed header.
std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed);

/// One rank's view of the ring. Incoming halos land in `inbox()` under
/// (step, mirror(sender direction)).
class Endpoint {
 public:
  Endpoint(int rank, int size) : rank_(rank), size_(size) {}
  virtual ~Endpoint() = default;
  Endpoint(const Endpoint&) = delete;
  Endpoint& operator=(const Endpoint&) = delete;

  int rank() const { return rank_; }
  int size() const { return size_; }
  int neighbor_rank(Direction d) const {
    return d == Direction::left ? (rank_ + size_ - 1) % size_ : (rank_ + 1) % size_;
  }

  virtual std::string address() const = 0;

  /// Ready once the frame has left this process; failed on a broken link.
  virtual taskgraph::Future<taskgraph::Unit> send_halo(Direction neighbor, std::uint32_t step,
                                                       std::vector<double> cells) = 0;

  virtual void close() = 0;

  HaloChannel& inbox() { return *inbox_; }
  std::shared_ptr<HaloChannel> inbox_handle() const { return inbox_; }

 private:
  int rank_;
  int size_;
  std::shared_ptr<HaloChannel> inbox_ = std::make_shared<HaloChannel>();
};

/// In-process ring: sends deliver directly into the neighbour's inbox.
std::vector<std::unique_ptr<Endpoint>> make_inproc_ring(int n);

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "host:port". Throws std::invalid_argument on malformed input.
HostPort parse_host_port(const std::string& text);

/// Bound listening socket; port 0 asks the kernel for a free port.
class TcpListener {
 public:
  explicit TcpListener(const HostPort& where);
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept;
  TcpListener& operator=(TcpListener&&) = delete;
  TcpListener(const TcpListener&) = delete;

  HostPort local() const { return local_; }
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
  HostPort local_;
};

constexpr std::chrono::milliseconds kDefaultConnectTimeout{30'000};

/// Connects rank `rank` into a TCP ring over `addresses` (one per rank, in
/// rank order). The lower rank of each ring edge dials the higher one.
/// Throws TransportError naming unreachable peers on timeout.
std::unique_ptr<Endpoint> establish_ring(TcpListener listener, const std::vector<HostPort>& addresses,
                                         int rank,
                                         std::chrono::milliseconds timeout = kDefaultConnectTimeout);

std::unique_ptr<Endpoint> establish_ring(const std::vector<HostPort>& addresses, int rank,
                                         std::chrono::milliseconds timeout = kDefaultConnectTimeout);

/// n ranks in this process, each with its own loopback TCP links.
std::vector<std::unique_ptr<Endpoint>> make_tcp_loopback_ring(
    int n, std::chrono::milliseconds timeout = kDefaultConnectTimeout);

}  // namespace pibench::netlayer
