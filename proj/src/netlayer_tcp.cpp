#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <future>
#include <mutex>
#include <thread>

#include "pibench/netlayer.hpp"

namespace pibench::netlayer {

namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text() { return std::strerror(errno); }

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool read_exact(int fd, std::uint8_t* p, std::size_t n, Clock::time_point deadline) {
  while (n > 0) {
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready <= 0) {
      if (ready < 0 && errno == EINTR) continue;
      return false;
    }
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

sockaddr_in resolve(const HostPort& hp) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(hp.port);
  if (const int rc = ::getaddrinfo(hp.host.c_str(), port.c_str(), &hints, &res); rc != 0 || !res)
    throw TransportError("cannot resolve " + hp.str() + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  return addr;
}

// Retries until the peer's listener accepts or the deadline passes.
int dial(const HostPort& hp, Clock::time_point deadline) {
  const sockaddr_in addr = resolve(hp);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket(): " + errno_text());
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      set_nodelay(fd);
      return fd;
    }
    ::close(fd);
    if (Clock::now() >= deadline) return -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

struct Link {
  int fd = -1;
  int peer_rank = -1;
  std::string peer_address;
  std::mutex send_mutex;
  std::atomic<bool> broken{false};
  std::thread reader;

  std::string describe() const { return "rank " + std::to_string(peer_rank) + " (" + peer_address + ")"; }
};

class TcpEndpoint final : public Endpoint {
 public:
  TcpEndpoint(int rank, int size, std::string address, std::array<std::unique_ptr<Link>, 2> links)
      : Endpoint(rank, size), address_(std::move(address)), links_(std::move(links)) {
    for (auto d : {Direction::left, Direction::right}) {
      Link& link = *links_[static_cast<int>(d)];
      link.reader = std::thread([this, d] { read_loop(d); });
    }
  }

  ~TcpEndpoint() override { close(); }

  std::string address() const override { return address_; }

  taskgraph::Future<taskgraph::Unit> send_halo(Direction neighbor, std::uint32_t step,
                                               std::vector<double> cells) override {
    using taskgraph::Unit;
    Link& link = *links_[static_cast<int>(neighbor)];
    std::vector<std::uint8_t> bytes;
    try {
      bytes = encode_frame(Frame{step, neighbor, std::move(cells)});
    } catch (...) {
      return taskgraph::make_failed<Unit>(std::current_exception());
    }
    if (!link.broken.load()) {
      std::lock_guard lock(link.send_mutex);
      if (write_all(link.fd, bytes.data(), bytes.size())) return taskgraph::make_ready(Unit{});
      link.broken = true;
      return taskgraph::make_failed<Unit>(std::make_exception_ptr(
          TransportError("send to " + link.describe() + " failed: " + errno_text())));
    }
    return taskgraph::make_failed<Unit>(
        std::make_exception_ptr(TransportError("send to " + link.describe() + " failed: link closed")));
  }

  void close() override {
    if (closing_.exchange(true)) return;
    for (auto& link : links_) ::shutdown(link->fd, SHUT_RDWR);
    for (auto& link : links_)
      if (link->reader.joinable()) link->reader.join();
    for (auto& link : links_) {
      ::close(link->fd);
      link->fd = -1;
    }
  }

 private:
  void read_loop(Direction d) {
    Link& link = *links_[static_cast<int>(d)];
    std::vector<std::uint8_t> buffer;
    std::array<std::uint8_t, 1 << 16> chunk{};
    std::string reason = "peer closed the connection";
    for (;;) {
      const ssize_t r = ::recv(link.fd, chunk.data(), chunk.size(), 0);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) {
        if (r < 0) reason = errno_text();
        break;
      }
      buffer.insert(buffer.end(), chunk.begin(), chunk.begin() + r);
      try {
        std::size_t offset = 0;
        for (;;) {
          std::size_t used = 0;
          auto frame = decode_frame(std::span(buffer).subspan(offset), used);
          if (!frame) break;
          offset += used;
          inbox().set({frame->step, mirror(frame->direction)}, std::move(frame->payload));
        }
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(offset));
      } catch (const std::exception& e) {
        reason = std::string("protocol error: ") + e.what();
        break;
      }
    }
    link.broken = true;
    // Only halos travelling on this link are affected; the other link may
    // still have frames in flight.
    inbox().fail_where([d](const HaloKey& k) { return k.direction == d; },
                       std::make_exception_ptr(TransportError("link to " + link.describe() + " lost: " + reason)));
  }

  std::string address_;
  std::array<std::unique_ptr<Link>, 2> links_;
  std::atomic<bool> closing_{false};
};

}  // namespace

HostPort parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("expected HOST:PORT, got '" + text + "'");
  HostPort hp;
  hp.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port > 65535) throw std::out_of_range("port");
    hp.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in '" + text + "'");
  }
  return hp;
}

TcpListener::TcpListener(const HostPort& where) {
  const sockaddr_in addr = resolve(where);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError("socket(): " + errno_text());
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = errno_text();
    ::close(fd_);
    throw TransportError("cannot listen on " + where.str() + ": " + err);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  local_ = {where.host, ntohs(bound.sin_port)};
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), local_(other.local_) {
  other.fd_ = -1;
}

std::unique_ptr<Endpoint> establish_ring(TcpListener listener, const std::vector<HostPort>& addresses,
                                         int rank, std::chrono::milliseconds timeout) {
  const int n = static_cast<int>(addresses.size());
  if (n < 1 || rank < 0 || rank >= n) throw std::invalid_argument("establish_ring: rank out of range");
  const auto deadline = Clock::now() + timeout;

  // Ring edge e joins a = e (its right end) and b = e + 1 (its left end).
  // The lower rank dials; on the self-edge of a single rank, the a-side dials.
  struct Need {
    int edge;
    int peer;
    bool dial;
  };
  const int left_edge = (rank + n - 1) % n;
  const Need needs[2] = {
      {left_edge, left_edge, rank < left_edge},                 // Direction::left
      {rank, (rank + 1) % n, rank <= (rank + 1) % n},           // Direction::right
  };

  std::array<std::unique_ptr<Link>, 2> links;
  std::vector<std::string> unreachable;

  for (int d = 0; d < 2; ++d) {
    if (!needs[d].dial) continue;
    const HostPort& target = addresses[needs[d].peer];
    const int fd = dial(target, deadline);
    if (fd < 0) {
      unreachable.push_back("rank " + std::to_string(needs[d].peer) + " at " + target.str());
      continue;
    }
    std::uint8_t hello[8];
    put_u32(hello, static_cast<std::uint32_t>(rank));
    put_u32(hello + 4, static_cast<std::uint32_t>(needs[d].edge));
    if (!write_all(fd, hello, sizeof hello)) {
      ::close(fd);
      unreachable.push_back("rank " + std::to_string(needs[d].peer) + " at " + target.str());
      continue;
    }
    links[d] = std::make_unique<Link>();
    links[d]->fd = fd;
    links[d]->peer_rank = needs[d].peer;
    links[d]->peer_address = target.str();
  }

  auto accepts_pending = [&] {
    for (int d = 0; d < 2; ++d)
      if (!needs[d].dial && !links[d]) return true;
    return false;
  };

  while (unreachable.empty() && accepts_pending()) {
    pollfd pfd{listener.fd(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) break;
    const int fd = ::accept(listener.fd(), nullptr, nullptr);
    if (fd < 0) continue;
    std::uint8_t hello[8];
    if (!read_exact(fd, hello, sizeof hello, deadline)) {
      ::close(fd);
      continue;
    }
    const int from = static_cast<int>(get_u32(hello));
    const int edge = static_cast<int>(get_u32(hello + 4));
    int slot = -1;
    if (edge == needs[1].edge && !needs[1].dial && !links[1] && from == needs[1].peer) slot = 1;
    else if (edge == needs[0].edge && !needs[0].dial && !links[0] && from == needs[0].peer) slot = 0;
    if (slot < 0) {
      ::close(fd);
      continue;
    }
    set_nodelay(fd);
    links[slot] = std::make_unique<Link>();
    links[slot]->fd = fd;
    links[slot]->peer_rank = from;
    links[slot]->peer_address = addresses[from].str();
  }

  for (int d = 0; d < 2; ++d)
    if (!needs[d].dial && !links[d])
      unreachable.push_back("rank " + std::to_string(needs[d].peer) + " at " + addresses[needs[d].peer].str() +
                            " (never connected)");

  if (!unreachable.empty()) {
    for (auto& l : links)
      if (l) ::close(l->fd);
    std::string msg = "rank " + std::to_string(rank) + ": ring setup timed out; unreachable:";
    for (const auto& u : unreachable) msg += " " + u + ";";
    throw TransportError(msg);
  }
  return std::make_unique<TcpEndpoint>(rank, n, addresses[rank].str(), std::move(links));
}

std::unique_ptr<Endpoint> establish_ring(const std::vector<HostPort>& addresses, int rank,
                                         std::chrono::milliseconds timeout) {
  if (rank < 0 || rank >= static_cast<int>(addresses.size()))
    throw std::invalid_argument("establish_ring: rank out of range");
  return establish_ring(TcpListener(addresses[rank]), addresses, rank, timeout);
}

std::vector<std::unique_ptr<Endpoint>> make_tcp_loopback_ring(int n, std::chrono::milliseconds timeout) {
  if (n < 1) throw std::invalid_argument("make_tcp_loopback_ring: need at least one rank");
  std::vector<TcpListener> listeners;
  std::vector<HostPort> addresses;
  for (int r = 0; r < n; ++r) {
    listeners.emplace_back(HostPort{"127.0.0.1", 0});
    addresses.push_back(listeners.back().local());
  }
  std::vector<std::future<std::unique_ptr<Endpoint>>> pending;
  for (int r = 0; r < n; ++r)
    pending.push_back(std::async(std::launch::async, [&, r, l = std::move(listeners[r])]() mutable {
      return establish_ring(std::move(l), addresses, r, timeout);
    }));
  std::vector<std::unique_ptr<Endpoint>> out;
  std::exception_ptr first;
  for (auto& f : pending) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!first) first = std::current_exception();
    }
  }
  if (first) std::rethrow_exception(first);
  return out;
}

}  // namespace pibench::netlayer
