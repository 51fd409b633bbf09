#include <doctest.h>

#include <bit>
#include <cstring>
#include <random>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "pibench/netlayer.hpp"

using namespace pibench::netlayer;
using namespace std::chrono_literals;

namespace {

std::vector<std::uint64_t> bits_of(const std::vector<double>& v) {
  std::vector<std::uint64_t> out;
  for (double d : v) out.push_back(std::bit_cast<std::uint64_t>(d));
  return out;
}

// A loopback port that nothing listens on right now.
std::uint16_t closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  ::close(fd);
  return ntohs(a.sin_port);
}

}  // namespace

TEST_CASE("golden frame bytes") {
  const std::vector<std::uint8_t> golden{0x0D, 0, 0, 0, 0, 0, 0, 0,           // length 13
                                         0,    0, 0, 0,                       // step 0
                                         0,                                   // direction left
                                         0,    0, 0, 0, 0, 0, 0xF0, 0x3F};   // 1.0
  const auto bytes = encode_frame({0, Direction::left, {1.0}});
  CHECK(bytes == golden);
  std::size_t used = 0;
  const auto f = decode_frame(golden, used);
  REQUIRE(f.has_value());
  CHECK(used == 21);
  CHECK(*f == Frame{0, Direction::left, {1.0}});
}

TEST_CASE("header layout for a multi-cell frame") {
  const auto bytes = encode_frame({0x01020304, Direction::right, {2.0, -0.0}});
  REQUIRE(bytes.size() == 13 + 16);
  CHECK(bytes[0] == 21);
  CHECK(bytes[8] == 0x04);
  CHECK(bytes[11] == 0x01);
  CHECK(bytes[12] == 1);
  CHECK(bytes[13 + 15] == 0x80);  // sign bit of -0.0
}

TEST_CASE("fuzzed frames round-trip exactly") {
  std::mt19937_64 rng(2024);
  std::vector<std::uint8_t> stream;
  std::vector<Frame> sent;
  for (int i = 0; i < 10'000; ++i) {
    Frame f;
    f.step = static_cast<std::uint32_t>(rng());
    f.direction = rng() % 2 ? Direction::right : Direction::left;
    const std::size_t n = 1 + rng() % 9;
    for (std::size_t k = 0; k < n; ++k) {
      // Any bit pattern, NaN payloads included.
      f.payload.push_back(std::bit_cast<double>(rng()));
    }
    const auto bytes = encode_frame(f);
    REQUIRE(bytes.size() == kFrameHeaderBytes + 8 * n);
    std::size_t used = 0;
    const auto back = decode_frame(bytes, used);
    REQUIRE(back.has_value());
    REQUIRE(used == bytes.size());
    REQUIRE(back->step == f.step);
    REQUIRE(back->direction == f.direction);
    REQUIRE(bits_of(back->payload) == bits_of(f.payload));
    if (i < 200) {
      stream.insert(stream.end(), bytes.begin(), bytes.end());
      sent.push_back(f);
    }
  }
  // Back-to-back frames in one buffer decode in order.
  std::size_t offset = 0;
  for (const auto& f : sent) {
    std::size_t used = 0;
    auto got = decode_frame(std::span(stream).subspan(offset), used);
    REQUIRE(got.has_value());
    CHECK(bits_of(got->payload) == bits_of(f.payload));
    offset += used;
  }
  CHECK(offset == stream.size());
}

TEST_CASE("decoder edge cases") {
  const auto bytes = encode_frame({7, Direction::right, {1.0, 2.0}});
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    std::size_t used = 99;
    CHECK_FALSE(decode_frame(std::span(bytes).first(cut), used).has_value());
  }
  auto bad_dir = bytes;
  bad_dir[12] = 2;
  std::size_t used = 0;
  CHECK_THROWS_AS(decode_frame(bad_dir, used), ProtocolError);

  auto bad_len = bytes;
  bad_len[0] = 5;  // header only, no payload
  CHECK_THROWS_AS(decode_frame(bad_len, used), ProtocolError);
  bad_len[0] = 12;  // payload not a whole number of doubles
  CHECK_THROWS_AS(decode_frame(bad_len, used), ProtocolError);

  CHECK_THROWS_AS(encode_frame({0, Direction::left, {}}), std::invalid_argument);
}

TEST_CASE("ring neighbours") {
  auto ring = make_inproc_ring(4);
  CHECK(ring[0]->neighbor_rank(Direction::left) == 3);
  CHECK(ring[0]->neighbor_rank(Direction::right) == 1);
  CHECK(ring[3]->neighbor_rank(Direction::right) == 0);
  CHECK(mirror(Direction::left) == Direction::right);
}

TEST_CASE("halo routing is the same over inproc and tcp") {
  auto check = [](std::vector<std::unique_ptr<Endpoint>> ring) {
    ring[0]->send_halo(Direction::right, 3, {2.5}).get();
    CHECK(ring[1]->inbox().get({3, Direction::left}).get() == std::vector<double>{2.5});
    ring[1]->send_halo(Direction::right, 3, {-1.0}).get();  // wraps to rank 0
    CHECK(ring[0]->inbox().get({3, Direction::left}).get() == std::vector<double>{-1.0});
    ring[0]->send_halo(Direction::left, 4, {7.0}).get();
    CHECK(ring[1]->inbox().get({4, Direction::right}).get() == std::vector<double>{7.0});
    for (auto& ep : ring) ep->close();
  };
  check(make_inproc_ring(2));
  check(make_tcp_loopback_ring(2, 10s));
}

TEST_CASE("single rank ring talks to itself") {
  for (bool tcp : {false, true}) {
    auto ring = tcp ? make_tcp_loopback_ring(1, 10s) : make_inproc_ring(1);
    ring[0]->send_halo(Direction::right, 0, {1.0}).get();
    ring[0]->send_halo(Direction::left, 0, {2.0}).get();
    CHECK(ring[0]->inbox().get({0, Direction::left}).get() == std::vector<double>{1.0});
    CHECK(ring[0]->inbox().get({0, Direction::right}).get() == std::vector<double>{2.0});
    ring[0]->close();
  }
}

TEST_CASE("tcp links keep per-link order and absorb any receive order") {
  auto ring = make_tcp_loopback_ring(3, 10s);
  for (std::uint32_t s = 0; s < 500; ++s) {
    ring[0]->send_halo(Direction::right, s, {static_cast<double>(s)});
    ring[2]->send_halo(Direction::left, s, {-static_cast<double>(s)});
  }
  for (std::uint32_t s = 500; s-- > 0;) {
    CHECK(ring[1]->inbox().get({s, Direction::left}).get() == std::vector<double>{static_cast<double>(s)});
    CHECK(ring[1]->inbox().get({s, Direction::right}).get() == std::vector<double>{-static_cast<double>(s)});
  }
  for (auto& ep : ring) ep->close();
}

TEST_CASE("send after the peer closed fails") {
  auto ring = make_inproc_ring(2);
  ring[1]->close();
  auto f = ring[0]->send_halo(Direction::right, 0, {1.0});
  f.wait();
  CHECK(f.failed());
  CHECK_THROWS_WITH(f.get(), doctest::Contains("peer closed"));
}

TEST_CASE("tcp peer loss fails pending halos from that side") {
  auto ring = make_tcp_loopback_ring(3, 10s);
  auto pending = ring[1]->inbox().get({0, Direction::left});
  ring[0]->close();
  CHECK_THROWS(pending.get());
  // Eventually sends toward the dead peer fail too.
  bool failed = false;
  for (int i = 0; i < 200 && !failed; ++i) {
    auto f = ring[1]->send_halo(Direction::left, static_cast<std::uint32_t>(i), {1.0});
    f.wait();
    failed = f.failed();
    std::this_thread::sleep_for(5ms);
  }
  CHECK(failed);
  ring[1]->close();
  ring[2]->close();
}

TEST_CASE("establish_ring times out naming the unreachable peer") {
  TcpListener mine(HostPort{"127.0.0.1", 0});
  const HostPort ghost{"127.0.0.1", closed_port()};
  std::vector<HostPort> addrs{mine.local(), ghost};
  try {
    establish_ring(std::move(mine), addrs, 0, 300ms);
    FAIL("expected a timeout");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find(ghost.str()) != std::string::npos);
  }
}

TEST_CASE("host:port parsing") {
  const auto hp = parse_host_port("127.0.0.1:4000");
  CHECK(hp.host == "127.0.0.1");
  CHECK(hp.port == 4000);
  CHECK_THROWS_AS(parse_host_port("nohost"), std::invalid_argument);
  CHECK_THROWS_AS(parse_host_port("h:99999"), std::invalid_argument);
}
