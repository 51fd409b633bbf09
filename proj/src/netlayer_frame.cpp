#include <bit>

#include "pibench/netlayer.hpp"

namespace pibench::netlayer {

std::string to_string(Direction d) { return d == Direction::left ? "left" : "right"; }

namespace {

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  if (f.payload.empty()) throw std::invalid_argument("encode_frame: empty payload");
  const std::uint64_t length = 5 + 8 * static_cast<std::uint64_t>(f.payload.size());
  std::vector<std::uint8_t> out;
  out.reserve(8 + length);
  put_le<std::uint64_t>(out, length);
  put_le<std::uint32_t>(out, f.step);
  out.push_back(static_cast<std::uint8_t>(f.direction));
  for (double v : f.payload) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
  consumed = 0;
  if (bytes.size() < kFrameHeaderBytes) return std::nullopt;
  const auto length = get_le<std::uint64_t>(bytes.data());
  if (length <= 5 || (length - 5) % 8 != 0)
    throw ProtocolError("frame length " + std::to_string(length) + " is not 5 + 8k with k >= 1");
  const std::uint8_t dir = bytes[12];
  if (dir > 1) throw ProtocolError("frame direction byte " + std::to_string(dir) + " is not 0 or 1");
  if (bytes.size() - 8 < length) return std::nullopt;

  Frame f;
  f.step = get_le<std::uint32_t>(bytes.data() + 8);
  f.direction = static_cast<Direction>(dir);
  const std::size_t count = (length - 5) / 8;
  f.payload.resize(count);
  const std::uint8_t* p = bytes.data() + kFrameHeaderBytes;
  for (std::size_t i = 0; i < count; ++i)
    f.payload[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
  consumed = 8 + length;
  return f;
}

}  // namespace pibench::netlayer
