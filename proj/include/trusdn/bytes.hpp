#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trusdn {

using Bytes = std::vector<uint8_t>;
using Digest32 = std::array<uint8_t, 32>;

Bytes to_bytes(std::string_view s);
std::string to_hex(std::span<const uint8_t> data);
std::optional<Bytes> from_hex(std::string_view hex);

// BLAKE2b-256 over the concatenation of the given parts.
Digest32 hash32(std::initializer_list<std::span<const uint8_t>> parts);
Digest32 hash32(std::span<const uint8_t> data);
std::array<uint8_t, 64> hash64(std::initializer_list<std::span<const uint8_t>> parts);

bool ct_equal(std::span<const uint8_t> a, std::span<const uint8_t> b);

// Little-endian serialization used by every wire structure in the project.
class ByteWriter {
 public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void raw(std::span<const uint8_t> data);
  void blob(std::span<const uint8_t> data);  // u32 length prefix + bytes
  void str(std::string_view s);

  Bytes take() { return std::move(out_); }
  const Bytes& bytes() const { return out_; }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  Bytes raw(size_t n);
  Bytes blob();
  std::string str();
  template <size_t N>
  std::array<uint8_t, N> arr() {
    Bytes b = raw(N);
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), b.data(), N);
    return out;
  }

  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(size_t n);
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

struct DecodeError : std::runtime_error {
  explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace trusdn
