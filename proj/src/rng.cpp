#include "trusdn/rng.hpp"

#include <sodium.h>

#include <cstring>

namespace trusdn {

Rng::Rng(uint64_t seed) {
  uint8_t seed_bytes[8];
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<uint8_t>(seed >> (8 * i));
  crypto_generichash(key_.data(), key_.size(), seed_bytes, sizeof(seed_bytes), nullptr, 0);
}

void Rng::fill(std::span<uint8_t> out) {
  uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  for (int i = 0; i < 8; ++i) nonce[i] = static_cast<uint8_t>(counter_ >> (8 * i));
  ++counter_;
  std::memset(out.data(), 0, out.size());
  crypto_stream_chacha20_xor(out.data(), out.data(), out.size(), nonce, key_.data());
}

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::array<uint8_t, 32> Rng::block32() {
  std::array<uint8_t, 32> out{};
  fill(out);
  return out;
}

uint64_t Rng::next_u64() {
  uint8_t buf[8];
  fill(buf);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

uint64_t Rng::uniform(uint64_t bound) {
  // Rejection sampling to avoid modulo bias.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double Rng::unit_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Rng Rng::fork() {
  Rng child(0);
  auto material = hash64({std::span<const uint8_t>(key_), std::span<const uint8_t>(bytes(16))});
  std::memcpy(child.key_.data(), material.data(), child.key_.size());
  return child;
}

}  // namespace trusdn
