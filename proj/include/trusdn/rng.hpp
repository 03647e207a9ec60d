#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "trusdn/bytes.hpp"

namespace trusdn {

// Deterministic randomness source: a ChaCha20 stream keyed from the seed.
// Every module draws randomness through one of these so that a fixed seed
// reproduces a run bit for bit.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  void fill(std::span<uint8_t> out);
  Bytes bytes(size_t n);
  std::array<uint8_t, 32> block32();
  uint64_t next_u64();
  // Uniform in [0, bound), bound > 0.
  uint64_t uniform(uint64_t bound);
  double unit_double();  // [0, 1)

  // Derive an independent stream, e.g. for a parallel bench worker.
  Rng fork();

 private:
  std::array<uint8_t, 32> key_{};
  uint64_t counter_ = 0;
};

}  // namespace trusdn
