#pragma once

#include <iosfwd>

#include "trusdn/sim.hpp"

namespace trusdn {

struct BenchConfig {
  uint32_t flows = 1;
  uint32_t repeats = 1;
  HandshakeMode mode = HandshakeMode::Psk;
  uint64_t seed = 1;
  std::string csv_path;
};

struct BenchRecord {
  uint32_t flow = 0;
  HandshakeMode mode = HandshakeMode::Psk;
  uint64_t first_packet_ticks = 0;
  uint64_t keygen_wall_ns = 0;
  uint64_t distribution_wall_ns = 0;
  uint32_t handshake_messages = 0;
  uint32_t handshake_pk_ops = 0;
};

// Sequentially opens cfg.flows fresh flows per repeat, flushing the switch
// FIB before each so every flow costs a full packet-in round trip.
// Tick columns are deterministic under a fixed seed; wall-clock columns
// measure only local computation and are not.
std::vector<BenchRecord> cmd_bench(const BenchConfig& cfg);

void write_csv(const std::vector<BenchRecord>& rows, const std::string& path);

struct ColumnStats {
  std::string name;
  double min = 0, max = 0, mean = 0, median = 0, stddev = 0;  // population stddev
};

// Statistics for every numeric CSV column.
std::vector<ColumnStats> summarize_csv(const std::string& path);
void print_summary(const std::vector<ColumnStats>& stats, std::ostream& os);

}  // namespace trusdn
