#include "trusdn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace trusdn {

namespace {

const Bytes kSwitchCode = to_bytes("trusdn-switch-core");
const Bytes kSwitchCfg = to_bytes("switch-config-v1");
const Bytes kCtCode = to_bytes("trusdn-ct-app");
const Bytes kCtCfg = to_bytes("ct-config-v1");

}  // namespace

std::vector<BenchRecord> cmd_bench(const BenchConfig& cfg) {
  if (cfg.flows < 1 || cfg.repeats < 1) throw ParseError("flows and repeats must be >= 1");

  std::vector<BenchRecord> rows;
  rows.reserve(size_t{cfg.flows} * cfg.repeats);

  for (uint32_t rep = 0; rep < cfg.repeats; ++rep) {
    uint64_t seed = cfg.seed + uint64_t{rep} * 0x9e3779b9;
    SymmetricKey::reset_context_ids();
    GroupParams group{"trusdn-bench-group"};
    PlatformRegistry registry(group);
    Controller nc(registry, seed);
    Simulator sim(nc, seed ^ 0x5bf03635);
    Rng setup_rng(seed + 1);

    nc.switch_policy = measure_enclave(EnclaveKind::Switch, kSwitchCode, kSwitchCfg);
    nc.ct_policy = measure_enclave(EnclaveKind::ComputeTask, kCtCode, kCtCfg);
    nc.psk_enabled = cfg.mode == HandshakeMode::Psk;

    PlatformId host = registry.create(setup_rng).id();
    SwitchId sw = nc.deploy_and_enroll_switch(host, kSwitchCode, kSwitchCfg, 1);
    CtId c1 = nc.deploy_and_enroll_ct(host, kCtCode, kCtCfg, sw);
    CtId c2 = nc.deploy_and_enroll_ct(host, kCtCode, kCtCfg, sw);
    auto ct1 = nc.ct_ctx(c1);
    auto ct2 = nc.ct_ctx(c2);
    if (cfg.mode == HandshakeMode::BaselinePk) {
      ct1->mode = HandshakeMode::BaselinePk;
      ct2->mode = HandshakeMode::BaselinePk;
      ct1->peer_directory[c2] = ct2->ck_pk();
      ct2->peer_directory[c1] = ct1->ck_pk();
    }

    for (uint32_t i = 0; i < cfg.flows; ++i) {
      // flush installed rules so every session misses again
      nc.switch_ctx(sw)->flush_fib();

      uint16_t src_port = static_cast<uint16_t>(1024 + i % 60000);
      uint16_t dst_port = static_cast<uint16_t>(2048 + i / 60000);
      uint64_t t0 = sim.now();
      std::vector<OutMsg> out;
      FlowKey flow = ct1->open_flow(c2, src_port, dst_port, out);
      sim.submit(NodeId::of_ct(c1), out);
      if (!sim.run_until_idle()) throw Error("bench flow did not quiesce");

      BenchRecord rec;
      rec.flow = i;
      rec.mode = cfg.mode;
      rec.first_packet_ticks = sim.first_packet_at().at(flow.canonical()) - t0;
      if (nc.psk_enabled) {
        rec.keygen_wall_ns = nc.last_keygen_ns;
        rec.distribution_wall_ns = nc.last_distribution_ns;
      }
      const SessionState& session = ct1->sessions.at(flow.canonical());
      rec.handshake_messages = session.handshake_messages;
      rec.handshake_pk_ops = session.handshake_pk_ops;
      rows.push_back(rec);
    }
  }
  return rows;
}

void write_csv(const std::vector<BenchRecord>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "flow,mode,first_packet_ticks,keygen_wall_ns,distribution_wall_ns,"
         "handshake_messages,handshake_pk_ops\n";
  for (const BenchRecord& r : rows) {
    out << r.flow << ',' << (r.mode == HandshakeMode::Psk ? "psk" : "pk") << ','
        << r.first_packet_ticks << ',' << r.keygen_wall_ns << ','
        << r.distribution_wall_ns << ',' << r.handshake_messages << ','
        << r.handshake_pk_ops << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ColumnStats> summarize_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty CSV: " + path);
  std::vector<std::string> headers;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  if (headers.empty()) throw ParseError("CSV has no columns: " + path);

  std::vector<std::vector<double>> columns(headers.size());
  std::vector<bool> numeric(headers.size(), true);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= headers.size())
        throw ParseError(path + ":" + std::to_string(lineno) + ": too many cells");
      try {
        size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) numeric[col] = false;
        columns[col].push_back(v);
      } catch (const std::exception&) {
        numeric[col] = false;
      }
      ++col;
    }
    if (col != headers.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": short row");
  }

  std::vector<ColumnStats> stats;
  for (size_t c = 0; c < headers.size(); ++c) {
    if (!numeric[c] || columns[c].empty()) continue;
    std::vector<double> v = columns[c];
    std::sort(v.begin(), v.end());
    ColumnStats s;
    s.name = headers[c];
    s.min = v.front();
    s.max = v.back();
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / v.size();
    s.median = v.size() % 2 ? v[v.size() / 2]
                            : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
    double var = 0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / v.size());
    stats.push_back(s);
  }
  if (stats.empty()) throw ParseError("no numeric columns in: " + path);
  return stats;
}

void print_summary(const std::vector<ColumnStats>& stats, std::ostream& os) {
  os << std::left << std::setw(24) << "column" << std::right << std::setw(14) << "min"
     << std::setw(14) << "max" << std::setw(16) << "mean" << std::setw(14) << "median"
     << std::setw(16) << "stddev" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const ColumnStats& s : stats) {
    os << std::left << std::setw(24) << s.name << std::right << std::setw(14) << s.min
       << std::setw(14) << s.max << std::setw(16) << s.mean << std::setw(14) << s.median
       << std::setw(16) << s.stddev << '\n';
  }
}

}  // namespace trusdn
