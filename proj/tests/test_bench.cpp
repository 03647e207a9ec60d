#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "trusdn/bench.hpp"

using namespace trusdn;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& name) : path("/tmp/trusdn-test-" + name + ".csv") {}
  ~TempCsv() { std::remove(path.c_str()); }
};

// Brute-force statistics oracle, independent of summarize_csv.
struct Oracle {
  double min, max, mean, median, stddev;
  explicit Oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    min = v.front();
    max = v.back();
    double sum = 0;
    for (double x : v) sum += x;
    mean = sum / v.size();
    median = v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    stddev = std::sqrt(var / v.size());
  }
};

}  // namespace

TEST_CASE("psk bench: constant tick latency, zero pk ops, three messages") {
  BenchConfig cfg;
  cfg.flows = 50;
  cfg.seed = 9;
  auto rows = cmd_bench(cfg);
  REQUIRE(rows.size() == 50);
  for (const auto& r : rows) {
    CHECK(r.first_packet_ticks == rows[0].first_packet_ticks);
    CHECK(r.handshake_pk_ops == 0);
    CHECK(r.handshake_messages == 3);
    CHECK(r.keygen_wall_ns > 0);
    CHECK(r.distribution_wall_ns > 0);
  }
}

TEST_CASE("baseline bench: four pk ops per endpoint, no grant cost") {
  BenchConfig cfg;
  cfg.flows = 20;
  cfg.mode = HandshakeMode::BaselinePk;
  cfg.seed = 9;
  auto rows = cmd_bench(cfg);
  REQUIRE(rows.size() == 20);
  for (const auto& r : rows) {
    CHECK(r.handshake_pk_ops == 4);
    CHECK(r.keygen_wall_ns == 0);
    CHECK(r.distribution_wall_ns == 0);
  }
}

TEST_CASE("psk first-packet latency exceeds the control path by exactly 2 ticks") {
  BenchConfig psk;
  psk.flows = 10;
  psk.seed = 4;
  BenchConfig pk = psk;
  pk.mode = HandshakeMode::BaselinePk;
  auto psk_rows = cmd_bench(psk);
  auto pk_rows = cmd_bench(pk);
  for (size_t i = 0; i < psk_rows.size(); ++i)
    CHECK(psk_rows[i].first_packet_ticks == pk_rows[i].first_packet_ticks + 2);
}

TEST_CASE("tick columns are deterministic under a fixed seed") {
  BenchConfig cfg;
  cfg.flows = 15;
  cfg.repeats = 2;
  cfg.seed = 77;
  auto a = cmd_bench(cfg);
  auto b = cmd_bench(cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first_packet_ticks == b[i].first_packet_ticks);
    CHECK(a[i].handshake_messages == b[i].handshake_messages);
    CHECK(a[i].handshake_pk_ops == b[i].handshake_pk_ops);
  }
}

TEST_CASE("invalid bench configuration is rejected") {
  BenchConfig cfg;
  cfg.flows = 0;
  CHECK_THROWS_AS(cmd_bench(cfg), ParseError);
  cfg.flows = 1;
  cfg.repeats = 0;
  CHECK_THROWS_AS(cmd_bench(cfg), ParseError);
}

TEST_CASE("csv round trip and summary against the brute-force oracle") {
  BenchConfig cfg;
  cfg.flows = 40;
  cfg.seed = 12;
  auto rows = cmd_bench(cfg);
  TempCsv csv("roundtrip");
  write_csv(rows, csv.path);

  auto stats = summarize_csv(csv.path);
  REQUIRE(stats.size() == 6);  // all columns but "mode" are numeric

  auto column = [&](const std::string& name) -> std::vector<double> {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (name == "flow") v.push_back(r.flow);
      if (name == "first_packet_ticks") v.push_back(r.first_packet_ticks);
      if (name == "keygen_wall_ns") v.push_back(r.keygen_wall_ns);
      if (name == "distribution_wall_ns") v.push_back(r.distribution_wall_ns);
      if (name == "handshake_messages") v.push_back(r.handshake_messages);
      if (name == "handshake_pk_ops") v.push_back(r.handshake_pk_ops);
    }
    return v;
  };
  for (const auto& s : stats) {
    Oracle o(column(s.name));
    CHECK(std::fabs(s.min - o.min) <= 1e-9);
    CHECK(std::fabs(s.max - o.max) <= 1e-9);
    CHECK(std::fabs(s.mean - o.mean) <= 1e-9);
    CHECK(std::fabs(s.median - o.median) <= 1e-9);
    CHECK(std::fabs(s.stddev - o.stddev) <= 1e-9);
  }
}

TEST_CASE("summary edge cases: constant and two-value columns") {
  TempCsv csv("edge");
  {
    std::ofstream out(csv.path);
    out << "constant,pair\n7,1\n7,3\n";
  }
  auto stats = summarize_csv(csv.path);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].name == "constant");
  CHECK(stats[0].stddev == 0.0);
  CHECK(stats[0].mean == 7.0);
  CHECK(stats[1].mean == 2.0);
  CHECK(stats[1].median == 2.0);
}

TEST_CASE("summary error handling") {
  CHECK_THROWS_AS(summarize_csv("/tmp/trusdn-no-such-file.csv"), IoError);

  TempCsv empty("empty");
  { std::ofstream out(empty.path); }
  CHECK_THROWS_AS(summarize_csv(empty.path), ParseError);

  TempCsv ragged("ragged");
  {
    std::ofstream out(ragged.path);
    out << "a,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS(summarize_csv(ragged.path), ParseError);

  TempCsv text("text");
  {
    std::ofstream out(text.path);
    out << "a\nhello\nworld\n";
  }
  CHECK_THROWS_AS(summarize_csv(text.path), ParseError);  // no numeric columns
}
