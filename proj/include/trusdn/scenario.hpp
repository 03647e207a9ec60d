#pragma once

#include "trusdn/sim.hpp"

namespace trusdn {

// Declarative scenario: topology, flows, an ordered adversary script and
// named assertions over the final state and transcript.
struct Scenario {
  struct Host {
    DomainId domain = 1;
    uint32_t cts = 0;
  };
  struct Flow {
    uint32_t src_ct = 0;  // 1-based index into the enrolled CT sequence
    uint32_t dst_ct = 0;
    uint16_t src_port = 1000;
    uint16_t dst_port = 2000;
  };
  struct Action {
    std::string kind;       // drop_rate | tamper | forge_rule | replay_packet_in |
                            // replay_enrollment | sybil_switch | cuckoo
    std::string segment;    // for drop_rate / tamper
    double rate = 0.0;      // drop_rate
    uint32_t count = 1;     // tamper
    uint32_t target = 1;    // switch / host index where applicable
  };

  std::string name;
  uint64_t seed = 1;
  uint64_t tick_limit = 100000;
  std::vector<Host> hosts;
  std::vector<Flow> flows;
  std::vector<Action> script;
  std::vector<std::string> assertions;
};

struct ScenarioReport {
  std::string name;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, bool>> results;
  std::string transcript_digest;  // hex
  std::map<std::string, uint64_t> metrics;

  bool all_passed() const;
};

Scenario parse_scenario(const std::string& json_text);  // throws ParseError
Scenario load_scenario_file(const std::string& path);   // throws IoError/ParseError

ScenarioReport run_scenario(const Scenario& scenario, uint64_t seed);

}  // namespace trusdn
