#pragma once

#include <functional>
#include <queue>

#include "trusdn/control_plane.hpp"

namespace trusdn {

struct TranscriptEntry {
  uint64_t tick;
  Segment seg;
  NodeId src;
  NodeId dst;
  Bytes wire;
  bool dropped = false;
  bool tampered = false;
};

// The adversary's view and levers over the message fabric: a full
// append-only recording plus drop/tamper filters applied at send time.
struct AdversaryTap {
  std::vector<TranscriptEntry> transcript;
  std::map<Segment, double> drop_rates;

  struct Filter {
    enum class Kind { Drop, Tamper };
    Kind kind;
    Segment seg;
    std::optional<NodeId::Kind> dst_kind;
    size_t remaining = 1;
  };
  std::vector<Filter> filters;

  void arm_drop(Segment seg, size_t count,
                std::optional<NodeId::Kind> dst_kind = std::nullopt) {
    filters.push_back({Filter::Kind::Drop, seg, dst_kind, count});
  }
  void arm_tamper(Segment seg, size_t count,
                  std::optional<NodeId::Kind> dst_kind = std::nullopt) {
    filters.push_back({Filter::Kind::Tamper, seg, dst_kind, count});
  }

  Digest32 digest() const;
};

// Deterministic discrete-tick message fabric: a handler dispatched at tick
// T has its j-th emitted message delivered at T + 1 + j, so every control
// message in front of a data packet costs one visible tick.
class Simulator {
 public:
  Simulator(Controller& nc, uint64_t seed);

  uint64_t now() const { return now_; }
  AdversaryTap tap;

  // Schedule messages emitted outside any handler (test drivers, CT calls
  // made directly); same T+1+j schedule with T = now.
  void submit(NodeId src, const std::vector<OutMsg>& msgs);

  // Adversary injection: forged bytes delivered at now+1.
  void inject(Segment seg, NodeId dst, Bytes wire);
  // Re-deliver a recorded transcript entry.
  void replay(size_t transcript_index);

  // Runs until no events remain or the tick budget is exhausted; returns
  // false on budget exhaustion.
  bool run_until_idle(uint64_t max_ticks = 100000);

  // Per-flow tick of first gamma delivery at the destination CT.
  const std::map<FlowKey, uint64_t>& first_packet_at() const { return first_packet_at_; }

  // Fabric-level counters plus every node's counters, name-prefixed.
  std::map<std::string, uint64_t> metrics();

 private:
  struct Event {
    uint64_t deliver_at;
    uint64_t seq;
    Segment seg;
    NodeId src;
    NodeId dst;
    Bytes wire;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.deliver_at, a.seq) > std::tie(b.deliver_at, b.seq);
    }
  };

  void post(uint64_t base_tick, size_t index, NodeId src, const OutMsg& m);
  void dispatch(const Event& ev);

  Controller& nc_;
  Rng rng_;
  uint64_t now_ = 0;
  uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::map<FlowKey, uint64_t> first_packet_at_;
  std::map<std::string, uint64_t> fabric_counters_;
};

}  // namespace trusdn
