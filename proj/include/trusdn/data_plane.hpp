#pragma once

#include <deque>
#include <map>
#include <vector>

#include "trusdn/messages.hpp"

namespace trusdn {

// Inter-switch tunnel frame: the serialized packet sealed under the domain
// key, with (src, dst, epoch) authenticated as associated data.
struct BetaFrame {
  SwitchId src_switch = 0;
  SwitchId dst_switch = 0;
  uint64_t epoch = 0;
  Ciphertext body;

  Bytes aad() const;
  Bytes serialize() const;
  static BetaFrame deserialize(ByteReader& r);
};

// Priority-ordered match-action table. Lookup: highest priority wins, ties
// broken by newest rule. Misses fall through to SendToController.
class Fib {
 public:
  // Idempotent on rule id: re-installing an id replaces the entry.
  void upsert(const FlowRule& rule);
  const FlowRule* lookup(const FlowKey& key) const;
  size_t size() const;
  void clear();
  std::vector<FlowRule> rules() const;

 private:
  struct Entry {
    FlowRule rule;
    uint64_t installed_seq;
  };
  std::vector<Entry> entries_;
  uint64_t next_seq_ = 0;
};

// The enclave-resident software switch. Lives in the switch enclave's
// sealed state; everything here is unreachable from the host.
class SwitchContext {
 public:
  static constexpr size_t kBufferCapacity = 64;    // packets per flow
  static constexpr uint64_t kMissTimeout = 128;    // ticks

  SwitchContext(SwitchId id, DomainId domain, SymmetricKey k_alpha, SymmetricKey k_beta,
                uint64_t epoch);

  SwitchId id() const { return id_; }
  DomainId domain() const { return domain_; }
  uint64_t current_epoch() const { return epoch_; }

  void attach_ct(CtId ct) { local_cts_.push_back(ct); }
  bool has_local_ct(CtId ct) const;

  // Match the packet against the FIB and execute the action; on a miss,
  // seal the packet under K_alpha, emit a packet-in and buffer it.
  void ingress(const Packet& pkt, uint64_t now, std::vector<OutMsg>& out);

  // Sealed control messages from the NC.
  void handle_rule_install(std::span<const uint8_t> payload, uint64_t now,
                           std::vector<OutMsg>& out);
  void handle_release(std::span<const uint8_t> payload, uint64_t now,
                      std::vector<OutMsg>& out);
  void handle_rotate(std::span<const uint8_t> payload);

  BetaFrame emit_beta(const Packet& pkt, SwitchId peer);
  void accept_beta(const BetaFrame& frame, uint64_t now, std::vector<OutMsg>& out);
  void accept_beta_wire(std::span<const uint8_t> payload, uint64_t now,
                        std::vector<OutMsg>& out);

  // Expire buffered flows whose miss timeout has elapsed.
  void expire_buffers(uint64_t now);

  void flush_fib() { fib_.clear(); }
  const Fib& fib() const { return fib_; }
  std::map<std::string, uint64_t> counters;

  // Domain peers reachable over beta tunnels.
  void add_peer(SwitchId peer) { peers_.push_back(peer); }
  bool has_peer(SwitchId peer) const;

 private:
  void execute(const FlowRule& rule, const Packet& pkt, uint64_t now,
               std::vector<OutMsg>& out);
  void flush_matching(uint64_t now, std::vector<OutMsg>& out);
  void flush_flow(const FlowKey& flow, uint64_t now, std::vector<OutMsg>& out);

  SwitchId id_;
  DomainId domain_;
  SymmetricKey k_alpha_;
  std::map<uint64_t, SymmetricKey> beta_keys_;  // epoch -> key (current + grace)
  uint64_t epoch_;
  Fib fib_;
  std::vector<CtId> local_cts_;
  std::vector<SwitchId> peers_;

  struct FlowBuffer {
    std::deque<Packet> packets;
    uint64_t first_miss_tick = 0;
    bool packet_in_sent = false;
  };
  std::map<FlowKey, FlowBuffer> buffers_;
};

}  // namespace trusdn
