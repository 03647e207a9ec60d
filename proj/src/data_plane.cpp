#include "trusdn/data_plane.hpp"

#include <algorithm>

namespace trusdn {

Bytes BetaFrame::aad() const {
  ByteWriter w;
  w.u32(src_switch);
  w.u32(dst_switch);
  w.u64(epoch);
  return w.take();
}

Bytes BetaFrame::serialize() const {
  ByteWriter w;
  w.u32(src_switch);
  w.u32(dst_switch);
  w.u64(epoch);
  w.raw(body.serialize());
  return w.take();
}

BetaFrame BetaFrame::deserialize(ByteReader& r) {
  BetaFrame f;
  f.src_switch = r.u32();
  f.dst_switch = r.u32();
  f.epoch = r.u64();
  f.body = Ciphertext::deserialize(r);
  return f;
}

void Fib::upsert(const FlowRule& rule) {
  for (Entry& e : entries_) {
    if (e.rule.id == rule.id) {
      e.rule = rule;
      e.installed_seq = next_seq_++;
      return;
    }
  }
  entries_.push_back({rule, next_seq_++});
}

const FlowRule* Fib::lookup(const FlowKey& key) const {
  const Entry* best = nullptr;
  for (const Entry& e : entries_) {
    if (e.rule.match != key) continue;
    if (!best || e.rule.priority > best->rule.priority ||
        (e.rule.priority == best->rule.priority && e.installed_seq > best->installed_seq)) {
      best = &e;
    }
  }
  return best ? &best->rule : nullptr;
}

size_t Fib::size() const { return entries_.size(); }

void Fib::clear() { entries_.clear(); }

std::vector<FlowRule> Fib::rules() const {
  std::vector<FlowRule> out;
  out.reserve(entries_.size());
  for (const Entry& e : entries_) out.push_back(e.rule);
  return out;
}

SwitchContext::SwitchContext(SwitchId id, DomainId domain, SymmetricKey k_alpha,
                             SymmetricKey k_beta, uint64_t epoch)
    : id_(id), domain_(domain), k_alpha_(std::move(k_alpha)), epoch_(epoch) {
  beta_keys_.emplace(epoch, std::move(k_beta));
}

bool SwitchContext::has_local_ct(CtId ct) const {
  return std::find(local_cts_.begin(), local_cts_.end(), ct) != local_cts_.end();
}

bool SwitchContext::has_peer(SwitchId peer) const {
  return std::find(peers_.begin(), peers_.end(), peer) != peers_.end();
}

void SwitchContext::ingress(const Packet& pkt, uint64_t now, std::vector<OutMsg>& out) {
  expire_buffers(now);
  counters["rx_packets"]++;
  const FlowRule* rule = fib_.lookup(pkt.flow);
  if (rule && rule->action != ActionKind::SendToController) {
    execute(*rule, pkt, now, out);
    return;
  }

  // FIB miss: buffer and notify the controller once per waiting flow.
  FlowBuffer& buf = buffers_[pkt.flow];
  if (buf.packets.size() >= kBufferCapacity) {
    counters["buffer_overflow"]++;
    throw BufferOverflow();
  }
  if (buf.packets.empty()) buf.first_miss_tick = now;
  buf.packets.push_back(pkt);
  if (!buf.packet_in_sent) {
    buf.packet_in_sent = true;
    counters["packet_in"]++;
    Ciphertext sealed =
        sym_seal(k_alpha_, pkt.serialize(), control_aad(MsgType::PacketIn, id_));
    ByteWriter w;
    w.u32(id_);
    w.raw(sealed.serialize());
    out.push_back({Segment::Alpha, NodeId::controller(),
                   frame_encode(MsgType::PacketIn, w.bytes())});
  }
}

void SwitchContext::execute(const FlowRule& rule, const Packet& pkt, uint64_t now,
                            std::vector<OutMsg>& out) {
  switch (rule.action) {
    case ActionKind::ForwardLocal:
      counters["forward_local"]++;
      out.push_back({Segment::Gamma, NodeId::of_ct(rule.arg),
                     frame_encode(MsgType::GammaPacket, pkt.serialize())});
      break;
    case ActionKind::ForwardTunnel: {
      BetaFrame frame = emit_beta(pkt, rule.arg);
      counters["forward_tunnel"]++;
      out.push_back({Segment::Beta, NodeId::of_switch(rule.arg),
                     frame_encode(MsgType::BetaFrameMsg, frame.serialize())});
      break;
    }
    case ActionKind::Drop:
      counters["dropped"]++;
      break;
    case ActionKind::SendToController:
      break;  // handled by the miss path
  }
}

void SwitchContext::handle_rule_install(std::span<const uint8_t> payload, uint64_t now,
                                        std::vector<OutMsg>& out) {
  auto sealed = Ciphertext::parse(payload);
  std::optional<Bytes> plain;
  if (sealed) plain = sym_open(k_alpha_, *sealed, control_aad(MsgType::RuleInstall, id_));
  if (!plain) {
    counters["alarm_forged_rule"]++;
    return;
  }
  try {
    ByteReader r(*plain);
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) fib_.upsert(FlowRule::read(r));
    counters["rule_installs"]++;
  } catch (const DecodeError&) {
    counters["alarm_forged_rule"]++;
    return;
  }
  flush_matching(now, out);
}

void SwitchContext::handle_release(std::span<const uint8_t> payload, uint64_t now,
                                   std::vector<OutMsg>& out) {
  auto sealed = Ciphertext::parse(payload);
  std::optional<Bytes> plain;
  if (sealed) plain = sym_open(k_alpha_, *sealed, control_aad(MsgType::PacketRelease, id_));
  if (!plain) {
    counters["alarm_forged_release"]++;
    return;
  }
  try {
    ByteReader r(*plain);
    FlowKey flow = FlowKey::read(r);
    flush_flow(flow, now, out);
  } catch (const DecodeError&) {
    counters["alarm_forged_release"]++;
  }
}

void SwitchContext::handle_rotate(std::span<const uint8_t> payload) {
  auto sealed = Ciphertext::parse(payload);
  std::optional<Bytes> plain;
  if (sealed) plain = sym_open(k_alpha_, *sealed, control_aad(MsgType::Rotate, id_));
  if (!plain) {
    counters["alarm_forged_rotate"]++;
    return;
  }
  try {
    ByteReader r(*plain);
    uint64_t epoch = r.u64();
    auto key_bytes = r.arr<32>();
    if (epoch <= epoch_) return;  // stale or replayed rotation
    beta_keys_.emplace(epoch, SymmetricKey(KeyRole::DomainBeta, key_bytes));
    epoch_ = epoch;
    // keep one grace epoch, discard older keys
    for (auto it = beta_keys_.begin(); it != beta_keys_.end();) {
      if (it->first + 1 < epoch_)
        it = beta_keys_.erase(it);
      else
        ++it;
    }
    counters["rotations"]++;
  } catch (const DecodeError&) {
    counters["alarm_forged_rotate"]++;
  }
}

BetaFrame SwitchContext::emit_beta(const Packet& pkt, SwitchId peer) {
  if (!has_peer(peer)) throw UnknownPeer();
  BetaFrame frame;
  frame.src_switch = id_;
  frame.dst_switch = peer;
  frame.epoch = epoch_;
  frame.body = sym_seal(beta_keys_.at(epoch_), pkt.serialize(), frame.aad());
  return frame;
}

void SwitchContext::accept_beta(const BetaFrame& frame, uint64_t now,
                                std::vector<OutMsg>& out) {
  auto it = beta_keys_.find(frame.epoch);
  bool epoch_ok = frame.epoch == epoch_ || frame.epoch + 1 == epoch_;
  std::optional<Bytes> plain;
  if (epoch_ok && it != beta_keys_.end())
    plain = sym_open(it->second, frame.body, frame.aad());
  if (!plain) {
    counters["alarm_beta"]++;
    return;
  }
  try {
    ByteReader r(*plain);
    Packet pkt = Packet::deserialize(r);
    ingress(pkt, now, out);
  } catch (const DecodeError&) {
    counters["alarm_beta"]++;
  }
}

void SwitchContext::accept_beta_wire(std::span<const uint8_t> payload, uint64_t now,
                                     std::vector<OutMsg>& out) {
  try {
    ByteReader r(payload);
    BetaFrame frame = BetaFrame::deserialize(r);
    accept_beta(frame, now, out);
  } catch (const DecodeError&) {
    counters["alarm_beta"]++;
  }
}

void SwitchContext::expire_buffers(uint64_t now) {
  for (auto it = buffers_.begin(); it != buffers_.end();) {
    if (now - it->second.first_miss_tick > kMissTimeout) {
      counters["miss_timeout_drops"] += it->second.packets.size();
      it = buffers_.erase(it);
    } else {
      ++it;
    }
  }
}

void SwitchContext::flush_matching(uint64_t now, std::vector<OutMsg>& out) {
  std::vector<FlowKey> ready;
  for (const auto& [flow, buf] : buffers_) {
    const FlowRule* rule = fib_.lookup(flow);
    if (rule && rule->action != ActionKind::SendToController) ready.push_back(flow);
  }
  for (const FlowKey& flow : ready) flush_flow(flow, now, out);
}

void SwitchContext::flush_flow(const FlowKey& flow, uint64_t now, std::vector<OutMsg>& out) {
  auto it = buffers_.find(flow);
  if (it == buffers_.end()) return;
  const FlowRule* rule = fib_.lookup(flow);
  if (!rule || rule->action == ActionKind::SendToController) return;

  std::vector<Packet> packets(it->second.packets.begin(), it->second.packets.end());
  buffers_.erase(it);
  std::stable_sort(packets.begin(), packets.end(),
                   [](const Packet& a, const Packet& b) { return a.seq < b.seq; });
  for (const Packet& pkt : packets) execute(*rule, pkt, now, out);
}

}  // namespace trusdn
