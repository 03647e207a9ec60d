#include "trusdn/sim.hpp"

namespace trusdn {

Digest32 AdversaryTap::digest() const {
  ByteWriter w;
  for (const TranscriptEntry& e : transcript) {
    w.u64(e.tick);
    w.u8(static_cast<uint8_t>(e.seg));
    w.u8(static_cast<uint8_t>(e.src.kind));
    w.u32(e.src.index);
    w.u8(static_cast<uint8_t>(e.dst.kind));
    w.u32(e.dst.index);
    w.blob(e.wire);
    w.u8(e.dropped ? 1 : 0);
    w.u8(e.tampered ? 1 : 0);
  }
  return hash32(w.bytes());
}

Simulator::Simulator(Controller& nc, uint64_t seed) : nc_(nc), rng_(seed) {}

void Simulator::post(uint64_t base_tick, size_t index, NodeId src, const OutMsg& m) {
  TranscriptEntry entry{base_tick, m.seg, src, m.dst, m.wire};
  Bytes wire = m.wire;

  bool drop = false;
  for (auto& f : tap.filters) {
    if (f.remaining == 0 || f.seg != m.seg) continue;
    if (f.dst_kind && *f.dst_kind != m.dst.kind) continue;
    f.remaining--;
    if (f.kind == AdversaryTap::Filter::Kind::Drop) {
      drop = true;
    } else {
      wire[wire.size() / 2] ^= 0x01;
      entry.tampered = true;
    }
    break;
  }
  auto rate = tap.drop_rates.find(m.seg);
  if (!drop && rate != tap.drop_rates.end() && rate->second > 0.0)
    drop = rng_.unit_double() < rate->second;

  entry.dropped = drop;
  tap.transcript.push_back(entry);
  if (drop) {
    fabric_counters_["dropped_by_adversary"]++;
    return;
  }
  queue_.push({base_tick + 1 + index, next_seq_++, m.seg, src, m.dst, std::move(wire)});
}

void Simulator::submit(NodeId src, const std::vector<OutMsg>& msgs) {
  for (size_t j = 0; j < msgs.size(); ++j) post(now_, j, src, msgs[j]);
}

void Simulator::inject(Segment seg, NodeId dst, Bytes wire) {
  TranscriptEntry entry{now_, seg, dst, dst, wire};  // src unknown: attacker
  entry.tampered = true;
  tap.transcript.push_back(entry);
  queue_.push({now_ + 1, next_seq_++, seg, dst, dst, std::move(wire)});
  fabric_counters_["injected"]++;
}

void Simulator::replay(size_t transcript_index) {
  const TranscriptEntry& e = tap.transcript.at(transcript_index);
  queue_.push({now_ + 1, next_seq_++, e.seg, e.src, e.dst, e.wire});
  fabric_counters_["replayed"]++;
}

void Simulator::dispatch(const Event& ev) {
  auto frame = frame_decode(ev.wire);
  if (!frame) {
    fabric_counters_["malformed_wire"]++;
    return;
  }

  std::vector<OutMsg> out;
  try {
    switch (ev.dst.kind) {
      case NodeId::Kind::Controller: {
        if (frame->type != MsgType::PacketIn) {
          fabric_counters_["misrouted"]++;
          break;
        }
        ByteReader r(frame->payload);
        SwitchId from = r.u32();
        out = nc_.handle_packet_in(from, frame->payload);
        break;
      }
      case NodeId::Kind::Switch: {
        auto sw = nc_.switch_ctx(ev.dst.index);
        if (!sw) {
          fabric_counters_["no_such_node"]++;
          break;
        }
        switch (frame->type) {
          case MsgType::RuleInstall: sw->handle_rule_install(frame->payload, now_, out); break;
          case MsgType::PacketRelease: sw->handle_release(frame->payload, now_, out); break;
          case MsgType::Rotate: sw->handle_rotate(frame->payload); break;
          case MsgType::BetaFrameMsg: sw->accept_beta_wire(frame->payload, now_, out); break;
          case MsgType::GammaPacket: {
            ByteReader r(frame->payload);
            sw->ingress(Packet::deserialize(r), now_, out);
            break;
          }
          default: fabric_counters_["misrouted"]++; break;
        }
        break;
      }
      case NodeId::Kind::Ct: {
        auto ct = nc_.ct_ctx(ev.dst.index);
        if (!ct) {
          fabric_counters_["no_such_node"]++;
          break;
        }
        switch (frame->type) {
          case MsgType::PskGrantMsg: ct->handle_grant_wire(frame->payload, now_, out); break;
          case MsgType::GammaPacket: {
            // first-packet latency bookkeeping, then normal handling
            try {
              ByteReader r(frame->payload);
              Packet pkt = Packet::deserialize(r);
              first_packet_at_.try_emplace(pkt.flow.canonical(), now_);
            } catch (const DecodeError&) {
            }
            ct->handle_gamma(frame->payload, now_, out);
            break;
          }
          default: fabric_counters_["misrouted"]++; break;
        }
        break;
      }
    }
  } catch (const DecodeError&) {
    fabric_counters_["malformed_wire"]++;
  } catch (const Error&) {
    fabric_counters_["node_faults"]++;
  }

  for (size_t j = 0; j < out.size(); ++j) post(now_, j, ev.dst, out[j]);
}

bool Simulator::run_until_idle(uint64_t max_ticks) {
  uint64_t deadline = now_ + max_ticks;
  while (!queue_.empty()) {
    uint64_t tick = queue_.top().deliver_at;
    if (tick > deadline) return false;
    now_ = tick;
    while (!queue_.empty() && queue_.top().deliver_at == tick) {
      Event ev = queue_.top();
      queue_.pop();
      dispatch(ev);
    }
  }
  return true;
}

std::map<std::string, uint64_t> Simulator::metrics() {
  std::map<std::string, uint64_t> m = fabric_counters_;
  for (const auto& [k, v] : nc_.counters) m["nc." + k] += v;
  for (const auto& [id, rec] : nc_.view().switches) {
    auto sw = nc_.switch_ctx(id);
    if (!sw) continue;
    for (const auto& [k, v] : sw->counters) m["sw" + std::to_string(id) + "." + k] += v;
  }
  for (const auto& [id, rec] : nc_.view().compute_tasks) {
    auto ct = nc_.ct_ctx(id);
    if (!ct) continue;
    for (const auto& [k, v] : ct->counters) m["ct" + std::to_string(id) + "." + k] += v;
  }
  return m;
}

}  // namespace trusdn
