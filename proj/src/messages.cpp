#include "trusdn/messages.hpp"

namespace trusdn {

const char* segment_name(Segment s) {
  switch (s) {
    case Segment::Alpha: return "alpha";
    case Segment::Beta: return "beta";
    case Segment::Gamma: return "gamma";
    case Segment::Physical: return "physical";
  }
  return "?";
}

std::string NodeId::str() const {
  switch (kind) {
    case Kind::Controller: return "nc";
    case Kind::Switch: return "sw" + std::to_string(index);
    case Kind::Ct: return "ct" + std::to_string(index);
  }
  return "?";
}

FlowKey FlowKey::canonical() const {
  FlowKey rev = reversed();
  return *this <= rev ? *this : rev;
}

void FlowKey::write(ByteWriter& w) const {
  w.u32(src);
  w.u32(dst);
  w.u16(src_port);
  w.u16(dst_port);
  w.u8(proto);
}

FlowKey FlowKey::read(ByteReader& r) {
  FlowKey k;
  k.src = r.u32();
  k.dst = r.u32();
  k.src_port = r.u16();
  k.dst_port = r.u16();
  k.proto = r.u8();
  return k;
}

Bytes Packet::serialize() const {
  ByteWriter w;
  flow.write(w);
  w.u64(seq);
  w.blob(payload);
  return w.take();
}

Packet Packet::deserialize(ByteReader& r) {
  Packet p;
  p.flow = FlowKey::read(r);
  p.seq = r.u64();
  p.payload = r.blob();
  if (p.payload.size() > kMaxPayload) throw DecodeError("oversized packet payload");
  return p;
}

void FlowRule::write(ByteWriter& w) const {
  match.write(w);
  w.u8(static_cast<uint8_t>(action));
  w.u32(arg);
  w.u32(static_cast<uint32_t>(priority));
  w.u64(id);
}

FlowRule FlowRule::read(ByteReader& r) {
  FlowRule rule;
  rule.match = FlowKey::read(r);
  rule.action = static_cast<ActionKind>(r.u8());
  rule.arg = r.u32();
  rule.priority = static_cast<int32_t>(r.u32());
  rule.id = r.u64();
  return rule;
}

Bytes PskGrant::signed_body() const {
  ByteWriter w;
  flow.write(w);
  w.u32(recipient_i);
  w.u32(recipient_j);
  w.blob(wrapped_i);
  w.blob(wrapped_j);
  return w.take();
}

Bytes PskGrant::serialize() const {
  ByteWriter w;
  w.raw(signed_body());
  w.blob(nc_signature.bytes);
  return w.take();
}

PskGrant PskGrant::deserialize(ByteReader& r) {
  PskGrant g;
  g.flow = FlowKey::read(r);
  g.recipient_i = r.u32();
  g.recipient_j = r.u32();
  g.wrapped_i = r.blob();
  g.wrapped_j = r.blob();
  g.nc_signature.bytes = r.blob();
  return g;
}

Bytes frame_encode(MsgType type, std::span<const uint8_t> payload) {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(type));
  w.blob(payload);
  return w.take();
}

std::optional<Frame> frame_decode(std::span<const uint8_t> wire) {
  try {
    ByteReader r(wire);
    Frame f;
    uint8_t tag = r.u8();
    if (tag < 1 || tag > 7) return std::nullopt;
    f.type = static_cast<MsgType>(tag);
    f.payload = r.blob();
    if (!r.done()) return std::nullopt;
    return f;
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

Bytes control_aad(MsgType type, SwitchId sw) {
  ByteWriter w;
  w.str("trusdn-control");
  w.u8(static_cast<uint8_t>(type));
  w.u32(sw);
  return w.take();
}

}  // namespace trusdn
