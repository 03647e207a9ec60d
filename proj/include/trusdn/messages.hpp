#pragma once

#include <compare>
#include <optional>
#include <string>

#include "trusdn/crypto.hpp"

namespace trusdn {

using SwitchId = uint32_t;
using CtId = uint32_t;
using DomainId = uint32_t;

enum class Segment : uint8_t { Alpha, Beta, Gamma, Physical };
const char* segment_name(Segment s);

struct NodeId {
  enum class Kind : uint8_t { Controller, Switch, Ct };
  Kind kind = Kind::Controller;
  uint32_t index = 0;

  static NodeId controller() { return {Kind::Controller, 0}; }
  static NodeId of_switch(SwitchId id) { return {Kind::Switch, id}; }
  static NodeId of_ct(CtId id) { return {Kind::Ct, id}; }

  auto operator<=>(const NodeId&) const = default;
  std::string str() const;
};

// OpenFlow-style 5-tuple identifying a flow between two compute tasks.
struct FlowKey {
  CtId src = 0;
  CtId dst = 0;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint8_t proto = 6;

  auto operator<=>(const FlowKey&) const = default;

  FlowKey reversed() const { return {dst, src, dst_port, src_port, proto}; }
  // Direction-independent form for bidirectional lookup.
  FlowKey canonical() const;

  void write(ByteWriter& w) const;
  static FlowKey read(ByteReader& r);
};

struct Packet {
  static constexpr size_t kMaxPayload = 9 * 1024;  // jumbo-frame bound

  FlowKey flow;
  Bytes payload;
  uint64_t seq = 0;

  Bytes serialize() const;
  static Packet deserialize(ByteReader& r);
};

enum class ActionKind : uint8_t { ForwardLocal, ForwardTunnel, Drop, SendToController };

struct FlowRule {
  FlowKey match;  // exact match
  ActionKind action = ActionKind::Drop;
  uint32_t arg = 0;  // local port for ForwardLocal, peer switch for ForwardTunnel
  int32_t priority = 0;
  uint64_t id = 0;

  void write(ByteWriter& w) const;
  static FlowRule read(ByteReader& r);
};

// Flow PSK delivery: the key wrapped for each endpoint plus the
// controller's signature over flow and wrapped material.
struct PskGrant {
  FlowKey flow;
  CtId recipient_i = 0;
  CtId recipient_j = 0;
  Bytes wrapped_i;
  Bytes wrapped_j;
  Signature nc_signature;

  Bytes signed_body() const;
  Bytes serialize() const;
  static PskGrant deserialize(ByteReader& r);
};

// Canonical control-message framing: 1-byte type tag, 4-byte length, payload.
enum class MsgType : uint8_t {
  PacketIn = 1,
  RuleInstall = 2,
  PskGrantMsg = 3,
  Rotate = 4,
  BetaFrameMsg = 5,
  GammaPacket = 6,
  PacketRelease = 7,
};

struct Frame {
  MsgType type;
  Bytes payload;
};

// A message a node hands to the simulator for delivery.
struct OutMsg {
  Segment seg = Segment::Alpha;
  NodeId dst;
  Bytes wire;
};

Bytes frame_encode(MsgType type, std::span<const uint8_t> payload);
std::optional<Frame> frame_decode(std::span<const uint8_t> wire);

// Associated data binding a sealed control message to its type and the
// switch it addresses.
Bytes control_aad(MsgType type, SwitchId sw);

}  // namespace trusdn
