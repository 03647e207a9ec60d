#include "trusdn/endpoints.hpp"

#include <sodium.h>

namespace trusdn {

namespace {

Bytes flow_bytes(const FlowKey& flow) {
  ByteWriter w;
  flow.write(w);
  return w.take();
}

Bytes record_aad(const FlowKey& canonical, uint8_t direction, uint64_t seq) {
  ByteWriter w;
  canonical.write(w);
  w.u8(direction);
  w.u64(seq);
  return w.take();
}

Bytes handshake_transcript(const FlowKey& canonical,
                           const std::array<uint8_t, 32>& client_nonce,
                           const std::array<uint8_t, 32>& server_nonce) {
  ByteWriter w;
  canonical.write(w);
  w.raw(client_nonce);
  w.raw(server_nonce);
  return w.take();
}

MacTag finished_server(const SymmetricKey& session_key, const Bytes& transcript) {
  ByteWriter w;
  w.raw(transcript);
  w.str("server-finished");
  return mac_tag(session_key, w.bytes());
}

MacTag finished_client(const SymmetricKey& session_key, const Bytes& transcript,
                       const MacTag& fin_s) {
  ByteWriter w;
  w.raw(transcript);
  w.raw(fin_s.bytes);
  w.str("client-finished");
  return mac_tag(session_key, w.bytes());
}

}  // namespace

SymmetricKey derive_session_key(const SymmetricKey& psk,
                                const std::array<uint8_t, 32>& client_nonce,
                                const std::array<uint8_t, 32>& server_nonce,
                                const FlowKey& flow) {
  ByteWriter w;
  w.str("trusdn-session-kdf");
  w.raw(client_nonce);
  w.raw(server_nonce);
  flow.canonical().write(w);
  Digest32 out = hash32({std::span<const uint8_t>(psk.bytes()),
                         std::span<const uint8_t>(w.bytes())});
  return SymmetricKey(KeyRole::Derived, out);
}

ComputeTask::ComputeTask(CtId id, EnclaveId enclave, SwitchId attached, KeyPair ck,
                         SymmetricKey nc_channel_key, PublicKey nc_pk, uint64_t seed)
    : id_(id),
      enclave_(enclave),
      attached_(attached),
      ck_(std::move(ck)),
      nc_channel_key_(std::move(nc_channel_key)),
      nc_pk_(nc_pk),
      rng_(seed) {}

void ComputeTask::send_packet(const FlowKey& flow, Bytes payload, std::vector<OutMsg>& out) {
  Packet pkt;
  pkt.flow = flow;
  pkt.payload = std::move(payload);
  pkt.seq = next_send_seq_[flow]++;
  out.push_back({Segment::Gamma, NodeId::of_switch(attached_),
                 frame_encode(MsgType::GammaPacket, pkt.serialize())});
}

FlowKey ComputeTask::open_flow(CtId dst, uint16_t src_port, uint16_t dst_port,
                               std::vector<OutMsg>& out) {
  FlowKey flow{id_, dst, src_port, dst_port, 6};
  FlowKey canonical = flow.canonical();
  SessionState& session = sessions[canonical];
  session.flow = canonical;
  session.is_client = true;
  session.client_nonce = rng_.block32();

  ByteWriter w;
  if (mode == HandshakeMode::Psk) {
    w.u8(static_cast<uint8_t>(WireMsg::HelloClient));
    w.raw(session.client_nonce);
  } else {
    PkEphemeral& eph = pk_ephemerals_[canonical];
    rng_.fill(eph.sk);
    crypto_scalarmult_base(eph.pk.data(), eph.sk.data());
    session.handshake_pk_ops += 1;  // ephemeral keypair generation

    ByteWriter signed_part;
    signed_part.raw(flow_bytes(canonical));
    signed_part.raw(eph.pk);
    signed_part.raw(session.client_nonce);
    Signature sig = sign(ck_, signed_part.bytes());
    session.handshake_pk_ops += 1;  // signature

    w.u8(static_cast<uint8_t>(WireMsg::PkHelloClient));
    w.raw(eph.pk);
    w.raw(session.client_nonce);
    w.blob(sig.bytes);
  }
  session.handshake_messages += 1;
  send_packet(flow, w.take(), out);
  counters["flows_opened"]++;
  return flow;
}

void ComputeTask::handle_grant_wire(std::span<const uint8_t> payload, uint64_t now,
                                    std::vector<OutMsg>& out) {
  try {
    ByteReader r(payload);
    PskGrant grant = PskGrant::deserialize(r);
    receive_psk_grant(grant, now, out);
  } catch (const DecodeError&) {
    counters["bad_grant_encoding"]++;
  }
}

std::optional<SymmetricKey> ComputeTask::receive_psk_grant(const PskGrant& grant, uint64_t now,
                                                           std::vector<OutMsg>& out) {
  FlowKey canonical = grant.flow.canonical();
  if (auto it = psk_store_.find(canonical); it != psk_store_.end()) {
    counters["grant_replayed"]++;
    return it->second;  // idempotent
  }
  if (!verify(nc_pk_, grant.signed_body(), grant.nc_signature)) {
    counters["bad_grant_signature"]++;
    return std::nullopt;
  }
  const Bytes& wrapped = grant.recipient_i == id_ ? grant.wrapped_i : grant.wrapped_j;
  if (grant.recipient_i != id_ && grant.recipient_j != id_) {
    counters["grant_wrong_recipient"]++;
    return std::nullopt;
  }
  auto key_bytes = hybrid_unwrap(ck_, wrapped);
  if (!key_bytes || key_bytes->size() != 32) {
    counters["grant_decrypt_failure"]++;
    return std::nullopt;
  }
  std::array<uint8_t, 32> raw{};
  std::copy(key_bytes->begin(), key_bytes->end(), raw.begin());
  auto [it, inserted] = psk_store_.emplace(canonical, SymmetricKey(KeyRole::FlowPsk, raw));
  counters["grants_stored"]++;

  // a responder hello may have been waiting for this key
  if (auto pending = pending_hellos_.find(canonical); pending != pending_hellos_.end()) {
    Packet hello = std::move(pending->second.packet);
    pending_hellos_.erase(pending);
    start_responder(hello, now, out);
  }
  return it->second;
}

void ComputeTask::start_responder(const Packet& hello, uint64_t now, std::vector<OutMsg>& out) {
  FlowKey canonical = hello.flow.canonical();
  auto psk = psk_store_.find(canonical);
  if (psk == psk_store_.end()) return;

  ByteReader r(hello.payload);
  r.u8();  // type, already checked
  auto client_nonce = r.arr<32>();

  SessionState& session = sessions[canonical];
  session.flow = canonical;
  session.is_client = false;
  session.client_nonce = client_nonce;
  session.server_nonce = rng_.block32();
  session.session_key =
      derive_session_key(psk->second, session.client_nonce, session.server_nonce, canonical);
  session.handshake_messages += 1;  // the hello just consumed

  Bytes transcript = handshake_transcript(canonical, session.client_nonce, session.server_nonce);
  MacTag fin_s = finished_server(*session.session_key, transcript);

  ByteWriter w;
  w.u8(static_cast<uint8_t>(WireMsg::HelloServer));
  w.raw(session.server_nonce);
  w.raw(fin_s.bytes);
  session.handshake_messages += 1;
  send_packet(hello.flow.reversed(), w.take(), out);
}

void ComputeTask::handle_gamma(std::span<const uint8_t> payload, uint64_t now,
                               std::vector<OutMsg>& out) {
  try {
    ByteReader pr(payload);
    Packet pkt = Packet::deserialize(pr);
    handle_packet(pkt, now, out);
  } catch (const DecodeError&) {
    counters["bad_gamma_packet"]++;
  }
}

void ComputeTask::handle_packet(const Packet& pkt, uint64_t now, std::vector<OutMsg>& out) {
  expire_pending(now);
  FlowKey canonical = pkt.flow.canonical();
  ByteReader r(pkt.payload);
  WireMsg type;
  try {
    type = static_cast<WireMsg>(r.u8());
  } catch (const DecodeError&) {
    counters["bad_gamma_packet"]++;
    return;
  }

  try {
    switch (type) {
      case WireMsg::HelloClient: {
        if (psk_store_.count(canonical)) {
          start_responder(pkt, now, out);
        } else {
          pending_hellos_[canonical] = {pkt, now};  // bounded wait for the grant
        }
        break;
      }
      case WireMsg::HelloServer: {
        auto session = sessions.find(canonical);
        auto psk = psk_store_.find(canonical);
        if (session == sessions.end() || !session->second.is_client ||
            psk == psk_store_.end()) {
          counters["unexpected_handshake"]++;
          break;
        }
        SessionState& s = session->second;
        s.server_nonce = r.arr<32>();
        MacTag fin_s;
        fin_s.bytes = r.arr<32>();
        s.session_key = derive_session_key(psk->second, s.client_nonce, s.server_nonce,
                                           canonical);
        Bytes transcript = handshake_transcript(canonical, s.client_nonce, s.server_nonce);
        MacTag expected = finished_server(*s.session_key, transcript);
        if (!ct_equal(expected.bytes, fin_s.bytes)) {
          counters["finished_mismatch"]++;
          sessions.erase(session);
          break;
        }
        s.handshake_messages += 1;  // hello_s consumed
        MacTag fin_c = finished_client(*s.session_key, transcript, fin_s);
        ByteWriter w;
        w.u8(static_cast<uint8_t>(WireMsg::FinishedClient));
        w.raw(fin_c.bytes);
        s.handshake_messages += 1;
        s.established = true;
        s.established_at = now;
        send_packet(pkt.flow.reversed(), w.take(), out);
        counters["sessions_established"]++;
        break;
      }
      case WireMsg::FinishedClient: {
        auto session = sessions.find(canonical);
        if (session == sessions.end() || session->second.is_client ||
            !session->second.session_key) {
          counters["unexpected_handshake"]++;
          break;
        }
        SessionState& s = session->second;
        Bytes transcript = handshake_transcript(canonical, s.client_nonce, s.server_nonce);
        MacTag fin_s = finished_server(*s.session_key, transcript);
        MacTag expected = finished_client(*s.session_key, transcript, fin_s);
        MacTag got;
        got.bytes = r.arr<32>();
        if (!ct_equal(expected.bytes, got.bytes)) {
          counters["finished_mismatch"]++;
          sessions.erase(session);
          break;
        }
        s.handshake_messages += 1;
        s.established = true;
        s.established_at = now;
        counters["sessions_established"]++;
        break;
      }
      case WireMsg::Record: {
        auto session = sessions.find(canonical);
        if (session == sessions.end() || !session->second.established) {
          counters["record_not_established"]++;
          break;
        }
        SessionState& s = session->second;
        uint64_t seq = r.u64();
        Ciphertext body = Ciphertext::deserialize(r);
        uint8_t direction = s.is_client ? 1 : 0;  // inbound direction
        if (seq != s.recv_seq) {
          counters["record_replay_rejected"]++;
          break;
        }
        auto plain = sym_open(*s.session_key, body, record_aad(canonical, direction, seq));
        if (!plain) {
          counters["record_auth_failure"]++;
          break;
        }
        s.recv_seq++;
        received_data.emplace_back(canonical, std::move(*plain));
        break;
      }
      case WireMsg::PkHelloClient:
      case WireMsg::PkHelloServer:
      case WireMsg::PkFinishedClient:
        handle_pk_packet(pkt, r, type, now, out);
        break;
    }
  } catch (const DecodeError&) {
    counters["bad_gamma_packet"]++;
  }
}

void ComputeTask::handle_pk_packet(const Packet& pkt, ByteReader& r, WireMsg type,
                                   uint64_t now, std::vector<OutMsg>& out) {
  FlowKey canonical = pkt.flow.canonical();
  switch (type) {
    case WireMsg::PkHelloClient: {
      auto peer_pk = peer_directory.find(pkt.flow.src);
      if (peer_pk == peer_directory.end()) {
        counters["unknown_peer_pk"]++;
        return;
      }
      auto client_eph = r.arr<32>();
      auto client_nonce = r.arr<32>();
      Signature sig;
      sig.bytes = r.blob();

      SessionState& s = sessions[canonical];
      s.flow = canonical;
      s.is_client = false;
      s.client_nonce = client_nonce;
      s.handshake_messages += 1;

      ByteWriter signed_part;
      signed_part.raw(flow_bytes(canonical));
      signed_part.raw(client_eph);
      signed_part.raw(client_nonce);
      s.handshake_pk_ops += 1;  // verification
      if (!verify(peer_pk->second, signed_part.bytes(), sig)) {
        counters["pk_handshake_bad_signature"]++;
        sessions.erase(canonical);
        return;
      }

      PkEphemeral& eph = pk_ephemerals_[canonical];
      rng_.fill(eph.sk);
      crypto_scalarmult_base(eph.pk.data(), eph.sk.data());
      s.handshake_pk_ops += 1;  // keypair generation
      s.server_nonce = rng_.block32();

      std::array<uint8_t, 32> shared{};
      if (crypto_scalarmult(shared.data(), eph.sk.data(), client_eph.data()) != 0) {
        counters["pk_handshake_bad_signature"]++;
        return;
      }
      s.handshake_pk_ops += 1;  // shared-secret derivation

      ByteWriter kdf;
      kdf.str("trusdn-baseline-kdf");
      kdf.raw(shared);
      kdf.raw(s.client_nonce);
      kdf.raw(s.server_nonce);
      canonical.write(kdf);
      s.session_key = SymmetricKey(KeyRole::Derived, hash32(kdf.bytes()));

      ByteWriter server_signed;
      server_signed.raw(flow_bytes(canonical));
      server_signed.raw(client_eph);
      server_signed.raw(s.client_nonce);
      server_signed.raw(eph.pk);
      server_signed.raw(s.server_nonce);
      Signature server_sig = sign(ck_, server_signed.bytes());
      s.handshake_pk_ops += 1;  // signature

      Bytes transcript = handshake_transcript(canonical, s.client_nonce, s.server_nonce);
      MacTag fin_s = finished_server(*s.session_key, transcript);

      ByteWriter w;
      w.u8(static_cast<uint8_t>(WireMsg::PkHelloServer));
      w.raw(eph.pk);
      w.raw(s.server_nonce);
      w.blob(server_sig.bytes);
      w.raw(fin_s.bytes);
      s.handshake_messages += 1;
      send_packet(pkt.flow.reversed(), w.take(), out);
      break;
    }
    case WireMsg::PkHelloServer: {
      auto session = sessions.find(canonical);
      auto eph_it = pk_ephemerals_.find(canonical);
      auto peer_pk = peer_directory.find(pkt.flow.src);
      if (session == sessions.end() || eph_it == pk_ephemerals_.end() ||
          peer_pk == peer_directory.end()) {
        counters["unexpected_handshake"]++;
        return;
      }
      SessionState& s = session->second;
      auto server_eph = r.arr<32>();
      s.server_nonce = r.arr<32>();
      Signature sig;
      sig.bytes = r.blob();
      MacTag fin_s;
      fin_s.bytes = r.arr<32>();
      s.handshake_messages += 1;

      ByteWriter server_signed;
      server_signed.raw(flow_bytes(canonical));
      server_signed.raw(eph_it->second.pk);
      server_signed.raw(s.client_nonce);
      server_signed.raw(server_eph);
      server_signed.raw(s.server_nonce);
      s.handshake_pk_ops += 1;  // verification
      if (!verify(peer_pk->second, server_signed.bytes(), sig)) {
        counters["pk_handshake_bad_signature"]++;
        sessions.erase(session);
        return;
      }

      std::array<uint8_t, 32> shared{};
      if (crypto_scalarmult(shared.data(), eph_it->second.sk.data(), server_eph.data()) != 0) {
        counters["pk_handshake_bad_signature"]++;
        return;
      }
      s.handshake_pk_ops += 1;  // shared-secret derivation

      ByteWriter kdf;
      kdf.str("trusdn-baseline-kdf");
      kdf.raw(shared);
      kdf.raw(s.client_nonce);
      kdf.raw(s.server_nonce);
      canonical.write(kdf);
      s.session_key = SymmetricKey(KeyRole::Derived, hash32(kdf.bytes()));

      Bytes transcript = handshake_transcript(canonical, s.client_nonce, s.server_nonce);
      MacTag expected = finished_server(*s.session_key, transcript);
      if (!ct_equal(expected.bytes, fin_s.bytes)) {
        counters["finished_mismatch"]++;
        sessions.erase(session);
        return;
      }
      MacTag fin_c = finished_client(*s.session_key, transcript, fin_s);
      ByteWriter w;
      w.u8(static_cast<uint8_t>(WireMsg::PkFinishedClient));
      w.raw(fin_c.bytes);
      s.handshake_messages += 1;
      s.established = true;
      s.established_at = now;
      counters["sessions_established"]++;
      send_packet(pkt.flow.reversed(), w.take(), out);
      break;
    }
    case WireMsg::PkFinishedClient: {
      auto session = sessions.find(canonical);
      if (session == sessions.end() || !session->second.session_key) {
        counters["unexpected_handshake"]++;
        return;
      }
      SessionState& s = session->second;
      Bytes transcript = handshake_transcript(canonical, s.client_nonce, s.server_nonce);
      MacTag fin_s = finished_server(*s.session_key, transcript);
      MacTag expected = finished_client(*s.session_key, transcript, fin_s);
      MacTag got;
      got.bytes = r.arr<32>();
      if (!ct_equal(expected.bytes, got.bytes)) {
        counters["finished_mismatch"]++;
        sessions.erase(session);
        return;
      }
      s.handshake_messages += 1;
      s.established = true;
      s.established_at = now;
      counters["sessions_established"]++;
      break;
    }
    default:
      break;
  }
}

void ComputeTask::secure_send(const FlowKey& flow, std::span<const uint8_t> data,
                              std::vector<OutMsg>& out) {
  FlowKey canonical = flow.canonical();
  auto session = sessions.find(canonical);
  if (session == sessions.end() || !session->second.established) {
    counters["send_not_established"]++;
    throw Error("NotEstablished");
  }
  SessionState& s = session->second;
  uint8_t direction = s.is_client ? 0 : 1;  // outbound direction
  uint64_t seq = s.send_seq++;
  Ciphertext sealed = sym_seal(*s.session_key, data, record_aad(canonical, direction, seq));
  ByteWriter w;
  w.u8(static_cast<uint8_t>(WireMsg::Record));
  w.u64(seq);
  w.raw(sealed.serialize());

  // canonical may have swapped src/dst; recover this CT's outbound direction
  FlowKey out_dir = canonical;
  if (out_dir.src != id_) out_dir = out_dir.reversed();
  send_packet(out_dir, w.take(), out);
}

void ComputeTask::expire_pending(uint64_t now) {
  for (auto it = pending_hellos_.begin(); it != pending_hellos_.end();) {
    if (now - it->second.since > kGrantWait) {
      counters["handshake_timeout"]++;
      it = pending_hellos_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace trusdn
