#pragma once

#include <map>
#include <optional>

#include "trusdn/enclave.hpp"
#include "trusdn/messages.hpp"

namespace trusdn {

enum class HandshakeMode : uint8_t { Psk, BaselinePk };

// Handshake / record payload carried inside Packet::payload.
enum class WireMsg : uint8_t {
  HelloClient = 1,
  HelloServer = 2,     // server nonce + finished_s
  FinishedClient = 3,
  Record = 4,
  PkHelloClient = 5,   // baseline: ephemeral pk + nonce + signature
  PkHelloServer = 6,
  PkFinishedClient = 7,
};

struct SessionState {
  FlowKey flow;
  std::array<uint8_t, 32> client_nonce{};
  std::array<uint8_t, 32> server_nonce{};
  std::optional<SymmetricKey> session_key;  // Derived
  bool established = false;
  bool is_client = false;
  uint32_t handshake_pk_ops = 0;
  uint32_t handshake_messages = 0;
  uint64_t send_seq = 0;
  uint64_t recv_seq = 0;
  uint64_t established_at = 0;
};

// session_key = keyed-hash KDF over (psk, client_nonce || server_nonce ||
// canonical flow key).
SymmetricKey derive_session_key(const SymmetricKey& psk,
                                const std::array<uint8_t, 32>& client_nonce,
                                const std::array<uint8_t, 32>& server_nonce,
                                const FlowKey& flow);

// A compute task: terminates flows, receives PSK grants from the NC and
// runs the PSK (or baseline public-key) handshake over the first-flow
// exchange. Lives in the CT enclave's sealed state.
class ComputeTask {
 public:
  static constexpr uint64_t kGrantWait = 32;  // ticks a responder waits for its PSK

  ComputeTask(CtId id, EnclaveId enclave, SwitchId attached, KeyPair ck,
              SymmetricKey nc_channel_key, PublicKey nc_pk, uint64_t seed);

  CtId id() const { return id_; }
  SwitchId attached_switch() const { return attached_; }
  const PublicKey& ck_pk() const { return ck_.public_key(); }

  HandshakeMode mode = HandshakeMode::Psk;
  // Peer CK public keys, distributed out of band for the baseline benchmark.
  std::map<CtId, PublicKey> peer_directory;

  // Sends the first packet of a new flow (the client hello) toward dst.
  FlowKey open_flow(CtId dst, uint16_t src_port, uint16_t dst_port,
                    std::vector<OutMsg>& out);

  // NC -> CT control message carrying a PskGrant.
  void handle_grant_wire(std::span<const uint8_t> payload, uint64_t now,
                         std::vector<OutMsg>& out);
  // Returns the stored key on success.
  std::optional<SymmetricKey> receive_psk_grant(const PskGrant& grant, uint64_t now,
                                                std::vector<OutMsg>& out);

  // Switch -> CT data path.
  void handle_gamma(std::span<const uint8_t> payload, uint64_t now,
                    std::vector<OutMsg>& out);

  void secure_send(const FlowKey& flow, std::span<const uint8_t> data,
                   std::vector<OutMsg>& out);

  // Drop responder hellos whose grant never arrived within kGrantWait.
  void expire_pending(uint64_t now);

  const std::map<FlowKey, SymmetricKey>& psk_store() const { return psk_store_; }
  std::map<FlowKey, SessionState> sessions;
  std::vector<std::pair<FlowKey, Bytes>> received_data;
  std::map<std::string, uint64_t> counters;

 private:
  void send_packet(const FlowKey& flow, Bytes payload, std::vector<OutMsg>& out);
  void handle_packet(const Packet& pkt, uint64_t now, std::vector<OutMsg>& out);
  void start_responder(const Packet& hello, uint64_t now, std::vector<OutMsg>& out);
  void handle_pk_packet(const Packet& pkt, ByteReader& r, WireMsg type, uint64_t now,
                        std::vector<OutMsg>& out);

  CtId id_;
  EnclaveId enclave_;
  SwitchId attached_;
  KeyPair ck_;
  SymmetricKey nc_channel_key_;  // SessionAlpha-role key for the NC<->CT channel
  PublicKey nc_pk_{};
  Rng rng_;
  std::map<FlowKey, SymmetricKey> psk_store_;
  std::map<FlowKey, uint64_t> next_send_seq_;

  struct PendingHello {
    Packet packet;
    uint64_t since = 0;
  };
  std::map<FlowKey, PendingHello> pending_hellos_;

  struct PkEphemeral {
    std::array<uint8_t, 32> sk{};
    std::array<uint8_t, 32> pk{};
  };
  std::map<FlowKey, PkEphemeral> pk_ephemerals_;
};

}  // namespace trusdn
