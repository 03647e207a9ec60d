#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "trusdn/bytes.hpp"
#include "trusdn/errors.hpp"
#include "trusdn/rng.hpp"

namespace trusdn {

// Role tags for the key hierarchy: per-switch session keys (alpha segment),
// per-domain tunnel keys (beta segment), the ephemeral enrollment pair
// (K'/K''), flow PSKs (SK_gamma), local-attestation report keys and
// KDF-derived session keys.
enum class KeyRole : uint8_t {
  SessionAlpha,
  DomainBeta,
  EphemeralEnc,
  EphemeralMac,
  FlowPsk,
  ReportKey,
  Derived,
};

const char* key_role_name(KeyRole role);

class SymmetricKey {
 public:
  static constexpr size_t kLen = 32;

  SymmetricKey(KeyRole role, const std::array<uint8_t, kLen>& bytes);

  KeyRole role() const { return role_; }
  std::span<const uint8_t, kLen> bytes() const { return bytes_; }

  // Equal iff same role and same bytes (constant-time byte comparison).
  bool operator==(const SymmetricKey& other) const;

  uint64_t seal_counter() const { return seal_counter_; }
  // Test hook for exercising counter exhaustion.
  void set_seal_counter_for_test(uint64_t v) { seal_counter_ = v; }

 private:
  friend struct SealAccess;
  KeyRole role_;
  std::array<uint8_t, kLen> bytes_;
  // Nonce state: a process-unique 4-byte context id plus a per-key counter.
  // Copies of a key get fresh context ids, so independent holders of the
  // same key bytes never collide on nonces.
  uint32_t context_id_;
  uint64_t seal_counter_ = 0;

  static uint32_t next_context_id();

 public:
  // Rewinds the context-id counter. Only for callers that need reproducible
  // wire bytes across whole runs (scenario replay, benchmarks); must be
  // called before any key of the run is constructed.
  static void reset_context_ids();

  SymmetricKey(const SymmetricKey& other);
  SymmetricKey& operator=(const SymmetricKey& other);
  SymmetricKey(SymmetricKey&&) = default;
  SymmetricKey& operator=(SymmetricKey&&) = default;
};

struct Ciphertext {
  std::array<uint8_t, 12> nonce{};
  Bytes body;                // plaintext length + 16-byte tag
  Digest32 aad_digest{};

  Bytes serialize() const;
  static Ciphertext deserialize(ByteReader& r);
  static std::optional<Ciphertext> parse(std::span<const uint8_t> data);
};

struct MacTag {
  std::array<uint8_t, 32> bytes{};
};

struct Signature {
  Bytes bytes;
};

enum class KeyOwner : uint8_t {
  Enclave,       // EK
  ComputeTask,   // CK
  QuotingEnclave,
  Verifier,
  Authority,
};

using PublicKey = std::array<uint8_t, 32>;  // Ed25519 public key

// Ed25519 keypair; the same secret also backs hybrid encryption via the
// birational map to Curve25519.
class KeyPair {
 public:
  KeyPair() = default;
  static KeyPair generate(KeyOwner owner, Rng& rng);

  KeyOwner owner() const { return owner_; }
  const PublicKey& public_key() const { return pk_; }
  std::span<const uint8_t, 64> secret_key() const { return sk_; }

 private:
  KeyOwner owner_{};
  PublicKey pk_{};
  std::array<uint8_t, 64> sk_{};
};

// --- symmetric AEAD (Enc / Dec of the protocol notation) ---

SymmetricKey generate_symmetric_key(KeyRole role, Rng& rng);

// ChaCha20-Poly1305 with the key's counter nonce. Throws NonceExhausted
// when the per-key counter wraps and WrongKeyRole for Derived-free roles
// that must never encrypt (none today; ReportKey is MAC-only).
Ciphertext sym_seal(SymmetricKey& key, std::span<const uint8_t> plaintext,
                    std::span<const uint8_t> aad);
std::optional<Bytes> sym_open(const SymmetricKey& key, const Ciphertext& c,
                              std::span<const uint8_t> aad);

// --- MAC (mu = MAC(K, m)) ---

MacTag mac_tag(const SymmetricKey& key, std::span<const uint8_t> m);
bool mac_check(const SymmetricKey& key, std::span<const uint8_t> m, const MacTag& tag);
// Report keys authenticate local-attestation structures only.
MacTag report_mac(const SymmetricKey& key, std::span<const uint8_t> m);
bool report_mac_check(const SymmetricKey& key, std::span<const uint8_t> m, const MacTag& tag);

// --- hybrid public-key encryption (Enc_pk / Dec_sk) ---

constexpr size_t kMaxWrapLen = 4096;

Bytes hybrid_wrap(const PublicKey& pk, std::span<const uint8_t> m);
std::optional<Bytes> hybrid_unwrap(const KeyPair& kp, std::span<const uint8_t> c);

// --- digital signatures (sigma = Sign_sk(m), nu = Verify_pk(m, sigma)) ---

Signature sign(const KeyPair& kp, std::span<const uint8_t> m);
bool verify(const PublicKey& pk, std::span<const uint8_t> m, const Signature& sig);

}  // namespace trusdn
