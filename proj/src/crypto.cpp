#include "trusdn/crypto.hpp"

#include <sodium.h>

#include <atomic>
#include <cstring>

namespace trusdn {

struct SealAccess {
  static uint32_t context_id(const SymmetricKey& k) { return k.context_id_; }
  static uint64_t bump_counter(SymmetricKey& k) { return k.seal_counter_++; }
};

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) std::abort();
  }
};
const SodiumInit sodium_init_once;

bool role_may_encrypt(KeyRole role) {
  switch (role) {
    case KeyRole::SessionAlpha:
    case KeyRole::DomainBeta:
    case KeyRole::EphemeralEnc:
    case KeyRole::FlowPsk:
    case KeyRole::Derived:
      return true;
    case KeyRole::EphemeralMac:
    case KeyRole::ReportKey:
      return false;
  }
  return false;
}

MacTag hmac(const SymmetricKey& key, std::span<const uint8_t> m) {
  MacTag tag;
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.bytes().data(), key.bytes().size());
  crypto_auth_hmacsha256_update(&st, m.data(), m.size());
  crypto_auth_hmacsha256_final(&st, tag.bytes.data());
  return tag;
}

}  // namespace

const char* key_role_name(KeyRole role) {
  switch (role) {
    case KeyRole::SessionAlpha: return "SessionAlpha";
    case KeyRole::DomainBeta: return "DomainBeta";
    case KeyRole::EphemeralEnc: return "EphemeralEnc";
    case KeyRole::EphemeralMac: return "EphemeralMac";
    case KeyRole::FlowPsk: return "FlowPsk";
    case KeyRole::ReportKey: return "ReportKey";
    case KeyRole::Derived: return "Derived";
  }
  return "?";
}

namespace {
std::atomic<uint32_t> g_next_context_id{1};
}

uint32_t SymmetricKey::next_context_id() {
  return g_next_context_id.fetch_add(1, std::memory_order_relaxed);
}

void SymmetricKey::reset_context_ids() {
  g_next_context_id.store(1, std::memory_order_relaxed);
}

SymmetricKey::SymmetricKey(KeyRole role, const std::array<uint8_t, kLen>& bytes)
    : role_(role), bytes_(bytes), context_id_(next_context_id()) {}

SymmetricKey::SymmetricKey(const SymmetricKey& other)
    : role_(other.role_), bytes_(other.bytes_), context_id_(next_context_id()) {}

SymmetricKey& SymmetricKey::operator=(const SymmetricKey& other) {
  role_ = other.role_;
  bytes_ = other.bytes_;
  context_id_ = next_context_id();
  seal_counter_ = 0;
  return *this;
}

bool SymmetricKey::operator==(const SymmetricKey& other) const {
  return role_ == other.role_ && ct_equal(bytes_, other.bytes_);
}

SymmetricKey generate_symmetric_key(KeyRole role, Rng& rng) {
  return SymmetricKey(role, rng.block32());
}

Bytes Ciphertext::serialize() const {
  ByteWriter w;
  w.raw(nonce);
  w.blob(body);
  w.raw(aad_digest);
  return w.take();
}

Ciphertext Ciphertext::deserialize(ByteReader& r) {
  Ciphertext c;
  c.nonce = r.arr<12>();
  c.body = r.blob();
  c.aad_digest = r.arr<32>();
  return c;
}

std::optional<Ciphertext> Ciphertext::parse(std::span<const uint8_t> data) {
  try {
    ByteReader r(data);
    Ciphertext c = deserialize(r);
    if (!r.done()) return std::nullopt;
    return c;
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

Ciphertext sym_seal(SymmetricKey& key, std::span<const uint8_t> plaintext,
                    std::span<const uint8_t> aad) {
  if (!role_may_encrypt(key.role())) throw WrongKeyRole();
  if (key.seal_counter() == UINT64_MAX) throw NonceExhausted();

  Ciphertext out;
  uint32_t ctx = SealAccess::context_id(key);
  uint64_t count = SealAccess::bump_counter(key);
  for (int i = 0; i < 4; ++i) out.nonce[i] = static_cast<uint8_t>(ctx >> (8 * i));
  for (int i = 0; i < 8; ++i) out.nonce[4 + i] = static_cast<uint8_t>(count >> (8 * i));

  out.body.resize(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(
      out.body.data(), &clen, plaintext.data(), plaintext.size(), aad.data(), aad.size(),
      nullptr, out.nonce.data(), key.bytes().data());
  out.body.resize(clen);
  out.aad_digest = hash32(aad);
  return out;
}

std::optional<Bytes> sym_open(const SymmetricKey& key, const Ciphertext& c,
                              std::span<const uint8_t> aad) {
  if (c.body.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) return std::nullopt;
  Bytes plain(c.body.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long mlen = 0;
  int rc = crypto_aead_chacha20poly1305_ietf_decrypt(
      plain.data(), &mlen, nullptr, c.body.data(), c.body.size(), aad.data(), aad.size(),
      c.nonce.data(), key.bytes().data());
  if (rc != 0) return std::nullopt;
  if (!ct_equal(c.aad_digest, hash32(aad))) return std::nullopt;
  plain.resize(mlen);
  return plain;
}

MacTag mac_tag(const SymmetricKey& key, std::span<const uint8_t> m) {
  if (key.role() != KeyRole::EphemeralMac && key.role() != KeyRole::Derived)
    throw WrongKeyRole();
  return hmac(key, m);
}

bool mac_check(const SymmetricKey& key, std::span<const uint8_t> m, const MacTag& tag) {
  if (key.role() != KeyRole::EphemeralMac && key.role() != KeyRole::Derived) return false;
  MacTag expected = hmac(key, m);
  return ct_equal(expected.bytes, tag.bytes);
}

MacTag report_mac(const SymmetricKey& key, std::span<const uint8_t> m) {
  if (key.role() != KeyRole::ReportKey) throw WrongKeyRole();
  return hmac(key, m);
}

bool report_mac_check(const SymmetricKey& key, std::span<const uint8_t> m, const MacTag& tag) {
  if (key.role() != KeyRole::ReportKey) return false;
  return ct_equal(hmac(key, m).bytes, tag.bytes);
}

KeyPair KeyPair::generate(KeyOwner owner, Rng& rng) {
  KeyPair kp;
  kp.owner_ = owner;
  auto seed = rng.block32();
  crypto_sign_seed_keypair(kp.pk_.data(), kp.sk_.data(), seed.data());
  return kp;
}

Bytes hybrid_wrap(const PublicKey& pk, std::span<const uint8_t> m) {
  if (m.size() > kMaxWrapLen) throw MessageTooLong();
  uint8_t curve_pk[crypto_scalarmult_curve25519_BYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(curve_pk, pk.data()) != 0)
    throw Error("invalid public key");

  // Sealed-box layout (compatible with crypto_box_seal_open), but with the
  // ephemeral keypair derived from (recipient, message) instead of system
  // randomness, so runs reproduce bit for bit. Every wrapped message here
  // carries fresh key material, so derandomization leaks nothing beyond
  // equality of (recipient, message) pairs, which never repeat.
  uint8_t seed[crypto_box_SEEDBYTES];
  {
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, sizeof(seed));
    static const char ctx[] = "trusdn-wrap-ephemeral";
    crypto_generichash_update(&st, reinterpret_cast<const uint8_t*>(ctx), sizeof(ctx) - 1);
    crypto_generichash_update(&st, curve_pk, sizeof(curve_pk));
    crypto_generichash_update(&st, m.data(), m.size());
    crypto_generichash_final(&st, seed, sizeof(seed));
  }
  uint8_t eph_pk[crypto_box_PUBLICKEYBYTES];
  uint8_t eph_sk[crypto_box_SECRETKEYBYTES];
  crypto_box_seed_keypair(eph_pk, eph_sk, seed);
  sodium_memzero(seed, sizeof(seed));

  uint8_t nonce[crypto_box_NONCEBYTES];
  {
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, sizeof(nonce));
    crypto_generichash_update(&st, eph_pk, sizeof(eph_pk));
    crypto_generichash_update(&st, curve_pk, sizeof(curve_pk));
    crypto_generichash_final(&st, nonce, sizeof(nonce));
  }

  Bytes out(m.size() + crypto_box_SEALBYTES);
  std::memcpy(out.data(), eph_pk, sizeof(eph_pk));
  if (crypto_box_easy(out.data() + sizeof(eph_pk), m.data(), m.size(), nonce, curve_pk,
                      eph_sk) != 0)
    throw Error("seal failed");
  sodium_memzero(eph_sk, sizeof(eph_sk));
  return out;
}

std::optional<Bytes> hybrid_unwrap(const KeyPair& kp, std::span<const uint8_t> c) {
  if (c.size() < crypto_box_SEALBYTES) return std::nullopt;
  uint8_t curve_pk[crypto_scalarmult_curve25519_BYTES];
  uint8_t curve_sk[crypto_scalarmult_curve25519_SCALARBYTES];
  if (crypto_sign_ed25519_pk_to_curve25519(curve_pk, kp.public_key().data()) != 0)
    return std::nullopt;
  if (crypto_sign_ed25519_sk_to_curve25519(curve_sk, kp.secret_key().data()) != 0)
    return std::nullopt;
  Bytes plain(c.size() - crypto_box_SEALBYTES);
  int rc = crypto_box_seal_open(plain.data(), c.data(), c.size(), curve_pk, curve_sk);
  sodium_memzero(curve_sk, sizeof(curve_sk));
  if (rc != 0) return std::nullopt;
  return plain;
}

Signature sign(const KeyPair& kp, std::span<const uint8_t> m) {
  Signature sig;
  sig.bytes.resize(crypto_sign_BYTES);
  crypto_sign_detached(sig.bytes.data(), nullptr, m.data(), m.size(), kp.secret_key().data());
  return sig;
}

bool verify(const PublicKey& pk, std::span<const uint8_t> m, const Signature& sig) {
  if (sig.bytes.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(sig.bytes.data(), m.data(), m.size(), pk.data()) == 0;
}

}  // namespace trusdn
