#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "trusdn/crypto.hpp"
#include "trusdn/rng.hpp"

using namespace trusdn;

TEST_CASE("symmetric key generation: length, role, rng advance") {
  Rng rng(1);
  SymmetricKey k = generate_symmetric_key(KeyRole::FlowPsk, rng);
  CHECK(k.bytes().size() == 32);
  CHECK(k.role() == KeyRole::FlowPsk);

  SymmetricKey k2 = generate_symmetric_key(KeyRole::FlowPsk, rng);
  CHECK_FALSE(k == k2);
}

TEST_CASE("keys of different roles never compare equal even with equal bytes") {
  std::array<uint8_t, 32> bytes{};
  bytes.fill(0xaa);
  SymmetricKey a(KeyRole::SessionAlpha, bytes);
  SymmetricKey b(KeyRole::DomainBeta, bytes);
  SymmetricKey c(KeyRole::SessionAlpha, bytes);
  CHECK_FALSE(a == b);
  CHECK(a == c);
}

TEST_CASE("seal/open round trip") {
  Rng rng(7);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  Bytes msg = to_bytes("attack at dawn");
  Bytes aad = to_bytes("header");
  Ciphertext c = sym_seal(k, msg, aad);
  CHECK(c.body.size() == msg.size() + 16);
  auto opened = sym_open(k, c, aad);
  REQUIRE(opened.has_value());
  CHECK(*opened == msg);
}

TEST_CASE("seal twice gives distinct nonces and bodies") {
  Rng rng(2);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  Bytes msg = to_bytes("same plaintext");
  Ciphertext a = sym_seal(k, msg, {});
  Ciphertext b = sym_seal(k, msg, {});
  CHECK(a.nonce != b.nonce);
  CHECK(a.body != b.body);
}

TEST_CASE("exhaustive single-bit flip on body is rejected") {
  Rng rng(3);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  Bytes msg = to_bytes("sixteen byte msg");  // 16 bytes
  REQUIRE(msg.size() == 16);
  Bytes aad = to_bytes("aad");
  Ciphertext c = sym_seal(k, msg, aad);
  for (size_t byte = 0; byte < c.body.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      Ciphertext tampered = c;
      tampered.body[byte] ^= static_cast<uint8_t>(1u << bit);
      CHECK_FALSE(sym_open(k, tampered, aad).has_value());
    }
  }
}

TEST_CASE("open with wrong key, wrong aad, flipped nonce all fail") {
  Rng rng(4);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  SymmetricKey other = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  Bytes msg = to_bytes("payload");
  Bytes aad = to_bytes("aad-value");
  Ciphertext c = sym_seal(k, msg, aad);

  CHECK_FALSE(sym_open(other, c, aad).has_value());

  // vary one aad byte at a time
  for (size_t i = 0; i < aad.size(); ++i) {
    Bytes bad = aad;
    bad[i] ^= 0x01;
    CHECK_FALSE(sym_open(k, c, bad).has_value());
  }

  Ciphertext flipped = c;
  flipped.nonce[0] ^= 0x01;
  CHECK_FALSE(sym_open(k, flipped, aad).has_value());
}

TEST_CASE("round-trip property over random sizes up to 64 KiB") {
  Rng rng(5);
  SymmetricKey k = generate_symmetric_key(KeyRole::DomainBeta, rng);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = rng.uniform(64 * 1024 + 1);
    Bytes msg = rng.bytes(n);
    Bytes aad = rng.bytes(rng.uniform(64));
    Ciphertext c = sym_seal(k, msg, aad);
    auto opened = sym_open(k, c, aad);
    REQUIRE(opened.has_value());
    CHECK(*opened == msg);
  }
}

TEST_CASE("tamper rejection at random positions") {
  Rng rng(6);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  for (int trial = 0; trial < 200; ++trial) {
    Bytes msg = rng.bytes(1 + rng.uniform(256));
    Bytes aad = rng.bytes(1 + rng.uniform(32));
    Ciphertext c = sym_seal(k, msg, aad);
    switch (rng.uniform(3)) {
      case 0: {
        size_t pos = rng.uniform(c.body.size());
        c.body[pos] ^= static_cast<uint8_t>(1u << rng.uniform(8));
        break;
      }
      case 1: {
        c.nonce[rng.uniform(c.nonce.size())] ^= static_cast<uint8_t>(1u << rng.uniform(8));
        break;
      }
      default: {
        size_t pos = rng.uniform(aad.size());
        aad[pos] ^= static_cast<uint8_t>(1u << rng.uniform(8));
        break;
      }
    }
    CHECK_FALSE(sym_open(k, c, aad).has_value());
  }
}

TEST_CASE("nonce uniqueness over 1e5 seals") {
  Rng rng(8);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  Bytes msg = to_bytes("x");
  std::set<std::array<uint8_t, 12>> nonces;
  for (int i = 0; i < 100000; ++i) {
    Ciphertext c = sym_seal(k, msg, {});
    CHECK(nonces.insert(c.nonce).second);
  }
}

TEST_CASE("nonce counter exhaustion") {
  Rng rng(9);
  SymmetricKey k = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  k.set_seal_counter_for_test(UINT64_MAX);
  Bytes msg = to_bytes("m");
  CHECK_THROWS_AS(sym_seal(k, msg, {}), NonceExhausted);
}

TEST_CASE("mac key role policy") {
  Rng rng(10);
  SymmetricKey enc = generate_symmetric_key(KeyRole::SessionAlpha, rng);
  SymmetricKey mac = generate_symmetric_key(KeyRole::EphemeralMac, rng);
  CHECK_THROWS_AS(mac_tag(enc, to_bytes("m")), WrongKeyRole);
  CHECK_THROWS_AS(sym_seal(mac, to_bytes("m"), {}), WrongKeyRole);
}

TEST_CASE("mac determinism and round trip") {
  Rng rng(11);
  SymmetricKey k = generate_symmetric_key(KeyRole::EphemeralMac, rng);
  Bytes m = to_bytes("authenticated message");
  MacTag a = mac_tag(k, m);
  MacTag b = mac_tag(k, m);
  CHECK(a.bytes == b.bytes);
  CHECK(mac_check(k, m, a));

  // oracle: appending any single byte value invalidates the tag
  for (int v = 0; v < 256; ++v) {
    Bytes ext = m;
    ext.push_back(static_cast<uint8_t>(v));
    CHECK_FALSE(mac_check(k, ext, a));
  }
}

TEST_CASE("mac_check rejects truncated and random tags") {
  Rng rng(12);
  SymmetricKey k = generate_symmetric_key(KeyRole::EphemeralMac, rng);
  Bytes m = to_bytes("msg");
  MacTag tag = mac_tag(k, m);

  MacTag truncated = tag;
  truncated.bytes.fill(0);
  std::copy(tag.bytes.begin(), tag.bytes.begin() + 16, truncated.bytes.begin());
  CHECK_FALSE(mac_check(k, m, truncated));

  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    MacTag random_tag;
    rng.fill(random_tag.bytes);
    if (mac_check(k, m, random_tag)) ++hits;
  }
  CHECK(hits == 0);
}

TEST_CASE("hybrid wrap/unwrap round trip, wrong key fails") {
  Rng rng(13);
  KeyPair kp = KeyPair::generate(KeyOwner::Enclave, rng);
  KeyPair other = KeyPair::generate(KeyOwner::Enclave, rng);
  Bytes m = to_bytes("enrollment keys");

  // wrapping is deterministic in (recipient, message); either input
  // changing must change the ciphertext
  Bytes c1 = hybrid_wrap(kp.public_key(), m);
  CHECK(c1 == hybrid_wrap(kp.public_key(), m));
  CHECK(c1 != hybrid_wrap(other.public_key(), m));
  CHECK(c1 != hybrid_wrap(kp.public_key(), to_bytes("enrollment keyz")));

  auto out = hybrid_unwrap(kp, c1);
  REQUIRE(out.has_value());
  CHECK(*out == m);
  CHECK_FALSE(hybrid_unwrap(other, c1).has_value());
}

TEST_CASE("hybrid: empty message, size limit, bit-flip oracle") {
  Rng rng(14);
  KeyPair kp = KeyPair::generate(KeyOwner::ComputeTask, rng);

  Bytes empty;
  Bytes c = hybrid_wrap(kp.public_key(), empty);
  auto out = hybrid_unwrap(kp, c);
  REQUIRE(out.has_value());
  CHECK(out->empty());

  Bytes too_long(kMaxWrapLen + 1, 0x55);
  CHECK_THROWS_AS(hybrid_wrap(kp.public_key(), too_long), MessageTooLong);

  Bytes m = to_bytes("tamper me");
  Bytes sealed = hybrid_wrap(kp.public_key(), m);
  for (size_t i = 0; i < sealed.size(); ++i) {
    Bytes bad = sealed;
    bad[i] ^= 0x01;
    auto r = hybrid_unwrap(kp, bad);
    CHECK((!r.has_value() || *r != m));
  }
}

TEST_CASE("sign/verify round trip and mutation oracle") {
  Rng rng(15);
  KeyPair kp = KeyPair::generate(KeyOwner::Verifier, rng);
  KeyPair other = KeyPair::generate(KeyOwner::Verifier, rng);
  Bytes m = to_bytes("signed payload");
  Signature sig = sign(kp, m);

  CHECK(verify(kp.public_key(), m, sig));
  CHECK_FALSE(verify(other.public_key(), m, sig));

  for (size_t i = 0; i < m.size(); ++i) {
    Bytes mutated = m;
    mutated[i] ^= 0xff;
    CHECK_FALSE(verify(kp.public_key(), mutated, sig));
  }

  Signature malformed;
  malformed.bytes = to_bytes("short");
  CHECK_FALSE(verify(kp.public_key(), m, malformed));

  Signature other_msg = sign(kp, to_bytes("different"));
  CHECK_FALSE(verify(kp.public_key(), m, other_msg));
}

TEST_CASE("rng determinism") {
  Rng a(42), b(42), c(43);
  CHECK(a.bytes(64) == b.bytes(64));
  CHECK(a.bytes(64) != c.bytes(64));
}
