#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sodium.h>

#include "trusdn/epid.hpp"

using namespace trusdn;

namespace {

const GroupParams kGroup{"test-group"};

// Independent exponentiation oracle: computes base^f straight through
// libsodium, bypassing epid_sign.
GroupElement exp_oracle(const GroupElement& base, const GroupScalar& f) {
  GroupElement out{};
  REQUIRE(crypto_scalarmult_ristretto255(out.data(), f.data(), base.data()) == 0);
  return out;
}

GroupScalar scalar_from_u64(uint64_t v) {
  GroupScalar s{};
  for (int i = 0; i < 8; ++i) s[i] = static_cast<uint8_t>(v >> (8 * i));
  return s;
}

GroupMemberSecret member_with_scalar(uint64_t v) {
  GroupMemberSecret m;
  m.group_id = kGroup.group_id;
  m.f = scalar_from_u64(v);
  return m;
}

}  // namespace

TEST_CASE("sign/verify round trip") {
  Rng rng(1);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  Bytes m = to_bytes("attest this");
  LinkableSignature sig = epid_sign(member, base, m, rng);
  CHECK(epid_verify(kGroup, base, m, sig));
}

TEST_CASE("named bases with equal names yield equal points") {
  PseudonymBase a = PseudonymBase::named("V_P");
  PseudonymBase b = PseudonymBase::named("V_P");
  PseudonymBase c = PseudonymBase::named("other");
  CHECK(a.point == b.point);
  CHECK(a.point != c.point);
}

TEST_CASE("same member and named base: pseudonyms equal across messages") {
  Rng rng(2);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  LinkableSignature s1 = epid_sign(member, base, to_bytes("msg one"), rng);
  LinkableSignature s2 = epid_sign(member, base, to_bytes("msg two"), rng);
  CHECK(s1.pseudonym == s2.pseudonym);
  CHECK(s1.pseudonym == exp_oracle(base.point, member.f));
}

TEST_CASE("same member, distinct random bases: pseudonyms differ") {
  Rng rng(3);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  for (int i = 0; i < 20; ++i) {
    PseudonymBase r1 = PseudonymBase::random(rng);
    PseudonymBase r2 = PseudonymBase::random(rng);
    LinkableSignature s1 = epid_sign(member, r1, to_bytes("m"), rng);
    LinkableSignature s2 = epid_sign(member, r2, to_bytes("m"), rng);
    CHECK(s1.pseudonym != s2.pseudonym);
    CHECK(s1.pseudonym == exp_oracle(r1.point, member.f));
    CHECK(s2.pseudonym == exp_oracle(r2.point, member.f));
  }
}

TEST_CASE("forged pseudonym B^(f+1) does not verify") {
  Rng rng(4);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  Bytes m = to_bytes("message");
  LinkableSignature sig = epid_sign(member, base, m, rng);

  GroupScalar one = scalar_from_u64(1);
  GroupScalar f_plus_1{};
  crypto_core_ristretto255_scalar_add(f_plus_1.data(), member.f.data(), one.data());
  sig.pseudonym = exp_oracle(base.point, f_plus_1);
  CHECK_FALSE(epid_verify(kGroup, base, m, sig));
}

TEST_CASE("base swapped after signing does not verify") {
  Rng rng(5);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  PseudonymBase swapped = PseudonymBase::named("V_Q");
  Bytes m = to_bytes("message");
  LinkableSignature sig = epid_sign(member, base, m, rng);
  CHECK_FALSE(epid_verify(kGroup, swapped, m, sig));
}

TEST_CASE("mutated message does not verify") {
  Rng rng(6);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  LinkableSignature sig = epid_sign(member, base, to_bytes("original"), rng);
  CHECK_FALSE(epid_verify(kGroup, base, to_bytes("origin4l"), sig));
}

TEST_CASE("linkability: same f and named base") {
  Rng rng(7);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  LinkableSignature a = epid_sign(member, base, to_bytes("a"), rng);
  LinkableSignature b = epid_sign(member, base, to_bytes("b"), rng);
  CHECK(epid_linked(kGroup, a, b));
  // oracle confirms shared pseudonym
  CHECK(a.pseudonym == exp_oracle(base.point, member.f));
  CHECK(b.pseudonym == exp_oracle(base.point, member.f));
}

TEST_CASE("unlinkable across different named bases") {
  Rng rng(8);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  LinkableSignature a = epid_sign(member, PseudonymBase::named("A"), to_bytes("m"), rng);
  LinkableSignature b = epid_sign(member, PseudonymBase::named("B"), to_bytes("m"), rng);
  CHECK_FALSE(epid_linked(kGroup, a, b));
}

TEST_CASE("unlinkable for different members under same named base") {
  Rng rng(9);
  PseudonymBase base = PseudonymBase::named("V_P");
  // exhaustive over a small scalar set
  for (uint64_t f1 = 1; f1 <= 10; ++f1) {
    for (uint64_t f2 = 1; f2 <= 10; ++f2) {
      LinkableSignature a = epid_sign(member_with_scalar(f1), base, to_bytes("x"), rng);
      LinkableSignature b = epid_sign(member_with_scalar(f2), base, to_bytes("y"), rng);
      CHECK(epid_linked(kGroup, a, b) == (f1 == f2));
    }
  }
}

TEST_CASE("linkability trichotomy over random trials") {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    uint64_t f1 = 1 + rng.uniform(50);
    uint64_t f2 = 1 + rng.uniform(50);
    bool same_named_base = rng.uniform(2) == 0;
    PseudonymBase b1 = PseudonymBase::named("V_P");
    PseudonymBase b2 = same_named_base ? b1
                       : rng.uniform(2) == 0 ? PseudonymBase::named("V_Q")
                                             : PseudonymBase::random(rng);
    LinkableSignature s1 = epid_sign(member_with_scalar(f1), b1, to_bytes("m1"), rng);
    LinkableSignature s2 = epid_sign(member_with_scalar(f2), b2, to_bytes("m2"), rng);
    bool expect = (f1 == f2) && same_named_base;
    CHECK(epid_linked(kGroup, s1, s2) == expect);
  }
}

TEST_CASE("epid_linked rejects unverified input") {
  Rng rng(11);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  PseudonymBase base = PseudonymBase::named("V_P");
  LinkableSignature good = epid_sign(member, base, to_bytes("m"), rng);
  LinkableSignature bad = good;
  bad.message = to_bytes("tampered");
  CHECK_THROWS_AS(epid_linked(kGroup, good, bad), UnverifiedInput);
}

TEST_CASE("proof must match the proved scalar: mismatched tuples never verify") {
  Rng rng(12);
  PseudonymBase base = PseudonymBase::named("V_P");
  for (uint64_t f = 1; f <= 20; ++f) {
    LinkableSignature sig = epid_sign(member_with_scalar(f), base, to_bytes("m"), rng);
    // swap in the pseudonym of a different member; proof is now inconsistent
    sig.pseudonym = exp_oracle(base.point, scalar_from_u64(f + 1));
    CHECK_FALSE(epid_verify(kGroup, base, to_bytes("m"), sig));
  }
}

TEST_CASE("serialization round trip") {
  Rng rng(13);
  GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
  LinkableSignature sig = epid_sign(member, PseudonymBase::named("V_P"), to_bytes("m"), rng);
  Bytes wire = sig.serialize();
  ByteReader r(wire);
  LinkableSignature back = LinkableSignature::deserialize(r);
  CHECK(r.done());
  CHECK(back.pseudonym == sig.pseudonym);
  CHECK(back.challenge == sig.challenge);
  CHECK(back.response == sig.response);
  CHECK(epid_verify(kGroup, back.base, back.message, back));
}
