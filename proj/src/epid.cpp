#include "trusdn/epid.hpp"

#include <sodium.h>

#include <cstring>

namespace trusdn {

namespace {

constexpr std::string_view kBaseDomainSep = "trusdn-pseudonym-base";
constexpr std::string_view kChallengeDomainSep = "trusdn-epid-challenge";

GroupScalar reduce64(const std::array<uint8_t, 64>& wide) {
  GroupScalar s{};
  crypto_core_ristretto255_scalar_reduce(s.data(), wide.data());
  return s;
}

// Fiat-Shamir challenge binding everything the proof must commit to.
GroupScalar challenge_scalar(const std::string& group_id, std::span<const uint8_t> m,
                             const PseudonymBase& base, const GroupElement& pseudonym,
                             const GroupElement& commitment) {
  ByteWriter w;
  w.str(std::string(kChallengeDomainSep));
  w.str(group_id);
  w.blob(m);
  w.u8(static_cast<uint8_t>(base.kind));
  w.str(base.name);
  w.raw(base.point);
  w.raw(pseudonym);
  w.raw(commitment);
  return reduce64(hash64({std::span<const uint8_t>(w.bytes())}));
}

bool scalar_is_zero(const GroupScalar& s) {
  uint8_t acc = 0;
  for (uint8_t b : s) acc |= b;
  return acc == 0;
}

}  // namespace

GroupMemberSecret GroupMemberSecret::generate(const GroupParams& group, Rng& rng) {
  GroupMemberSecret member;
  member.group_id = group.group_id;
  do {
    std::array<uint8_t, 64> wide{};
    rng.fill(wide);
    member.f = reduce64(wide);
  } while (scalar_is_zero(member.f));
  return member;
}

PseudonymBase PseudonymBase::named(const std::string& verifier_name) {
  PseudonymBase base;
  base.kind = Kind::Named;
  base.name = verifier_name;
  auto wide = hash64({std::span<const uint8_t>(
                          reinterpret_cast<const uint8_t*>(kBaseDomainSep.data()),
                          kBaseDomainSep.size()),
                      std::span<const uint8_t>(
                          reinterpret_cast<const uint8_t*>(verifier_name.data()),
                          verifier_name.size())});
  crypto_core_ristretto255_from_hash(base.point.data(), wide.data());
  return base;
}

PseudonymBase PseudonymBase::random(Rng& rng) {
  PseudonymBase base;
  base.kind = Kind::Random;
  std::array<uint8_t, 64> wide{};
  rng.fill(wide);
  crypto_core_ristretto255_from_hash(base.point.data(), wide.data());
  return base;
}

bool PseudonymBase::operator==(const PseudonymBase& other) const {
  return kind == other.kind && name == other.name && point == other.point;
}

Bytes PseudonymBase::serialize() const {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(kind));
  w.str(name);
  w.raw(point);
  return w.take();
}

PseudonymBase PseudonymBase::deserialize(ByteReader& r) {
  PseudonymBase base;
  base.kind = static_cast<Kind>(r.u8());
  base.name = r.str();
  base.point = r.arr<32>();
  return base;
}

Bytes LinkableSignature::serialize() const {
  ByteWriter w;
  w.raw(pseudonym);
  w.raw(base.serialize());
  w.raw(challenge);
  w.raw(response);
  w.blob(message);
  w.str(group_id);
  return w.take();
}

LinkableSignature LinkableSignature::deserialize(ByteReader& r) {
  LinkableSignature sig;
  sig.pseudonym = r.arr<32>();
  sig.base = PseudonymBase::deserialize(r);
  sig.challenge = r.arr<32>();
  sig.response = r.arr<32>();
  sig.message = r.blob();
  sig.group_id = r.str();
  return sig;
}

LinkableSignature epid_sign(const GroupMemberSecret& member, const PseudonymBase& base,
                            std::span<const uint8_t> m, Rng& rng) {
  if (crypto_core_ristretto255_is_valid_point(base.point.data()) != 1) throw InvalidBase();
  if (scalar_is_zero(member.f)) throw InvalidBase("member secret is the zero scalar");

  LinkableSignature sig;
  sig.base = base;
  sig.group_id = member.group_id;
  sig.message.assign(m.begin(), m.end());
  if (crypto_scalarmult_ristretto255(sig.pseudonym.data(), member.f.data(),
                                     base.point.data()) != 0)
    throw InvalidBase("pseudonym degenerates to identity");

  GroupScalar r{};
  do {
    std::array<uint8_t, 64> wide{};
    rng.fill(wide);
    r = reduce64(wide);
  } while (scalar_is_zero(r));

  GroupElement commitment{};
  if (crypto_scalarmult_ristretto255(commitment.data(), r.data(), base.point.data()) != 0)
    throw InvalidBase();

  sig.challenge = challenge_scalar(member.group_id, m, base, sig.pseudonym, commitment);
  // s = r + c * f
  GroupScalar cf{};
  crypto_core_ristretto255_scalar_mul(cf.data(), sig.challenge.data(), member.f.data());
  crypto_core_ristretto255_scalar_add(sig.response.data(), r.data(), cf.data());
  return sig;
}

bool epid_verify(const GroupParams& group, const PseudonymBase& base,
                 std::span<const uint8_t> m, const LinkableSignature& sig) {
  if (sig.group_id != group.group_id) return false;
  if (crypto_core_ristretto255_is_valid_point(base.point.data()) != 1) return false;
  if (crypto_core_ristretto255_is_valid_point(sig.pseudonym.data()) != 1) return false;
  if (scalar_is_zero(sig.response)) return false;

  // commitment' = base^s / pseudonym^c; accept iff the challenge recomputed
  // over commitment' matches.
  GroupElement base_s{};
  if (crypto_scalarmult_ristretto255(base_s.data(), sig.response.data(), base.point.data()) != 0)
    return false;
  GroupElement pseud_c{};
  if (!scalar_is_zero(sig.challenge)) {
    if (crypto_scalarmult_ristretto255(pseud_c.data(), sig.challenge.data(),
                                       sig.pseudonym.data()) != 0)
      return false;
  }
  GroupElement commitment{};
  if (scalar_is_zero(sig.challenge)) {
    commitment = base_s;
  } else if (crypto_core_ristretto255_sub(commitment.data(), base_s.data(), pseud_c.data()) != 0) {
    return false;
  }

  GroupScalar expected = challenge_scalar(group.group_id, m, base, sig.pseudonym, commitment);
  return ct_equal(expected, sig.challenge);
}

bool epid_linked(const GroupParams& group, const LinkableSignature& a,
                 const LinkableSignature& b) {
  if (!epid_verify(group, a.base, a.message, a) || !epid_verify(group, b.base, b.message, b))
    throw UnverifiedInput();
  if (a.base.kind != PseudonymBase::Kind::Named || b.base.kind != PseudonymBase::Kind::Named)
    return false;
  if (!(a.base == b.base)) return false;
  return ct_equal(a.pseudonym, b.pseudonym);
}

}  // namespace trusdn
