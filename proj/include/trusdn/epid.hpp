#pragma once

#include <array>
#include <optional>
#include <string>

#include "trusdn/bytes.hpp"
#include "trusdn/crypto.hpp"
#include "trusdn/errors.hpp"
#include "trusdn/rng.hpp"

namespace trusdn {

// Pseudonymous linkable signatures in the style of EPID's name-base mode:
// a signature reveals B^f for the signer's private member scalar f and the
// chosen base B, plus a Schnorr proof of knowledge of f (Fiat-Shamir over
// message, pseudonym, base and group id). Signatures by one member under
// the same named base share a pseudonym and can be linked; under distinct
// bases the pseudonyms are independent group elements.

using GroupElement = std::array<uint8_t, 32>;  // ristretto255 point
using GroupScalar = std::array<uint8_t, 32>;   // scalar mod group order

struct GroupParams {
  std::string group_id;
};

struct GroupMemberSecret {
  GroupScalar f{};
  std::string group_id;

  // Fresh nonzero scalar, unique per platform with overwhelming probability.
  static GroupMemberSecret generate(const GroupParams& group, Rng& rng);
};

struct PseudonymBase {
  enum class Kind : uint8_t { Named, Random };

  Kind kind = Kind::Random;
  std::string name;  // set for Named bases
  GroupElement point{};

  static PseudonymBase named(const std::string& verifier_name);
  static PseudonymBase random(Rng& rng);

  bool operator==(const PseudonymBase& other) const;

  Bytes serialize() const;
  static PseudonymBase deserialize(ByteReader& r);
};

struct LinkableSignature {
  GroupElement pseudonym{};  // base.point ^ f
  PseudonymBase base;
  GroupScalar challenge{};
  GroupScalar response{};
  Bytes message;  // the signed message, kept so links can be re-verified
  std::string group_id;

  Bytes serialize() const;
  static LinkableSignature deserialize(ByteReader& r);
};

LinkableSignature epid_sign(const GroupMemberSecret& member, const PseudonymBase& base,
                            std::span<const uint8_t> m, Rng& rng);

bool epid_verify(const GroupParams& group, const PseudonymBase& base,
                 std::span<const uint8_t> m, const LinkableSignature& sig);

// True iff both signatures verify, share a pseudonym and were produced
// under the same named base. Throws UnverifiedInput if either fails to
// verify.
bool epid_linked(const GroupParams& group, const LinkableSignature& a,
                 const LinkableSignature& b);

}  // namespace trusdn
