#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "trusdn/enclave.hpp"

namespace trusdn {

struct Challenge {
  std::array<uint8_t, 32> nonce{};
  EnclaveId qe_identity = 0;
  uint64_t issued_at = 0;
};

enum class Verdict : uint8_t {
  Accepted,
  MeasurementMismatch,
  BadSignature,
  StaleNonce,
  UserDataMismatch,
  CuckooSuspected,
};

const char* verdict_name(Verdict v);

struct AttestationResult {
  Verdict verdict = Verdict::BadSignature;
  std::optional<PublicKey> enclave_pk;  // present iff Accepted
  Quote quote;
};

// What the attested platform returns for a challenge: the QE-signed quote
// plus the enclave public key whose hash sits in the report's user data.
struct AttestationResponse {
  Quote quote;
  PublicKey enclave_pk{};
};

// Minimal signed certificate standing in for the X.509 chain of the
// EPID authority -> provider verifier (V_P) -> tenant.
struct VerifierCertificate {
  std::string subject;
  std::string issuer;
  PublicKey pk{};
  uint64_t valid_from = 0;
  uint64_t valid_to = 0;
  Signature signature;

  Bytes signed_body() const;
};

struct PlatformListEntry {
  GroupElement pseudonym{};
  LinkableSignature signature;
};

struct PlatformSignatureList {
  std::string base_name;
  VerifierCertificate publisher;
  std::vector<PlatformListEntry> entries;

  std::string to_json() const;
  static PlatformSignatureList from_json(const std::string& text);
};

class AuthorityContext {
 public:
  explicit AuthorityContext(Rng& rng) : root_(KeyPair::generate(KeyOwner::Authority, rng)) {}

  const PublicKey& root_pk() const { return root_.public_key(); }

  VerifierCertificate issue(const std::string& subject, const PublicKey& subject_pk,
                            uint64_t valid_from, uint64_t valid_to) const;

 private:
  KeyPair root_;
};

VerifierCertificate issue_verifier_certificate(const KeyPair& issuer_keys,
                                               const std::string& issuer_name,
                                               const std::string& subject,
                                               const PublicKey& subject_pk,
                                               uint64_t valid_from, uint64_t valid_to);

// Validates a chain ordered leaf..root-issued; the last certificate must be
// signed by the root authority key, every link's issuer must match the next
// certificate's subject, and the tick must fall in every validity window.
bool validate_certificate_chain(const std::vector<VerifierCertificate>& chain,
                                const PublicKey& root_pk, uint64_t now);

// One verifier session context: nonce budget, freshness window and replay
// tracking for the challenge-quote-verify exchange.
class VerifierContext {
 public:
  VerifierContext(GroupParams group, uint64_t seed, uint64_t freshness_window = 64)
      : group_(std::move(group)), rng_(seed), freshness_window_(freshness_window) {}

  uint64_t now = 0;

  Challenge issue_challenge(const Platform& platform);

  // Full handshake driver: challenge, platform-side quote production,
  // verification of signature / nonce / user-data binding / measurement.
  AttestationResult attest_enclave(PlatformRegistry& registry, PlatformId platform,
                                   EnclaveId enclave, const Measurement& expected,
                                   const PseudonymBase& base);

  // Verification half, usable against a replayed or adversary-supplied
  // response.
  AttestationResult verify_response(const Challenge& challenge,
                                    const AttestationResponse& response,
                                    const Measurement& expected, const PseudonymBase& base);

  void set_certificate(VerifierCertificate cert, std::vector<VerifierCertificate> chain) {
    certificate_ = std::move(cert);
    chain_ = std::move(chain);
  }
  const std::optional<VerifierCertificate>& certificate() const { return certificate_; }
  const std::vector<VerifierCertificate>& chain() const { return chain_; }

  Rng& rng() { return rng_; }
  const GroupParams& group() const { return group_; }

 private:
  GroupParams group_;
  Rng rng_;
  uint64_t freshness_window_;
  std::set<std::array<uint8_t, 32>> consumed_nonces_;
  std::optional<VerifierCertificate> certificate_;
  std::vector<VerifierCertificate> chain_;
};

// Platform side of the exchange, redirect-aware via qe_quote.
AttestationResponse answer_challenge(PlatformRegistry& registry, PlatformId platform,
                                     EnclaveId enclave, const Challenge& challenge,
                                     const PseudonymBase& base, Rng& rng);

// Canonical message signed for a platform-list entry.
Bytes platform_attest_message(uint64_t epoch);

// The provider verifier attests its platforms and publishes linkable
// signatures under its name base. Platforms whose signature fails to
// verify are omitted.
PlatformSignatureList publish_platform_list(VerifierContext& vp, const std::string& base_name,
                                            PlatformRegistry& registry,
                                            const std::vector<PlatformId>& platforms,
                                            uint64_t epoch);

// Tenant-side cuckoo defense: obtain a fresh quote under the list's named
// base (through the possibly compromised host path) and require that it
// links to some published entry. Requires an authorized tenant certificate.
bool anti_cuckoo_check(VerifierContext& tenant, const PublicKey& root_pk,
                       PlatformRegistry& registry, PlatformId platform,
                       const PlatformSignatureList& list);

}  // namespace trusdn
