#pragma once

#include <map>
#include <memory>
#include <optional>

#include "trusdn/crypto.hpp"
#include "trusdn/epid.hpp"

namespace trusdn {

using PlatformId = uint32_t;
using EnclaveId = uint64_t;

enum class EnclaveKind : uint8_t { Switch, ComputeTask, Quoting, Bootstrap };

struct Measurement {
  Digest32 digest{};
  bool operator==(const Measurement& other) const { return digest == other.digest; }
};

// digest of (page-layout descriptor || code || config); the layout
// descriptor is a fixed serialization of kind and section lengths.
Measurement measure_enclave(EnclaveKind kind, std::span<const uint8_t> code,
                            std::span<const uint8_t> config);

// Local attestation structure (EREPORT output). The MAC is keyed with the
// target enclave's report key, which never leaves the platform.
struct Report {
  Measurement reporter_measurement;
  EnclaveId target_id = 0;
  std::array<uint8_t, 32> user_data{};
  MacTag mac;

  Bytes mac_input() const;
  Bytes serialize() const;
  static Report deserialize(ByteReader& r);
};

struct Quote {
  Report report;
  std::array<uint8_t, 32> challenge_nonce{};
  LinkableSignature signature;

  Bytes signed_message() const;  // report || nonce, what the QE signs
  Bytes serialize() const;
  static Quote deserialize(ByteReader& r);
};

class Platform;

// An emulated SGX platform: enclaves with measurements, per-enclave report
// keys, and one quoting enclave holding the platform's group member secret.
class Platform {
 public:
  Platform(PlatformId id, const GroupParams& group, Rng& rng);

  PlatformId id() const { return id_; }

  // --- host-level operations -------------------------------------------

  EnclaveId create_enclave(EnclaveKind kind, std::span<const uint8_t> code,
                           std::span<const uint8_t> config, Rng& rng);

  // Modeling the EPC guarantee: reading enclave-owned state from the host
  // always fails.
  [[noreturn]] void host_read_state(EnclaveId enclave) const;

  // Public data is readable from the host.
  const PublicKey& enclave_pk(EnclaveId enclave) const;
  Measurement enclave_measurement(EnclaveId enclave) const;
  EnclaveKind enclave_kind(EnclaveId enclave) const;
  bool has_enclave(EnclaveId enclave) const;
  EnclaveId quoting_enclave() const { return qe_; }

  // --- enclave-entry operations (trusted path) -------------------------

  Report ereport(EnclaveId reporter, EnclaveId target,
                 const std::array<uint8_t, 32>& user_data) const;
  bool verify_report(EnclaveId target, const Report& report) const;

  const KeyPair& enclave_keypair_entry(EnclaveId enclave) const;
  const GroupMemberSecret& member_secret_entry() const { return member_; }

  // Opaque enclave-resident state (the switch FIB, CT key stores).
  void set_sealed_state_entry(EnclaveId enclave, std::shared_ptr<void> state);
  std::shared_ptr<void> sealed_state_entry(EnclaveId enclave) const;

  // Adversary knobs.
  bool honest = true;
  std::optional<PlatformId> redirect_target;  // cuckoo forwarding

 private:
  struct Enclave {
    EnclaveId id;
    Measurement measurement;
    EnclaveKind kind;
    KeyPair keypair;
    std::shared_ptr<void> sealed_state;
  };

  const Enclave& enclave_at(EnclaveId enclave) const;

  PlatformId id_;
  EnclaveId next_local_ = 1;
  std::map<EnclaveId, Enclave> enclaves_;
  std::map<EnclaveId, SymmetricKey> report_keys_;
  EnclaveId qe_ = 0;
  GroupMemberSecret member_;
};

class PlatformRegistry {
 public:
  explicit PlatformRegistry(const GroupParams& group) : group_(group) {}

  Platform& create(Rng& rng);
  Platform& at(PlatformId id);
  const Platform& at(PlatformId id) const;
  bool contains(PlatformId id) const { return platforms_.count(id) > 0; }
  const GroupParams& group() const { return group_; }
  const std::map<PlatformId, Platform>& platforms() const { return platforms_; }
  std::map<PlatformId, Platform>& platforms() { return platforms_; }

 private:
  GroupParams group_;
  PlatformId next_ = 1;
  std::map<PlatformId, Platform> platforms_;
};

// Produce a quote for a local-attestation report. If the platform has a
// cuckoo redirect configured, the call is transparently served by the
// malicious platform's quoting enclave, which signs without checking the
// report (the attacker's oracle behavior). Honest path: the QE verifies
// the report first and rejects tampered ones.
Quote qe_quote(PlatformRegistry& registry, PlatformId platform, const Report& report,
               const std::array<uint8_t, 32>& nonce, const PseudonymBase& base, Rng& rng);

// Platform-level attestation signature over an arbitrary message, as used
// for the published platform list and the runtime cuckoo check. The
// redirect-aware variant models traffic that flows through the possibly
// compromised host; the direct variant is the provider attesting hardware
// it physically controls.
LinkableSignature platform_attest_sign_direct(const Platform& platform,
                                              const PseudonymBase& base,
                                              std::span<const uint8_t> m, Rng& rng);
LinkableSignature platform_attest_sign(PlatformRegistry& registry, PlatformId platform,
                                       const PseudonymBase& base, std::span<const uint8_t> m,
                                       Rng& rng);

}  // namespace trusdn
