#pragma once

#include <memory>
#include <set>

#include "trusdn/attestation.hpp"
#include "trusdn/data_plane.hpp"
#include "trusdn/endpoints.hpp"

namespace trusdn {

struct EnrollmentRejected : Error {
  explicit EnrollmentRejected(Verdict v)
      : Error(std::string("EnrollmentRejected: ") + verdict_name(v)), verdict(v) {}
  Verdict verdict;
};
struct UnknownEndpoint : Error {
  UnknownEndpoint() : Error("UnknownEndpoint") {}
};

// Switch enrollment payload: body = Enc(K', K_alpha || K_beta || epoch),
// tag = MAC(K'', body), wrapped = Enc_pk(EK^pk, K' || K''). K' and K'' are
// ephemeral: they exist only while the message is built or consumed.
struct EnrollmentMessage {
  Ciphertext body;
  MacTag tag;
  Bytes wrapped;

  Bytes serialize() const;
  static EnrollmentMessage deserialize(ByteReader& r);
};

struct EnrollmentSecrets {
  SymmetricKey k_alpha;
  SymmetricKey k_beta;
  uint64_t epoch;
};

EnrollmentMessage build_enrollment_message(const PublicKey& ek_pk,
                                           const SymmetricKey& k_alpha,
                                           const SymmetricKey& k_beta, uint64_t epoch,
                                           Rng& rng);
// MAC is checked under K'' before the body ciphertext is touched.
std::optional<EnrollmentSecrets> open_enrollment_message(const EnrollmentMessage& msg,
                                                         const KeyPair& ek);

// The controller's model of the network.
struct GlobalView {
  struct SwitchRecord {
    PlatformId platform;
    EnclaveId enclave;
    Measurement measurement;
    SymmetricKey k_alpha;
    DomainId domain;
  };
  struct CtRecord {
    PlatformId platform;
    EnclaveId enclave;
    PublicKey ck_pk;
    SwitchId attached;
  };
  struct DomainRecord {
    SymmetricKey k_beta;
    uint64_t epoch;
    std::vector<SwitchId> members;
  };

  std::set<PlatformId> hosts;
  std::map<SwitchId, SwitchRecord> switches;
  std::map<CtId, CtRecord> compute_tasks;
  std::map<DomainId, DomainRecord> domains;
  std::vector<std::pair<NodeId, NodeId>> links;
};

// The network controller: enrollment, the global view, packet-in handling
// with flow-PSK distribution, rule compilation and domain-key rotation.
class Controller {
 public:
  Controller(PlatformRegistry& registry, uint64_t seed);

  // When false, packet-in handling installs rules and releases the packet
  // but distributes no PSKs (the control path used as benchmark baseline).
  bool psk_enabled = true;

  // Tenant-side cuckoo precheck applied before every enrollment.
  void enable_cuckoo_defense(const PublicKey& root_pk, PlatformSignatureList list);

  // Expected-measurement policy. When set, enrollment attests against these
  // known-good measurements instead of measuring the submitted code, so a
  // component shipping different code is rejected.
  std::optional<Measurement> switch_policy;
  std::optional<Measurement> ct_policy;

  SwitchId deploy_and_enroll_switch(PlatformId platform, std::span<const uint8_t> code,
                                    std::span<const uint8_t> config, DomainId domain);
  CtId deploy_and_enroll_ct(PlatformId platform, std::span<const uint8_t> code,
                            std::span<const uint8_t> config, SwitchId attach_to);

  // Packet-in wire payload (switch id + sealed packet) -> grant, rule
  // install and release messages. Duplicate packet-ins for an already
  // granted flow produce nothing.
  std::vector<OutMsg> handle_packet_in(SwitchId from_switch,
                                       std::span<const uint8_t> payload);

  SymmetricKey generate_flow_psk(const FlowKey& flow);
  uint64_t rotate_domain_key(DomainId domain, std::vector<OutMsg>& out);

  // Enclave-entry views of the deployed contexts, for tests and the
  // simulator's dispatch loop.
  std::shared_ptr<SwitchContext> switch_ctx(SwitchId id);
  std::shared_ptr<ComputeTask> ct_ctx(CtId id);

  const GlobalView& view() const { return view_; }
  const PublicKey& nc_pk() const { return nc_keys_.public_key(); }
  VerifierContext& verifier() { return verifier_; }
  const std::map<FlowKey, SymmetricKey>& granted_flows() const { return granted_; }

  std::map<std::string, uint64_t> counters;
  // Wall-clock spent in the most recent packet-in on PSK generation and on
  // wrapping/signing the grant material.
  uint64_t last_keygen_ns = 0;
  uint64_t last_distribution_ns = 0;

 private:
  GlobalView::DomainRecord& domain_record(DomainId domain);
  void install_rules_for_flow(const FlowKey& flow, const GlobalView::CtRecord& src,
                              const GlobalView::CtRecord& dst, std::vector<OutMsg>& out);
  OutMsg sealed_to_switch(SwitchId sw, MsgType type, std::span<const uint8_t> body);

  PlatformRegistry& registry_;
  Rng rng_;
  VerifierContext verifier_;
  KeyPair nc_keys_;
  GlobalView view_;
  std::map<FlowKey, SymmetricKey> granted_;  // canonical flow -> SK_gamma
  SwitchId next_switch_ = 1;
  CtId next_ct_ = 1;
  uint64_t next_rule_id_ = 1;
  std::optional<PublicKey> cuckoo_root_;
  std::optional<PlatformSignatureList> cuckoo_list_;
};

}  // namespace trusdn
