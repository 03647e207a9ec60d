#include "trusdn/enclave.hpp"

namespace trusdn {

Measurement measure_enclave(EnclaveKind kind, std::span<const uint8_t> code,
                            std::span<const uint8_t> config) {
  ByteWriter layout;
  layout.u8(static_cast<uint8_t>(kind));
  layout.u64(code.size());
  layout.u64(config.size());
  Measurement m;
  m.digest = hash32({std::span<const uint8_t>(layout.bytes()), code, config});
  return m;
}

Bytes Report::mac_input() const {
  ByteWriter w;
  w.raw(reporter_measurement.digest);
  w.u64(target_id);
  w.raw(user_data);
  return w.take();
}

Bytes Report::serialize() const {
  ByteWriter w;
  w.raw(reporter_measurement.digest);
  w.u64(target_id);
  w.raw(user_data);
  w.raw(mac.bytes);
  return w.take();
}

Report Report::deserialize(ByteReader& r) {
  Report rep;
  rep.reporter_measurement.digest = r.arr<32>();
  rep.target_id = r.u64();
  rep.user_data = r.arr<32>();
  rep.mac.bytes = r.arr<32>();
  return rep;
}

Bytes Quote::signed_message() const {
  ByteWriter w;
  w.raw(report.serialize());
  w.raw(challenge_nonce);
  return w.take();
}

Bytes Quote::serialize() const {
  ByteWriter w;
  w.raw(report.serialize());
  w.raw(challenge_nonce);
  w.blob(signature.serialize());
  return w.take();
}

Quote Quote::deserialize(ByteReader& r) {
  Quote q;
  q.report = Report::deserialize(r);
  q.challenge_nonce = r.arr<32>();
  Bytes sig = r.blob();
  ByteReader sr(sig);
  q.signature = LinkableSignature::deserialize(sr);
  return q;
}

Platform::Platform(PlatformId id, const GroupParams& group, Rng& rng)
    : id_(id), member_(GroupMemberSecret::generate(group, rng)) {
  // Every platform ships with its quoting enclave.
  static const Bytes qe_code = to_bytes("trusdn-quoting-enclave");
  qe_ = create_enclave(EnclaveKind::Quoting, qe_code, {}, rng);
}

EnclaveId Platform::create_enclave(EnclaveKind kind, std::span<const uint8_t> code,
                                   std::span<const uint8_t> config, Rng& rng) {
  if (kind == EnclaveKind::Quoting && qe_ != 0) throw DuplicateQuotingEnclave();
  Enclave e;
  e.id = (static_cast<EnclaveId>(id_) << 32) | next_local_++;
  e.measurement = measure_enclave(kind, code, config);
  e.kind = kind;
  e.keypair = KeyPair::generate(
      kind == EnclaveKind::ComputeTask ? KeyOwner::ComputeTask
      : kind == EnclaveKind::Quoting   ? KeyOwner::QuotingEnclave
                                       : KeyOwner::Enclave,
      rng);
  EnclaveId eid = e.id;
  enclaves_.emplace(eid, std::move(e));
  report_keys_.emplace(eid, generate_symmetric_key(KeyRole::ReportKey, rng));
  return eid;
}

const Platform::Enclave& Platform::enclave_at(EnclaveId enclave) const {
  auto it = enclaves_.find(enclave);
  if (it == enclaves_.end()) throw Error("no such enclave on platform");
  return it->second;
}

void Platform::host_read_state(EnclaveId enclave) const {
  enclave_at(enclave);  // unknown enclave is still an error, not a leak
  throw IsolationViolation();
}

const PublicKey& Platform::enclave_pk(EnclaveId enclave) const {
  return enclave_at(enclave).keypair.public_key();
}

Measurement Platform::enclave_measurement(EnclaveId enclave) const {
  return enclave_at(enclave).measurement;
}

EnclaveKind Platform::enclave_kind(EnclaveId enclave) const {
  return enclave_at(enclave).kind;
}

bool Platform::has_enclave(EnclaveId enclave) const {
  return enclaves_.count(enclave) > 0;
}

Report Platform::ereport(EnclaveId reporter, EnclaveId target,
                         const std::array<uint8_t, 32>& user_data) const {
  if (!has_enclave(reporter) || !has_enclave(target)) throw CrossPlatformReport();
  Report rep;
  rep.reporter_measurement = enclave_at(reporter).measurement;
  rep.target_id = target;
  rep.user_data = user_data;
  rep.mac = report_mac(report_keys_.at(target), rep.mac_input());
  return rep;
}

bool Platform::verify_report(EnclaveId target, const Report& report) const {
  auto it = report_keys_.find(target);
  if (it == report_keys_.end()) return false;
  if (report.target_id != target) return false;
  return report_mac_check(it->second, report.mac_input(), report.mac);
}

const KeyPair& Platform::enclave_keypair_entry(EnclaveId enclave) const {
  return enclave_at(enclave).keypair;
}

void Platform::set_sealed_state_entry(EnclaveId enclave, std::shared_ptr<void> state) {
  auto it = enclaves_.find(enclave);
  if (it == enclaves_.end()) throw Error("no such enclave on platform");
  it->second.sealed_state = std::move(state);
}

std::shared_ptr<void> Platform::sealed_state_entry(EnclaveId enclave) const {
  return enclave_at(enclave).sealed_state;
}

Platform& PlatformRegistry::create(Rng& rng) {
  PlatformId id = next_++;
  auto [it, ok] = platforms_.emplace(id, Platform(id, group_, rng));
  return it->second;
}

Platform& PlatformRegistry::at(PlatformId id) {
  auto it = platforms_.find(id);
  if (it == platforms_.end()) throw Error("no such platform");
  return it->second;
}

const Platform& PlatformRegistry::at(PlatformId id) const {
  auto it = platforms_.find(id);
  if (it == platforms_.end()) throw Error("no such platform");
  return it->second;
}

Quote qe_quote(PlatformRegistry& registry, PlatformId platform, const Report& report,
               const std::array<uint8_t, 32>& nonce, const PseudonymBase& base, Rng& rng) {
  Platform& local = registry.at(platform);
  Quote q;
  q.report = report;
  q.challenge_nonce = nonce;
  if (local.redirect_target) {
    // Cuckoo behavior: the malicious platform's QE answers in place of the
    // local one. It skips local-attestation checks; the attacker's hardware
    // access lets it sign whatever the victim host forwards.
    Platform& target = registry.at(*local.redirect_target);
    q.signature = epid_sign(target.member_secret_entry(), base, q.signed_message(), rng);
    return q;
  }
  if (!local.verify_report(local.quoting_enclave(), report)) throw ReportRejected();
  q.signature = epid_sign(local.member_secret_entry(), base, q.signed_message(), rng);
  return q;
}

LinkableSignature platform_attest_sign_direct(const Platform& platform,
                                              const PseudonymBase& base,
                                              std::span<const uint8_t> m, Rng& rng) {
  return epid_sign(platform.member_secret_entry(), base, m, rng);
}

LinkableSignature platform_attest_sign(PlatformRegistry& registry, PlatformId platform,
                                       const PseudonymBase& base, std::span<const uint8_t> m,
                                       Rng& rng) {
  Platform& local = registry.at(platform);
  if (local.redirect_target)
    return epid_sign(registry.at(*local.redirect_target).member_secret_entry(), base, m, rng);
  return epid_sign(local.member_secret_entry(), base, m, rng);
}

}  // namespace trusdn
