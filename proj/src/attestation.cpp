#include "trusdn/attestation.hpp"

#include <nlohmann/json.hpp>

namespace trusdn {

using nlohmann::json;

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Accepted: return "Accepted";
    case Verdict::MeasurementMismatch: return "MeasurementMismatch";
    case Verdict::BadSignature: return "BadSignature";
    case Verdict::StaleNonce: return "StaleNonce";
    case Verdict::UserDataMismatch: return "UserDataMismatch";
    case Verdict::CuckooSuspected: return "CuckooSuspected";
  }
  return "?";
}

Bytes VerifierCertificate::signed_body() const {
  ByteWriter w;
  w.str(subject);
  w.str(issuer);
  w.raw(pk);
  w.u64(valid_from);
  w.u64(valid_to);
  return w.take();
}

VerifierCertificate issue_verifier_certificate(const KeyPair& issuer_keys,
                                               const std::string& issuer_name,
                                               const std::string& subject,
                                               const PublicKey& subject_pk,
                                               uint64_t valid_from, uint64_t valid_to) {
  VerifierCertificate cert;
  cert.subject = subject;
  cert.issuer = issuer_name;
  cert.pk = subject_pk;
  cert.valid_from = valid_from;
  cert.valid_to = valid_to;
  cert.signature = sign(issuer_keys, cert.signed_body());
  return cert;
}

VerifierCertificate AuthorityContext::issue(const std::string& subject,
                                            const PublicKey& subject_pk, uint64_t valid_from,
                                            uint64_t valid_to) const {
  return issue_verifier_certificate(root_, "epid-authority", subject, subject_pk, valid_from,
                                    valid_to);
}

bool validate_certificate_chain(const std::vector<VerifierCertificate>& chain,
                                const PublicKey& root_pk, uint64_t now) {
  if (chain.empty()) return false;
  for (size_t i = 0; i < chain.size(); ++i) {
    const VerifierCertificate& cert = chain[i];
    if (now < cert.valid_from || now > cert.valid_to) return false;
    const PublicKey& issuer_pk = (i + 1 < chain.size()) ? chain[i + 1].pk : root_pk;
    if (i + 1 < chain.size() && cert.issuer != chain[i + 1].subject) return false;
    if (!verify(issuer_pk, cert.signed_body(), cert.signature)) return false;
  }
  return true;
}

Challenge VerifierContext::issue_challenge(const Platform& platform) {
  Challenge ch;
  ch.nonce = rng_.block32();
  ch.qe_identity = platform.quoting_enclave();
  ch.issued_at = now;
  return ch;
}

AttestationResponse answer_challenge(PlatformRegistry& registry, PlatformId platform,
                                     EnclaveId enclave, const Challenge& challenge,
                                     const PseudonymBase& base, Rng& rng) {
  Platform& p = registry.at(platform);
  AttestationResponse resp;
  resp.enclave_pk = p.enclave_pk(enclave);
  // The reporter stores hash(EK_pk) in the report's user data and attests
  // itself to the QE named in the challenge.
  std::array<uint8_t, 32> user_data = hash32(resp.enclave_pk);
  Report report = p.ereport(enclave, challenge.qe_identity, user_data);
  resp.quote = qe_quote(registry, platform, report, challenge.nonce, base, rng);
  return resp;
}

AttestationResult VerifierContext::verify_response(const Challenge& challenge,
                                                   const AttestationResponse& response,
                                                   const Measurement& expected,
                                                   const PseudonymBase& base) {
  AttestationResult result;
  result.quote = response.quote;

  if (!epid_verify(group_, base, response.quote.signed_message(), response.quote.signature)) {
    result.verdict = Verdict::BadSignature;
    return result;
  }
  bool fresh = response.quote.challenge_nonce == challenge.nonce &&
               now >= challenge.issued_at && now - challenge.issued_at <= freshness_window_ &&
               consumed_nonces_.count(challenge.nonce) == 0;
  if (!fresh) {
    result.verdict = Verdict::StaleNonce;
    return result;
  }
  if (hash32(response.enclave_pk) != response.quote.report.user_data) {
    result.verdict = Verdict::UserDataMismatch;
    return result;
  }
  if (!(response.quote.report.reporter_measurement == expected)) {
    result.verdict = Verdict::MeasurementMismatch;
    return result;
  }
  consumed_nonces_.insert(challenge.nonce);
  result.verdict = Verdict::Accepted;
  result.enclave_pk = response.enclave_pk;
  return result;
}

AttestationResult VerifierContext::attest_enclave(PlatformRegistry& registry,
                                                  PlatformId platform, EnclaveId enclave,
                                                  const Measurement& expected,
                                                  const PseudonymBase& base) {
  Challenge challenge = issue_challenge(registry.at(platform));
  AttestationResponse response = answer_challenge(registry, platform, enclave, challenge, base, rng_);
  return verify_response(challenge, response, expected, base);
}

Bytes platform_attest_message(uint64_t epoch) {
  ByteWriter w;
  w.str("TruSDN-platform-attest");
  w.u64(epoch);
  return w.take();
}

PlatformSignatureList publish_platform_list(VerifierContext& vp, const std::string& base_name,
                                            PlatformRegistry& registry,
                                            const std::vector<PlatformId>& platforms,
                                            uint64_t epoch) {
  if (!vp.certificate()) throw UnauthorizedVerifier();
  PlatformSignatureList list;
  list.base_name = base_name;
  list.publisher = *vp.certificate();

  PseudonymBase base = PseudonymBase::named(base_name);
  Bytes message = platform_attest_message(epoch);
  for (PlatformId id : platforms) {
    try {
      LinkableSignature sig =
          platform_attest_sign_direct(registry.at(id), base, message, vp.rng());
      if (!epid_verify(vp.group(), base, message, sig)) continue;  // omit, record failure
      PlatformListEntry entry;
      entry.pseudonym = sig.pseudonym;
      entry.signature = std::move(sig);
      list.entries.push_back(std::move(entry));
    } catch (const Error&) {
      // AttestationFailed: entry omitted, batch continues.
    }
  }
  return list;
}

bool anti_cuckoo_check(VerifierContext& tenant, const PublicKey& root_pk,
                       PlatformRegistry& registry, PlatformId platform,
                       const PlatformSignatureList& list) {
  if (!tenant.certificate() ||
      !validate_certificate_chain(tenant.chain(), root_pk, tenant.now))
    throw UnauthorizedVerifier();

  PseudonymBase base = PseudonymBase::named(list.base_name);
  ByteWriter w;
  w.str("TruSDN-cuckoo-check");
  w.raw(tenant.rng().block32());
  Bytes message = w.take();

  LinkableSignature fresh;
  try {
    fresh = platform_attest_sign(registry, platform, base, message, tenant.rng());
  } catch (const Error&) {
    return false;
  }
  if (!epid_verify(tenant.group(), base, message, fresh)) return false;

  for (const PlatformListEntry& entry : list.entries) {
    bool linked = false;
    try {
      linked = epid_linked(tenant.group(), entry.signature, fresh);
    } catch (const UnverifiedInput&) {
      continue;
    }
    if (linked) return true;
  }
  return false;
}

std::string PlatformSignatureList::to_json() const {
  json j;
  j["base_name"] = base_name;
  j["publisher"] = {
      {"subject", publisher.subject},
      {"issuer", publisher.issuer},
      {"pk", to_hex(publisher.pk)},
      {"valid_from", publisher.valid_from},
      {"valid_to", publisher.valid_to},
      {"signature", to_hex(publisher.signature.bytes)},
  };
  j["entries"] = json::array();
  for (const PlatformListEntry& e : entries) {
    j["entries"].push_back({
        {"pseudonym", to_hex(e.pseudonym)},
        {"proof", to_hex(e.signature.serialize())},
        {"message", to_hex(e.signature.message)},
    });
  }
  return j.dump(2);
}

PlatformSignatureList PlatformSignatureList::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("invalid platform list JSON");
  PlatformSignatureList list;
  try {
    list.base_name = j.at("base_name").get<std::string>();
    const json& pub = j.at("publisher");
    list.publisher.subject = pub.at("subject").get<std::string>();
    list.publisher.issuer = pub.at("issuer").get<std::string>();
    auto pk = from_hex(pub.at("pk").get<std::string>());
    if (!pk || pk->size() != 32) throw ParseError("bad publisher pk");
    std::copy(pk->begin(), pk->end(), list.publisher.pk.begin());
    list.publisher.valid_from = pub.at("valid_from").get<uint64_t>();
    list.publisher.valid_to = pub.at("valid_to").get<uint64_t>();
    auto sig = from_hex(pub.at("signature").get<std::string>());
    if (!sig) throw ParseError("bad publisher signature");
    list.publisher.signature.bytes = *sig;
    for (const json& je : j.at("entries")) {
      PlatformListEntry e;
      auto pseud = from_hex(je.at("pseudonym").get<std::string>());
      auto proof = from_hex(je.at("proof").get<std::string>());
      if (!pseud || pseud->size() != 32 || !proof) throw ParseError("bad list entry");
      std::copy(pseud->begin(), pseud->end(), e.pseudonym.begin());
      ByteReader r(*proof);
      e.signature = LinkableSignature::deserialize(r);
      list.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw ParseError(std::string("platform list: ") + ex.what());
  } catch (const DecodeError& ex) {
    throw ParseError(std::string("platform list: ") + ex.what());
  }
  return list;
}

}  // namespace trusdn
