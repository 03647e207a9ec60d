#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <sodium.h>

#include "trusdn/attestation.hpp"

using namespace trusdn;

namespace {

const GroupParams kGroup{"trusdn-deployment"};

struct Fixture {
  Rng rng{1000};
  PlatformRegistry registry{kGroup};
  VerifierContext verifier{kGroup, 2000};
  Bytes code = to_bytes("switch-code-v1");
  Bytes config = to_bytes("cfg");
  PseudonymBase base = PseudonymBase::named("NC");

  Measurement expected() const { return measure_enclave(EnclaveKind::Switch, code, config); }
};

GroupElement exp_oracle(const GroupElement& base, const GroupScalar& f) {
  GroupElement out{};
  REQUIRE(crypto_scalarmult_ristretto255(out.data(), f.data(), base.data()) == 0);
  return out;
}

}  // namespace

TEST_CASE("honest platform with correct measurement is accepted") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, fx.code, fx.config, fx.rng);
  AttestationResult res =
      fx.verifier.attest_enclave(fx.registry, p.id(), e, fx.expected(), fx.base);
  CHECK(res.verdict == Verdict::Accepted);
  REQUIRE(res.enclave_pk.has_value());
  CHECK(*res.enclave_pk == p.enclave_pk(e));
}

TEST_CASE("patched code yields MeasurementMismatch") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  Bytes patched = fx.code;
  patched[3] ^= 0x01;
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, patched, fx.config, fx.rng);
  AttestationResult res =
      fx.verifier.attest_enclave(fx.registry, p.id(), e, fx.expected(), fx.base);
  CHECK(res.verdict == Verdict::MeasurementMismatch);
  CHECK_FALSE(res.enclave_pk.has_value());
}

TEST_CASE("replayed quote from an earlier session is stale") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, fx.code, fx.config, fx.rng);

  Challenge first = fx.verifier.issue_challenge(p);
  AttestationResponse captured =
      answer_challenge(fx.registry, p.id(), e, first, fx.base, fx.rng);
  CHECK(fx.verifier.verify_response(first, captured, fx.expected(), fx.base).verdict ==
        Verdict::Accepted);

  // adversary replays the captured response against a new session
  Challenge second = fx.verifier.issue_challenge(p);
  CHECK(fx.verifier.verify_response(second, captured, fx.expected(), fx.base).verdict ==
        Verdict::StaleNonce);

  // and against the consumed original challenge
  CHECK(fx.verifier.verify_response(first, captured, fx.expected(), fx.base).verdict ==
        Verdict::StaleNonce);
}

TEST_CASE("expired freshness window is stale") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, fx.code, fx.config, fx.rng);
  Challenge ch = fx.verifier.issue_challenge(p);
  AttestationResponse resp = answer_challenge(fx.registry, p.id(), e, ch, fx.base, fx.rng);
  fx.verifier.now = ch.issued_at + 65;  // window is 64 ticks
  CHECK(fx.verifier.verify_response(ch, resp, fx.expected(), fx.base).verdict ==
        Verdict::StaleNonce);
}

TEST_CASE("single-field corruption always yields a non-Accepted verdict") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, fx.code, fx.config, fx.rng);

  for (int field = 0; field < 4; ++field) {
    Challenge ch = fx.verifier.issue_challenge(p);
    AttestationResponse resp = answer_challenge(fx.registry, p.id(), e, ch, fx.base, fx.rng);
    switch (field) {
      case 0: resp.quote.report.reporter_measurement.digest[0] ^= 0x01; break;
      case 1: resp.quote.challenge_nonce[0] ^= 0x01; break;
      case 2: resp.quote.report.user_data[0] ^= 0x01; break;
      case 3: resp.quote.signature.response[0] ^= 0x01; break;
    }
    AttestationResult res = fx.verifier.verify_response(ch, resp, fx.expected(), fx.base);
    CHECK(res.verdict != Verdict::Accepted);
  }
}

TEST_CASE("user data must bind the submitted public key") {
  Fixture fx;
  Platform& p = fx.registry.create(fx.rng);
  EnclaveId e = p.create_enclave(EnclaveKind::Switch, fx.code, fx.config, fx.rng);
  Challenge ch = fx.verifier.issue_challenge(p);
  AttestationResponse resp = answer_challenge(fx.registry, p.id(), e, ch, fx.base, fx.rng);
  resp.enclave_pk[0] ^= 0x01;  // adversary swaps the key in transit
  CHECK(fx.verifier.verify_response(ch, resp, fx.expected(), fx.base).verdict ==
        Verdict::UserDataMismatch);
}

TEST_CASE("certificate issuance and chain validation") {
  Rng rng(1);
  AuthorityContext authority(rng);
  KeyPair vp_keys = KeyPair::generate(KeyOwner::Verifier, rng);
  KeyPair tenant_keys = KeyPair::generate(KeyOwner::Verifier, rng);

  VerifierCertificate vp_cert = authority.issue("V_P", vp_keys.public_key(), 0, 1000);
  CHECK(validate_certificate_chain({vp_cert}, authority.root_pk(), 10));

  // tenant cert issued by V_P chains to root
  VerifierCertificate tenant_cert = issue_verifier_certificate(
      vp_keys, "V_P", "tenant-1", tenant_keys.public_key(), 0, 1000);
  CHECK(validate_certificate_chain({tenant_cert, vp_cert}, authority.root_pk(), 10));

  // mutated body fails
  VerifierCertificate bad = vp_cert;
  bad.subject = "V_Q";
  CHECK_FALSE(validate_certificate_chain({bad}, authority.root_pk(), 10));

  // outside validity window fails
  CHECK_FALSE(validate_certificate_chain({vp_cert}, authority.root_pk(), 2000));
}

namespace {

struct ListFixture {
  Rng rng{77};
  PlatformRegistry registry{kGroup};
  AuthorityContext authority{rng};
  KeyPair vp_keys = KeyPair::generate(KeyOwner::Verifier, rng);
  VerifierContext vp{kGroup, 500};
  std::vector<PlatformId> honest;

  ListFixture(int n_platforms = 3) {
    VerifierCertificate cert = authority.issue("V_P", vp_keys.public_key(), 0, 1u << 20);
    vp.set_certificate(cert, {cert});
    for (int i = 0; i < n_platforms; ++i) honest.push_back(registry.create(rng).id());
  }

  VerifierContext make_tenant(const std::string& name) {
    VerifierContext tenant(kGroup, 900);
    KeyPair keys = KeyPair::generate(KeyOwner::Verifier, rng);
    VerifierCertificate cert =
        issue_verifier_certificate(vp_keys, "V_P", name, keys.public_key(), 0, 1u << 20);
    tenant.set_certificate(cert, {cert, *vp.certificate()});
    return tenant;
  }
};

}  // namespace

TEST_CASE("published list has one verifying entry per honest platform") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  CHECK(list.entries.size() == 3);
  PseudonymBase base = PseudonymBase::named("B_N_P");
  for (const auto& e : list.entries) {
    CHECK(epid_verify(kGroup, base, e.signature.message, e.signature));
    CHECK(e.pseudonym == e.signature.pseudonym);
  }
  // entries from distinct platforms are pairwise unlinked
  for (size_t i = 0; i < list.entries.size(); ++i)
    for (size_t j = i + 1; j < list.entries.size(); ++j)
      CHECK_FALSE(epid_linked(kGroup, list.entries[i].signature, list.entries[j].signature));
}

TEST_CASE("fresh signature from a listed platform links to its entry") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  PseudonymBase base = PseudonymBase::named("B_N_P");
  Platform& p = fx.registry.at(fx.honest[0]);
  LinkableSignature fresh = platform_attest_sign_direct(p, base, to_bytes("fresh"), fx.rng);
  CHECK(epid_linked(kGroup, list.entries[0].signature, fresh));
  CHECK(fresh.pseudonym == exp_oracle(base.point, p.member_secret_entry().f));
}

TEST_CASE("anti-cuckoo: honest listed platform passes") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  VerifierContext tenant = fx.make_tenant("tenant-1");
  CHECK(anti_cuckoo_check(tenant, fx.authority.root_pk(), fx.registry, fx.honest[0], list));
}

TEST_CASE("anti-cuckoo: redirect to off-list platform fails") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  Platform& malicious = fx.registry.create(fx.rng);  // not in the list
  fx.registry.at(fx.honest[0]).redirect_target = malicious.id();

  VerifierContext tenant = fx.make_tenant("tenant-1");
  CHECK_FALSE(
      anti_cuckoo_check(tenant, fx.authority.root_pk(), fx.registry, fx.honest[0], list));
}

TEST_CASE("anti-cuckoo: honest platform missing from the list fails") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  Platform& newcomer = fx.registry.create(fx.rng);
  VerifierContext tenant = fx.make_tenant("tenant-1");
  CHECK_FALSE(
      anti_cuckoo_check(tenant, fx.authority.root_pk(), fx.registry, newcomer.id(), list));
}

TEST_CASE("anti-cuckoo requires an authorized certificate") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  VerifierContext unauthorized(kGroup, 901);
  CHECK_THROWS_AS(
      anti_cuckoo_check(unauthorized, fx.authority.root_pk(), fx.registry, fx.honest[0], list),
      UnauthorizedVerifier);
}

TEST_CASE("unlinkability across verifier names at pseudonym level") {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    GroupMemberSecret member = GroupMemberSecret::generate(kGroup, rng);
    LinkableSignature a = epid_sign(member, PseudonymBase::named("A"), to_bytes("m"), rng);
    LinkableSignature b = epid_sign(member, PseudonymBase::named("B"), to_bytes("m"), rng);
    CHECK(a.pseudonym != b.pseudonym);
  }
}

TEST_CASE("platform list JSON round trip") {
  ListFixture fx;
  PlatformSignatureList list =
      publish_platform_list(fx.vp, "B_N_P", fx.registry, fx.honest, 1);
  std::string text = list.to_json();
  PlatformSignatureList back = PlatformSignatureList::from_json(text);
  CHECK(back.base_name == list.base_name);
  CHECK(back.entries.size() == list.entries.size());
  PseudonymBase base = PseudonymBase::named(back.base_name);
  for (size_t i = 0; i < back.entries.size(); ++i) {
    CHECK(back.entries[i].pseudonym == list.entries[i].pseudonym);
    CHECK(epid_verify(kGroup, base, back.entries[i].signature.message,
                      back.entries[i].signature));
  }
  CHECK_THROWS_AS(PlatformSignatureList::from_json("not json"), ParseError);
}
