#include "trusdn/control_plane.hpp"

#include <chrono>

namespace trusdn {

namespace {

Bytes enrollment_aad() {
  ByteWriter w;
  w.str("trusdn-enroll");
  return w.take();
}

uint64_t wall_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Bytes EnrollmentMessage::serialize() const {
  ByteWriter w;
  w.raw(body.serialize());
  w.raw(tag.bytes);
  w.blob(wrapped);
  return w.take();
}

EnrollmentMessage EnrollmentMessage::deserialize(ByteReader& r) {
  EnrollmentMessage m;
  m.body = Ciphertext::deserialize(r);
  m.tag.bytes = r.arr<32>();
  m.wrapped = r.blob();
  return m;
}

EnrollmentMessage build_enrollment_message(const PublicKey& ek_pk,
                                           const SymmetricKey& k_alpha,
                                           const SymmetricKey& k_beta, uint64_t epoch,
                                           Rng& rng) {
  // K' and K'' are locals: gone once the message is built.
  SymmetricKey k_enc = generate_symmetric_key(KeyRole::EphemeralEnc, rng);
  SymmetricKey k_mac = generate_symmetric_key(KeyRole::EphemeralMac, rng);

  ByteWriter plain;
  plain.raw(std::span<const uint8_t>(k_alpha.bytes()));
  plain.raw(std::span<const uint8_t>(k_beta.bytes()));
  plain.u64(epoch);

  EnrollmentMessage m;
  m.body = sym_seal(k_enc, plain.bytes(), enrollment_aad());
  m.tag = mac_tag(k_mac, m.body.serialize());

  ByteWriter keys;
  keys.raw(std::span<const uint8_t>(k_enc.bytes()));
  keys.raw(std::span<const uint8_t>(k_mac.bytes()));
  m.wrapped = hybrid_wrap(ek_pk, keys.bytes());
  return m;
}

std::optional<EnrollmentSecrets> open_enrollment_message(const EnrollmentMessage& msg,
                                                         const KeyPair& ek) {
  auto keys = hybrid_unwrap(ek, msg.wrapped);
  if (!keys || keys->size() != 64) return std::nullopt;
  std::array<uint8_t, 32> enc_raw{}, mac_raw{};
  std::copy(keys->begin(), keys->begin() + 32, enc_raw.begin());
  std::copy(keys->begin() + 32, keys->end(), mac_raw.begin());
  SymmetricKey k_enc(KeyRole::EphemeralEnc, enc_raw);
  SymmetricKey k_mac(KeyRole::EphemeralMac, mac_raw);

  // MAC gate before the body ciphertext is trusted at all.
  if (!mac_check(k_mac, msg.body.serialize(), msg.tag)) return std::nullopt;

  auto plain = sym_open(k_enc, msg.body, enrollment_aad());
  if (!plain) return std::nullopt;
  try {
    ByteReader r(*plain);
    auto alpha_raw = r.arr<32>();
    auto beta_raw = r.arr<32>();
    uint64_t epoch = r.u64();
    if (!r.done()) return std::nullopt;
    return EnrollmentSecrets{SymmetricKey(KeyRole::SessionAlpha, alpha_raw),
                             SymmetricKey(KeyRole::DomainBeta, beta_raw), epoch};
  } catch (const DecodeError&) {
    return std::nullopt;
  }
}

Controller::Controller(PlatformRegistry& registry, uint64_t seed)
    : registry_(registry),
      rng_(seed),
      verifier_(registry.group(), rng_.next_u64()),
      nc_keys_(KeyPair::generate(KeyOwner::Verifier, rng_)) {}

void Controller::enable_cuckoo_defense(const PublicKey& root_pk, PlatformSignatureList list) {
  cuckoo_root_ = root_pk;
  cuckoo_list_ = std::move(list);
}

GlobalView::DomainRecord& Controller::domain_record(DomainId domain) {
  auto it = view_.domains.find(domain);
  if (it == view_.domains.end()) {
    it = view_.domains
             .emplace(domain, GlobalView::DomainRecord{
                                  generate_symmetric_key(KeyRole::DomainBeta, rng_), 1, {}})
             .first;
  }
  return it->second;
}

SwitchId Controller::deploy_and_enroll_switch(PlatformId platform,
                                              std::span<const uint8_t> code,
                                              std::span<const uint8_t> config,
                                              DomainId domain) {
  Platform& host = registry_.at(platform);
  if (cuckoo_list_) {
    if (!anti_cuckoo_check(verifier_, *cuckoo_root_, registry_, platform, *cuckoo_list_)) {
      counters["cuckoo_rejections"]++;
      throw EnrollmentRejected(Verdict::CuckooSuspected);
    }
  }

  EnclaveId enclave = host.create_enclave(EnclaveKind::Switch, code, config, rng_);
  Measurement expected =
      switch_policy ? *switch_policy : measure_enclave(EnclaveKind::Switch, code, config);
  AttestationResult result = verifier_.attest_enclave(
      registry_, platform, enclave, expected, PseudonymBase::random(rng_));
  if (result.verdict != Verdict::Accepted) {
    counters["enrollment_rejections"]++;
    throw EnrollmentRejected(result.verdict);
  }

  GlobalView::DomainRecord& dom = domain_record(domain);
  SwitchId id = next_switch_++;
  SymmetricKey k_alpha = generate_symmetric_key(KeyRole::SessionAlpha, rng_);

  EnrollmentMessage msg =
      build_enrollment_message(*result.enclave_pk, k_alpha, dom.k_beta, dom.epoch, rng_);
  // Enclave-side consumption: EK^sk lives only behind the enclave entry.
  auto secrets = open_enrollment_message(msg, host.enclave_keypair_entry(enclave));
  if (!secrets) throw Error("enrollment message rejected by enclave");

  auto ctx = std::make_shared<SwitchContext>(id, domain, secrets->k_alpha, secrets->k_beta,
                                             secrets->epoch);
  for (SwitchId member : dom.members) {
    ctx->add_peer(member);
    if (auto peer = switch_ctx(member)) peer->add_peer(id);
  }
  host.set_sealed_state_entry(enclave, ctx);

  view_.hosts.insert(platform);
  view_.switches.emplace(
      id, GlobalView::SwitchRecord{platform, enclave, expected, k_alpha, domain});
  dom.members.push_back(id);
  view_.links.emplace_back(NodeId::controller(), NodeId::of_switch(id));
  counters["switches_enrolled"]++;
  return id;
}

CtId Controller::deploy_and_enroll_ct(PlatformId platform, std::span<const uint8_t> code,
                                      std::span<const uint8_t> config, SwitchId attach_to) {
  auto sw = view_.switches.find(attach_to);
  if (sw == view_.switches.end() || sw->second.platform != platform) throw NoSuchSwitch();

  Platform& host = registry_.at(platform);
  if (cuckoo_list_) {
    if (!anti_cuckoo_check(verifier_, *cuckoo_root_, registry_, platform, *cuckoo_list_)) {
      counters["cuckoo_rejections"]++;
      throw EnrollmentRejected(Verdict::CuckooSuspected);
    }
  }

  EnclaveId enclave = host.create_enclave(EnclaveKind::ComputeTask, code, config, rng_);
  Measurement expected =
      ct_policy ? *ct_policy : measure_enclave(EnclaveKind::ComputeTask, code, config);
  AttestationResult result = verifier_.attest_enclave(
      registry_, platform, enclave, expected, PseudonymBase::random(rng_));
  if (result.verdict != Verdict::Accepted) {
    counters["enrollment_rejections"]++;
    throw EnrollmentRejected(result.verdict);
  }

  CtId id = next_ct_++;
  SymmetricKey k_alpha = generate_symmetric_key(KeyRole::SessionAlpha, rng_);
  // CTs get the same enrollment structure; the beta slot is a throwaway
  // since endpoints never touch inter-switch tunnels.
  SymmetricKey unused_beta = generate_symmetric_key(KeyRole::DomainBeta, rng_);
  EnrollmentMessage msg =
      build_enrollment_message(*result.enclave_pk, k_alpha, unused_beta, 0, rng_);
  auto secrets = open_enrollment_message(msg, host.enclave_keypair_entry(enclave));
  if (!secrets) throw Error("enrollment message rejected by enclave");

  auto ctx = std::make_shared<ComputeTask>(id, enclave, attach_to,
                                           host.enclave_keypair_entry(enclave),
                                           secrets->k_alpha, nc_keys_.public_key(),
                                           rng_.next_u64());
  host.set_sealed_state_entry(enclave, ctx);
  if (auto attached = switch_ctx(attach_to)) attached->attach_ct(id);

  view_.compute_tasks.emplace(
      id, GlobalView::CtRecord{platform, enclave, *result.enclave_pk, attach_to});
  view_.links.emplace_back(NodeId::of_switch(attach_to), NodeId::of_ct(id));
  counters["cts_enrolled"]++;
  return id;
}

SymmetricKey Controller::generate_flow_psk(const FlowKey& flow) {
  SymmetricKey psk = generate_symmetric_key(KeyRole::FlowPsk, rng_);
  granted_.emplace(flow.canonical(), psk);
  return psk;
}

OutMsg Controller::sealed_to_switch(SwitchId sw, MsgType type,
                                    std::span<const uint8_t> body) {
  Ciphertext sealed = sym_seal(view_.switches.at(sw).k_alpha, body, control_aad(type, sw));
  return {Segment::Alpha, NodeId::of_switch(sw), frame_encode(type, sealed.serialize())};
}

void Controller::install_rules_for_flow(const FlowKey& flow,
                                        const GlobalView::CtRecord& src,
                                        const GlobalView::CtRecord& dst,
                                        std::vector<OutMsg>& out) {
  auto local = [&](const FlowKey& match, CtId ct) {
    FlowRule r;
    r.match = match;
    r.action = ActionKind::ForwardLocal;
    r.arg = ct;
    r.priority = 100;
    r.id = next_rule_id_++;
    return r;
  };
  auto tunnel = [&](const FlowKey& match, SwitchId peer) {
    FlowRule r;
    r.match = match;
    r.action = ActionKind::ForwardTunnel;
    r.arg = peer;
    r.priority = 100;
    r.id = next_rule_id_++;
    return r;
  };
  auto install = [&](SwitchId sw, const std::vector<FlowRule>& rules) {
    ByteWriter body;
    body.u32(static_cast<uint32_t>(rules.size()));
    for (const auto& r : rules) r.write(body);
    out.push_back(sealed_to_switch(sw, MsgType::RuleInstall, body.bytes()));
  };

  FlowKey fwd = flow;            // src CT -> dst CT direction
  FlowKey rev = flow.reversed();
  if (src.attached == dst.attached) {
    install(src.attached, {local(fwd, flow.dst), local(rev, flow.src)});
  } else {
    // both hosts' switches learn the flow
    install(src.attached, {tunnel(fwd, dst.attached), local(rev, flow.src)});
    install(dst.attached, {local(fwd, flow.dst), tunnel(rev, src.attached)});
  }
}

std::vector<OutMsg> Controller::handle_packet_in(SwitchId from_switch,
                                                 std::span<const uint8_t> payload) {
  std::vector<OutMsg> out;
  auto sw = view_.switches.find(from_switch);
  if (sw == view_.switches.end()) {
    counters["packet_in_unknown_switch"]++;
    return out;
  }

  std::optional<Bytes> plain;
  try {
    ByteReader r(payload);
    uint32_t claimed = r.u32();
    Ciphertext sealed = Ciphertext::deserialize(r);
    if (claimed == from_switch)
      plain = sym_open(sw->second.k_alpha, sealed, control_aad(MsgType::PacketIn, from_switch));
  } catch (const DecodeError&) {
  }
  if (!plain) {
    counters["packet_in_auth_failure"]++;
    return out;
  }

  Packet pkt;
  try {
    ByteReader r(*plain);
    pkt = Packet::deserialize(r);
  } catch (const DecodeError&) {
    counters["packet_in_auth_failure"]++;
    return out;
  }
  counters["packet_in_total"]++;

  FlowKey canonical = pkt.flow.canonical();
  if (granted_.count(canonical)) {
    counters["packet_in_suppressed"]++;  // steps 2 and 3 ignored for known flows
    return out;
  }

  auto src = view_.compute_tasks.find(pkt.flow.src);
  auto dst = view_.compute_tasks.find(pkt.flow.dst);
  if (src == view_.compute_tasks.end() || dst == view_.compute_tasks.end()) {
    counters["unknown_endpoint"]++;
    FlowRule drop_fwd;
    drop_fwd.match = pkt.flow;
    drop_fwd.action = ActionKind::Drop;
    drop_fwd.priority = 100;
    drop_fwd.id = next_rule_id_++;
    FlowRule drop_rev = drop_fwd;
    drop_rev.match = pkt.flow.reversed();
    drop_rev.id = next_rule_id_++;
    ByteWriter body;
    body.u32(2);
    drop_fwd.write(body);
    drop_rev.write(body);
    out.push_back(sealed_to_switch(from_switch, MsgType::RuleInstall, body.bytes()));
    return out;
  }

  if (psk_enabled) {
    uint64_t t0 = wall_ns();
    SymmetricKey psk = generate_flow_psk(pkt.flow);
    uint64_t t1 = wall_ns();

    PskGrant grant;
    grant.flow = canonical;
    grant.recipient_i = pkt.flow.src;
    grant.recipient_j = pkt.flow.dst;
    grant.wrapped_i = hybrid_wrap(src->second.ck_pk, psk.bytes());
    grant.wrapped_j = hybrid_wrap(dst->second.ck_pk, psk.bytes());
    grant.nc_signature = sign(nc_keys_, grant.signed_body());
    Bytes wire = frame_encode(MsgType::PskGrantMsg, grant.serialize());
    out.push_back({Segment::Alpha, NodeId::of_ct(pkt.flow.src), wire});
    out.push_back({Segment::Alpha, NodeId::of_ct(pkt.flow.dst), wire});
    uint64_t t2 = wall_ns();

    last_keygen_ns = t1 - t0;
    last_distribution_ns = t2 - t1;
    counters["grants_issued"]++;
  } else {
    // baseline control path: track the flow so duplicates stay suppressed
    granted_.emplace(canonical, generate_symmetric_key(KeyRole::FlowPsk, rng_));
  }

  install_rules_for_flow(pkt.flow, src->second, dst->second, out);

  ByteWriter release;
  pkt.flow.write(release);
  out.push_back(sealed_to_switch(from_switch, MsgType::PacketRelease, release.bytes()));
  return out;
}

uint64_t Controller::rotate_domain_key(DomainId domain, std::vector<OutMsg>& out) {
  GlobalView::DomainRecord& dom = view_.domains.at(domain);
  dom.k_beta = generate_symmetric_key(KeyRole::DomainBeta, rng_);
  dom.epoch += 1;
  for (SwitchId member : dom.members) {
    ByteWriter body;
    body.u64(dom.epoch);
    body.raw(std::span<const uint8_t>(dom.k_beta.bytes()));
    out.push_back(sealed_to_switch(member, MsgType::Rotate, body.bytes()));
  }
  counters["rotations"]++;
  return dom.epoch;
}

std::shared_ptr<SwitchContext> Controller::switch_ctx(SwitchId id) {
  auto it = view_.switches.find(id);
  if (it == view_.switches.end()) return nullptr;
  return std::static_pointer_cast<SwitchContext>(
      registry_.at(it->second.platform).sealed_state_entry(it->second.enclave));
}

std::shared_ptr<ComputeTask> Controller::ct_ctx(CtId id) {
  auto it = view_.compute_tasks.find(id);
  if (it == view_.compute_tasks.end()) return nullptr;
  return std::static_pointer_cast<ComputeTask>(
      registry_.at(it->second.platform).sealed_state_entry(it->second.enclave));
}

}  // namespace trusdn
