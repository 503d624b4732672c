#pragma once

#include <catfl/bytes.hpp>
#include <catfl/curve.hpp>
#include <catfl/hashing.hpp>
#include <catfl/rng.hpp>
#include <catfl/sha256.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace catfl::clpa {

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed-width real identity: UTF-8 name, zero padded to 16 bytes.
struct RealIdentity {
    Bits128 bits{};

    static RealIdentity from_name(std::string_view name) {
        if (name.size() > 16) throw std::invalid_argument("identity name longer than 16 bytes");
        RealIdentity rid;
        std::copy(name.begin(), name.end(), rid.bits.begin());
        return rid;
    }

    std::string name() const {
        auto end = bits.size();
        while (end > 0 && bits[end - 1] == 0) --end;
        return std::string(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(end));
    }

    std::string hex() const { return to_hex(bits); }

    bool operator==(const RealIdentity&) const = default;
};

/// Anonymized identity: blinding point r*P, the masked identity bits, and
/// the issuance timestamp.
struct Pseudonym {
    GroupElement point;
    Bits128 masked_id{};
    std::uint64_t issued_at = 0;

    bool operator==(const Pseudonym&) const = default;
};

struct PublicKey {
    GroupElement user_key;        // X = mu * P, chosen by the holder
    GroupElement kgc_commitment;  // U = k * P, chosen by the KGC

    bool operator==(const PublicKey&) const = default;
};

/// KGC-issued half of a key: secret = k + tag * kgc_master (mod q).
struct PartialSecretKey {
    Scalar secret;
    GroupElement commitment;
};

struct FullKeyPair {
    Scalar secret_value;    // self-chosen, unknown to the KGC
    Scalar partial_secret;  // KGC-issued
    PublicKey pk;
    Scalar key_tag;  // H1(AID, U, kgc_key), cached at extraction
};

/// The broadcast tuple. `response`/`commitment` form the signature proper.
struct SignedEnvelope {
    Bytes payload;
    Pseudonym aid;
    Scalar key_tag;
    PublicKey pk;
    Scalar response;
    GroupElement commitment;
    std::uint64_t sent_at = 0;

    bool operator==(const SignedEnvelope&) const = default;
};

struct SystemParams {
    Curve curve;
    GroupElement tra_key;  // tracing authority public key
    GroupElement kgc_key;  // key generation center public key
    std::uint64_t freshness_window = 300;      // max age of an envelope, seconds
    std::uint64_t pseudonym_lifetime = 86400;  // max age of a pseudonym, seconds
    FixedBaseTable kgc_tbl;                    // comb table for kgc_key
};

inline SystemParams make_params(Curve curve, GroupElement tra_key, GroupElement kgc_key,
                                std::uint64_t freshness_window = 300,
                                std::uint64_t pseudonym_lifetime = 86400) {
    curve.require_valid(tra_key);
    curve.require_valid(kgc_key);
    if (tra_key.inf || kgc_key.inf) throw ProtocolError("authority keys must be non-identity");
    SystemParams p{std::move(curve), std::move(tra_key), std::move(kgc_key), freshness_window,
                   pseudonym_lifetime, {}};
    p.kgc_tbl = p.curve.make_table(p.kgc_key);
    return p;
}

struct IssueRecord {
    RealIdentity rid;
    std::uint64_t issued_at = 0;
};

struct TraState {
    Scalar master;  // tra_key = master * P
    std::set<Bits128> roster;
    std::map<Bytes, IssueRecord> issued;  // keyed by canonical pseudonym bytes

    void register_identity(const RealIdentity& rid) { roster.insert(rid.bits); }
    bool registered(const RealIdentity& rid) const { return roster.contains(rid.bits); }
};

struct KgcState {
    Scalar master;  // kgc_key = master * P
    std::set<Bytes> known_aids;

    void learn_issued(Bytes aid_key) { known_aids.insert(std::move(aid_key)); }
    bool knows(const Bytes& aid_key) const { return known_aids.contains(aid_key); }
};

struct SetupResult {
    SystemParams params;
    TraState tra;
    KgcState kgc;
};

inline SetupResult setup(const Curve& curve, SeededRng& rng) {
    TraState tra;
    KgcState kgc;
    tra.master = curve.random_scalar(rng);
    kgc.master = curve.random_scalar(rng);
    auto params =
        make_params(curve, curve.mul_base(tra.master), curve.mul_base(kgc.master));
    return SetupResult{std::move(params), std::move(tra), std::move(kgc)};
}

// -- canonical byte forms used inside hashes and on the wire --

/// Pseudonym as an atom: element encoding || masked_id || 8-byte issue time.
inline Bytes aid_bytes(const Curve& curve, const Pseudonym& aid) {
    Bytes out = curve.encode_element(aid.point);
    append(out, aid.masked_id);
    append_u64be(out, aid.issued_at);
    return out;
}

/// Public key as an atom: user key encoding || KGC commitment encoding.
inline Bytes pk_bytes(const Curve& curve, const PublicKey& pk) {
    Bytes out = curve.encode_element(pk.user_key);
    append(out, curve.encode_element(pk.kgc_commitment));
    return out;
}

namespace detail {

/// H0 input: (master * AID1, tra_key, T_i), each field length-prefixed.
inline Bytes mask_material(const SystemParams& params, const GroupElement& shared,
                           std::uint64_t issued_at) {
    Bytes out;
    append_framed(out, params.curve.encode_element(shared));
    append_framed(out, params.curve.encode_element(params.tra_key));
    append_framed(out, u64be(issued_at));
    return out;
}

/// H1 input: (AID, U, kgc_key).
inline Bytes key_tag_material(const SystemParams& params, const Pseudonym& aid,
                              const GroupElement& commitment) {
    Bytes out;
    append_framed(out, aid_bytes(params.curve, aid));
    append_framed(out, params.curve.encode_element(commitment));
    append_framed(out, params.curve.encode_element(params.kgc_key));
    return out;
}

/// H2 input: (m, AID, PK, A, kgc_key, t).
inline Bytes challenge1_material(const SystemParams& params, std::span<const std::uint8_t> payload,
                                 const Pseudonym& aid, const PublicKey& pk,
                                 const GroupElement& commitment, std::uint64_t sent_at) {
    Bytes out;
    append_framed(out, payload);
    append_framed(out, aid_bytes(params.curve, aid));
    append_framed(out, pk_bytes(params.curve, pk));
    append_framed(out, params.curve.encode_element(commitment));
    append_framed(out, params.curve.encode_element(params.kgc_key));
    append_framed(out, u64be(sent_at));
    return out;
}

/// H3 input: (m, AID, PK, A, kgc_key, h1).
inline Bytes challenge2_material(const SystemParams& params, std::span<const std::uint8_t> payload,
                                 const Pseudonym& aid, const PublicKey& pk,
                                 const GroupElement& commitment, const Scalar& challenge1) {
    Bytes out;
    append_framed(out, payload);
    append_framed(out, aid_bytes(params.curve, aid));
    append_framed(out, pk_bytes(params.curve, pk));
    append_framed(out, params.curve.encode_element(commitment));
    append_framed(out, params.curve.encode_element(params.kgc_key));
    append_framed(out, params.curve.encode_scalar(challenge1));
    return out;
}

}  // namespace detail

inline Scalar compute_key_tag(const SystemParams& params, const Pseudonym& aid,
                              const GroupElement& commitment) {
    return hash_to_scalar(params.curve, "H1:", detail::key_tag_material(params, aid, commitment));
}

// -- protocol operations --

struct PseudonymRequest {
    Scalar secret;       // r, kept by the requester
    GroupElement point;  // r * P, sent to the TRA
};

inline PseudonymRequest request_pseudonym(const SystemParams& params, SeededRng& rng) {
    Scalar r = params.curve.random_scalar(rng);
    return PseudonymRequest{r, params.curve.mul_base(r)};
}

/// TRA step: masks the identity under the issue-time hash. Rejects requests
/// for identities missing from the roster and malformed blinding points.
inline std::optional<Pseudonym> issue_pseudonym(TraState& tra, const SystemParams& params,
                                                const RealIdentity& rid, const GroupElement& point,
                                                std::uint64_t now) {
    if (point.inf || !params.curve.on_curve(point)) return std::nullopt;
    if (!tra.registered(rid)) return std::nullopt;
    GroupElement shared = params.curve.mul(tra.master, point);
    Bits128 mask = hash_to_bits("H0:", detail::mask_material(params, shared, now));
    Pseudonym aid{point, xor_bits(rid.bits, mask), now};
    tra.issued.insert_or_assign(aid_bytes(params.curve, aid), IssueRecord{rid, now});
    return aid;
}

/// TRA-only de-anonymization. Returns the identity when the unmasked bits
/// hit the roster; anything else is untraceable.
inline std::optional<RealIdentity> trace(const TraState& tra, const SystemParams& params,
                                         const Pseudonym& aid) {
    if (aid.point.inf || !params.curve.on_curve(aid.point)) return std::nullopt;
    GroupElement shared = params.curve.mul(tra.master, aid.point);
    Bits128 mask = hash_to_bits("H0:", detail::mask_material(params, shared, aid.issued_at));
    RealIdentity rid{xor_bits(aid.masked_id, mask)};
    if (!tra.registered(rid)) return std::nullopt;
    return rid;
}

/// KGC step: partial key for an issued pseudonym. The KGC only serves
/// pseudonyms on the TRA's issuance list.
inline std::optional<PartialSecretKey> issue_psk(const KgcState& kgc, const SystemParams& params,
                                                 const Pseudonym& aid, SeededRng& rng) {
    if (!kgc.knows(aid_bytes(params.curve, aid))) return std::nullopt;
    Scalar nonce = params.curve.random_scalar(rng);
    GroupElement commitment = params.curve.mul_base(nonce);
    Scalar tag = compute_key_tag(params, aid, commitment);
    Scalar secret = params.curve.s_add(nonce, params.curve.s_mul(tag, kgc.master));
    return PartialSecretKey{secret, commitment};
}

/// Holder step: checks secret*P = U + tag*kgc_key, then adds the self-chosen
/// secret value. Returns nothing when the partial key fails the check.
inline std::optional<FullKeyPair> extract_usk(const SystemParams& params, const Pseudonym& aid,
                                              const PartialSecretKey& psk, SeededRng& rng) {
    const Curve& c = params.curve;
    if (!c.on_curve(psk.commitment) || !c.scalar_in_range(psk.secret)) return std::nullopt;
    Scalar tag = compute_key_tag(params, aid, psk.commitment);
    GroupElement expected = c.add(psk.commitment, c.mul_table(tag, params.kgc_tbl));
    if (c.mul_base(psk.secret) != expected) return std::nullopt;
    Scalar secret_value = c.random_scalar(rng);
    PublicKey pk{c.mul_base(secret_value), psk.commitment};
    return FullKeyPair{secret_value, psk.secret, std::move(pk), tag};
}

inline SignedEnvelope sign(const SystemParams& params, const Pseudonym& aid, const FullKeyPair& kp,
                           std::span<const std::uint8_t> payload, std::uint64_t now,
                           SeededRng& rng) {
    const Curve& c = params.curve;
    Scalar nonce = c.random_scalar(rng);
    GroupElement commitment = c.mul_base(nonce);
    Scalar c1 = hash_to_scalar(
        c, "H2:", detail::challenge1_material(params, payload, aid, kp.pk, commitment, now));
    Scalar c2 = hash_to_scalar(
        c, "H3:", detail::challenge2_material(params, payload, aid, kp.pk, commitment, c1));
    // response = nonce - c1*secret_value - c2*partial_secret (mod q)
    Scalar response =
        c.s_sub(nonce, c.s_add(c.s_mul(c1, kp.secret_value), c.s_mul(c2, kp.partial_secret)));
    return SignedEnvelope{Bytes(payload.begin(), payload.end()),
                          aid,
                          kp.key_tag,
                          kp.pk,
                          response,
                          commitment,
                          now};
}

enum class Verdict {
    accept,
    reject_stale,
    reject_theta,
    reject_equation,
    reject_malformed,
    reject_replay,
};

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::accept: return "accept";
        case Verdict::reject_stale: return "stale";
        case Verdict::reject_theta: return "theta-mismatch";
        case Verdict::reject_equation: return "equation-failure";
        case Verdict::reject_malformed: return "malformed";
        case Verdict::reject_replay: return "replay";
    }
    return "unknown";
}

/// Duplicate-suppression window: remembers (AID, t, digest(m)) for accepted
/// envelopes so that exact duplicates rejected even while still fresh.
class ReplayCache {
  public:
    bool contains(const std::string& key) const { return seen_.contains(key); }
    void remember(std::string key, std::uint64_t sent_at) {
        seen_.insert_or_assign(std::move(key), sent_at);
    }
    void prune(std::uint64_t now, std::uint64_t window) {
        for (auto it = seen_.begin(); it != seen_.end();) {
            if (it->second + window < now) {
                it = seen_.erase(it);
            } else {
                ++it;
            }
        }
    }
    std::size_t size() const { return seen_.size(); }

  private:
    std::map<std::string, std::uint64_t> seen_;
};

inline std::string replay_key(const SystemParams& params, const SignedEnvelope& env) {
    Bytes key = aid_bytes(params.curve, env.aid);
    append_u64be(key, env.sent_at);
    Digest d = sha256(env.payload);
    append(key, d);
    return std::string(key.begin(), key.end());
}

/// Four checks in order: freshness of both timestamps, key-tag consistency,
/// duplicate suppression, then the signature equation
///   A == response*P + c1*X + c2*U + (c2*key_tag)*kgc_key.
inline Verdict verify(const SystemParams& params, const SignedEnvelope& env, std::uint64_t now,
                      ReplayCache* replay = nullptr) {
    const Curve& c = params.curve;
    if (env.aid.point.inf || !c.on_curve(env.aid.point)) return Verdict::reject_malformed;
    if (env.pk.user_key.inf || !c.on_curve(env.pk.user_key)) return Verdict::reject_malformed;
    if (env.pk.kgc_commitment.inf || !c.on_curve(env.pk.kgc_commitment))
        return Verdict::reject_malformed;
    if (env.commitment.inf || !c.on_curve(env.commitment)) return Verdict::reject_malformed;
    if (!c.scalar_in_range(env.response)) return Verdict::reject_malformed;
    if (!c.scalar_in_range(env.key_tag, /*allow_zero=*/false)) return Verdict::reject_malformed;

    if (env.sent_at > now || now - env.sent_at > params.freshness_window)
        return Verdict::reject_stale;
    if (env.aid.issued_at > now || now - env.aid.issued_at > params.pseudonym_lifetime)
        return Verdict::reject_stale;

    if (compute_key_tag(params, env.aid, env.pk.kgc_commitment) != env.key_tag)
        return Verdict::reject_theta;

    std::string key;
    if (replay != nullptr) {
        key = replay_key(params, env);
        replay->prune(now, params.freshness_window);
        if (replay->contains(key)) return Verdict::reject_replay;
    }

    Scalar c1 = hash_to_scalar(c, "H2:", detail::challenge1_material(params, env.payload, env.aid,
                                                                     env.pk, env.commitment,
                                                                     env.sent_at));
    Scalar c2 = hash_to_scalar(c, "H3:", detail::challenge2_material(params, env.payload, env.aid,
                                                                     env.pk, env.commitment, c1));
    GroupElement expect =
        c.add(c.mul_base(env.response),
              c.add(c.mul2(c1, env.pk.user_key, c2, env.pk.kgc_commitment),
                    c.mul_table(c.s_mul(c2, env.key_tag), params.kgc_tbl)));
    if (expect != env.commitment) return Verdict::reject_equation;

    if (replay != nullptr) replay->remember(std::move(key), env.sent_at);
    return Verdict::accept;
}

/// Issues `count` fresh (pseudonym, partial key) pairs for one identity and
/// records each on the KGC's issuance list.
inline std::vector<std::pair<Pseudonym, PartialSecretKey>> replenish_pseudonyms(
    TraState& tra, KgcState& kgc, const SystemParams& params, const RealIdentity& rid,
    std::size_t count, std::uint64_t now, SeededRng& rng) {
    if (!tra.registered(rid)) throw ProtocolError("identity not registered with the TRA");
    std::vector<std::pair<Pseudonym, PartialSecretKey>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        PseudonymRequest req = request_pseudonym(params, rng);
        auto aid = issue_pseudonym(tra, params, rid, req.point, now);
        if (!aid) throw ProtocolError("pseudonym issuance failed");
        kgc.learn_issued(aid_bytes(params.curve, *aid));
        auto psk = issue_psk(kgc, params, *aid, rng);
        if (!psk) throw ProtocolError("partial key issuance failed");
        out.emplace_back(std::move(*aid), std::move(*psk));
    }
    return out;
}

}  // namespace catfl::clpa
