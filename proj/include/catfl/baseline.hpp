#pragma once

#include <catfl/bytes.hpp>
#include <catfl/curve.hpp>
#include <catfl/hashing.hpp>
#include <catfl/rng.hpp>

#include <cstdint>
#include <optional>
#include <string_view>

namespace catfl::pki {

/// Schnorr signature over the protocol curve: R = k*P, s = k + e*d where
/// e = H(tag, R || Q || m).
struct Signature {
    GroupElement commitment;  // R
    Scalar response;          // s

    bool operator==(const Signature&) const = default;
};

struct KeyPair {
    Scalar secret;
    GroupElement pk;
};

inline KeyPair keygen(const Curve& curve, SeededRng& rng) {
    Scalar d = curve.random_scalar(rng);
    return KeyPair{d, curve.mul_base(d)};
}

namespace detail {
inline Bytes challenge_material(const Curve& curve, const GroupElement& commitment,
                                const GroupElement& pk, std::span<const std::uint8_t> msg) {
    Bytes out;
    append_framed(out, curve.encode_element(commitment));
    append_framed(out, curve.encode_element(pk));
    append_framed(out, msg);
    return out;
}
}  // namespace detail

inline Signature schnorr_sign(const Curve& curve, std::string_view tag, const KeyPair& kp,
                              std::span<const std::uint8_t> msg, SeededRng& rng) {
    Scalar nonce = curve.random_scalar(rng);
    GroupElement commitment = curve.mul_base(nonce);
    Scalar e = hash_to_scalar(curve, tag, detail::challenge_material(curve, commitment, kp.pk, msg));
    Scalar response = curve.s_add(nonce, curve.s_mul(e, kp.secret));
    return Signature{commitment, response};
}

/// s*P == R + e*Q.
inline bool schnorr_verify(const Curve& curve, std::string_view tag, const GroupElement& pk,
                           std::span<const std::uint8_t> msg, const Signature& sig) {
    if (pk.inf || !curve.on_curve(pk)) return false;
    if (sig.commitment.inf || !curve.on_curve(sig.commitment)) return false;
    if (!curve.scalar_in_range(sig.response)) return false;
    Scalar e = hash_to_scalar(curve, tag, detail::challenge_material(curve, sig.commitment, pk, msg));
    GroupElement lhs = curve.mul_base(sig.response);
    GroupElement rhs = curve.add(sig.commitment, curve.mul(e, pk));
    return lhs == rhs;
}

/// Minimal certificate for the benchmark CA: the issuer field carries the
/// CA's public key encoding and verifiers match it against their configured
/// trust anchor.
struct Certificate {
    Bits128 subject_id{};
    GroupElement subject_pk;
    GroupElement issuer_pk;
    std::uint64_t not_before = 0;
    std::uint64_t not_after = 0;
    Signature issuer_sig;

    bool operator==(const Certificate&) const = default;
};

struct CaState {
    KeyPair key;
};

inline CaState make_ca(const Curve& curve, SeededRng& rng) { return CaState{keygen(curve, rng)}; }

/// The issuer-signed portion: everything but the signature itself.
inline Bytes cert_body_bytes(const Curve& curve, const Certificate& cert) {
    Bytes out;
    append_framed(out, cert.subject_id);
    append_framed(out, curve.encode_element(cert.subject_pk));
    append_framed(out, curve.encode_element(cert.issuer_pk));
    append_framed(out, u64be(cert.not_before));
    append_framed(out, u64be(cert.not_after));
    return out;
}

inline Certificate issue_certificate(const Curve& curve, const CaState& ca,
                                     const Bits128& subject_id, const GroupElement& subject_pk,
                                     std::uint64_t not_before, std::uint64_t not_after,
                                     SeededRng& rng) {
    Certificate cert{subject_id, subject_pk, ca.key.pk, not_before, not_after, {}};
    cert.issuer_sig = schnorr_sign(curve, "BC:", ca.key, cert_body_bytes(curve, cert), rng);
    return cert;
}

/// One authenticated message: payload, timestamp, message signature, and the
/// sender's certificate attached in full.
struct SignedMessage {
    Bytes payload;
    std::uint64_t sent_at = 0;
    Signature sig;
    Certificate cert;

    bool operator==(const SignedMessage&) const = default;
};

namespace detail {
inline Bytes message_body(std::span<const std::uint8_t> payload, std::uint64_t sent_at) {
    Bytes out;
    append_framed(out, payload);
    append_framed(out, u64be(sent_at));
    return out;
}
}  // namespace detail

inline SignedMessage baseline_sign(const Curve& curve, const KeyPair& kp, const Certificate& cert,
                                   std::span<const std::uint8_t> payload, std::uint64_t now,
                                   SeededRng& rng) {
    SignedMessage msg;
    msg.payload.assign(payload.begin(), payload.end());
    msg.sent_at = now;
    msg.sig = schnorr_sign(curve, "BM:", kp, detail::message_body(payload, now), rng);
    msg.cert = cert;
    return msg;
}

enum class CertVerdict {
    accept,
    reject_untrusted_issuer,
    reject_expired,
    reject_cert_signature,
    reject_message_signature,
};

inline std::string_view to_string(CertVerdict v) {
    switch (v) {
        case CertVerdict::accept: return "accept";
        case CertVerdict::reject_untrusted_issuer: return "untrusted-issuer";
        case CertVerdict::reject_expired: return "expired";
        case CertVerdict::reject_cert_signature: return "cert-signature";
        case CertVerdict::reject_message_signature: return "message-signature";
    }
    return "unknown";
}

/// Two signature verifications per message: the certificate under the trust
/// anchor, then the payload under the certified key.
inline CertVerdict baseline_verify(const Curve& curve, const GroupElement& trust_anchor,
                                   const SignedMessage& msg, std::uint64_t now) {
    if (msg.cert.issuer_pk != trust_anchor) return CertVerdict::reject_untrusted_issuer;
    if (now < msg.cert.not_before || now > msg.cert.not_after) return CertVerdict::reject_expired;
    if (!schnorr_verify(curve, "BC:", trust_anchor, cert_body_bytes(curve, msg.cert),
                        msg.cert.issuer_sig)) {
        return CertVerdict::reject_cert_signature;
    }
    if (!schnorr_verify(curve, "BM:", msg.cert.subject_pk,
                        detail::message_body(msg.payload, msg.sent_at), msg.sig)) {
        return CertVerdict::reject_message_signature;
    }
    return CertVerdict::accept;
}

// -- wire format --

inline Bytes encode_certificate(const Curve& curve, const Certificate& cert) {
    Bytes out = cert_body_bytes(curve, cert);
    append_framed(out, curve.encode_element(cert.issuer_sig.commitment));
    append_framed(out, curve.encode_scalar(cert.issuer_sig.response));
    return out;
}

/// Message wire format: (m, t, R, s, certificate), each length-prefixed.
inline Bytes encode_message(const Curve& curve, const SignedMessage& msg) {
    Bytes out;
    append_framed(out, msg.payload);
    append_framed(out, u64be(msg.sent_at));
    append_framed(out, curve.encode_element(msg.sig.commitment));
    append_framed(out, curve.encode_scalar(msg.sig.response));
    append_framed(out, encode_certificate(curve, msg.cert));
    return out;
}

inline std::optional<Certificate> decode_certificate(const Curve& curve,
                                                     std::span<const std::uint8_t> data) {
    Cursor cur(data);
    Certificate cert;
    auto sid = cur.take_framed();
    if (!sid || sid->size() != cert.subject_id.size()) return std::nullopt;
    std::copy(sid->begin(), sid->end(), cert.subject_id.begin());
    auto read_element = [&](GroupElement& out) {
        auto f = cur.take_framed();
        if (!f) return false;
        auto pt = curve.decode_element(*f);
        if (!pt) return false;
        out = std::move(*pt);
        return true;
    };
    auto read_u64 = [&](std::uint64_t& out) {
        auto f = cur.take_framed();
        if (!f || f->size() != 8) return false;
        std::uint64_t v = 0;
        for (std::uint8_t b : *f) v = (v << 8) | b;
        out = v;
        return true;
    };
    if (!read_element(cert.subject_pk)) return std::nullopt;
    if (!read_element(cert.issuer_pk)) return std::nullopt;
    if (!read_u64(cert.not_before)) return std::nullopt;
    if (!read_u64(cert.not_after)) return std::nullopt;
    if (!read_element(cert.issuer_sig.commitment)) return std::nullopt;
    auto resp = cur.take_framed();
    if (!resp) return std::nullopt;
    auto s = curve.decode_scalar(*resp);
    if (!s || !cur.done()) return std::nullopt;
    cert.issuer_sig.response = *s;
    return cert;
}

/// Certificate wire size: seven framed fields.
inline std::size_t certificate_size(const Curve& curve) {
    return 7 * 4 + 16 + 3 * curve.element_size() + curve.scalar_width() + 2 * 8;
}

/// Message bytes beyond the payload: framing, timestamp, signature, and the
/// embedded certificate.
inline std::size_t message_overhead(const Curve& curve) {
    return 5 * 4 + 8 + curve.element_size() + curve.scalar_width() + certificate_size(curve);
}

inline std::size_t message_size(const Curve& curve, std::size_t payload_size) {
    return payload_size + message_overhead(curve);
}

}  // namespace catfl::pki
