#pragma once

#include <catfl/clpa.hpp>

#include <algorithm>
#include <optional>

namespace catfl::clpa {

/// Envelope wire format: ten length-prefixed fields in the order
/// (m, aid1, aid2, T_i, theta, X, U, eta, A, t).
inline Bytes encode_envelope(const SystemParams& params, const SignedEnvelope& env) {
    const Curve& c = params.curve;
    Bytes out;
    append_framed(out, env.payload);
    append_framed(out, c.encode_element(env.aid.point));
    append_framed(out, env.aid.masked_id);
    append_framed(out, u64be(env.aid.issued_at));
    append_framed(out, c.encode_scalar(env.key_tag));
    append_framed(out, c.encode_element(env.pk.user_key));
    append_framed(out, c.encode_element(env.pk.kgc_commitment));
    append_framed(out, c.encode_scalar(env.response));
    append_framed(out, c.encode_element(env.commitment));
    append_framed(out, u64be(env.sent_at));
    return out;
}

/// Strict decode: rejects off-curve elements, out-of-range scalars, wrong
/// field widths, and trailing bytes.
inline std::optional<SignedEnvelope> decode_envelope(const SystemParams& params,
                                                     std::span<const std::uint8_t> data) {
    const Curve& c = params.curve;
    Cursor cur(data);

    auto payload = cur.take_framed();
    if (!payload) return std::nullopt;

    auto read_element = [&](GroupElement& out) {
        auto f = cur.take_framed();
        if (!f) return false;
        auto pt = c.decode_element(*f);
        if (!pt) return false;
        out = std::move(*pt);
        return true;
    };
    auto read_scalar = [&](Scalar& out) {
        auto f = cur.take_framed();
        if (!f) return false;
        auto s = c.decode_scalar(*f);
        if (!s) return false;
        out = std::move(*s);
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

    SignedEnvelope env;
    env.payload.assign(payload->begin(), payload->end());
    if (!read_element(env.aid.point)) return std::nullopt;

    auto masked = cur.take_framed();
    if (!masked || masked->size() != env.aid.masked_id.size()) return std::nullopt;
    std::copy(masked->begin(), masked->end(), env.aid.masked_id.begin());

    if (!read_u64(env.aid.issued_at)) return std::nullopt;
    if (!read_scalar(env.key_tag)) return std::nullopt;
    if (!read_element(env.pk.user_key)) return std::nullopt;
    if (!read_element(env.pk.kgc_commitment)) return std::nullopt;
    if (!read_scalar(env.response)) return std::nullopt;
    if (!read_element(env.commitment)) return std::nullopt;
    if (!read_u64(env.sent_at)) return std::nullopt;
    if (!cur.done()) return std::nullopt;
    return env;
}

/// Envelope bytes beyond the payload itself, from the format arithmetic:
/// ten 4-byte length prefixes plus four elements, two scalars, the masked
/// identity, and two 8-byte timestamps.
inline std::size_t envelope_overhead(const Curve& curve) {
    return 10 * 4 + 4 * curve.element_size() + 2 * curve.scalar_width() + 16 + 2 * 8;
}

inline std::size_t envelope_size(const Curve& curve, std::size_t payload_size) {
    return payload_size + envelope_overhead(curve);
}

}  // namespace catfl::clpa
