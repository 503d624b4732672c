#pragma once

#include <catfl/bytes.hpp>
#include <catfl/curve.hpp>
#include <catfl/sha256.hpp>

#include <algorithm>
#include <string_view>

namespace catfl {

/// SHA-256 over tag || material. Tags are 3-byte ASCII ("H0:".."H3:") and
/// keep the protocol's hash roles from colliding on equal material.
inline Digest tagged_digest(std::string_view tag, std::span<const std::uint8_t> material) {
    Bytes buf;
    buf.reserve(tag.size() + material.size());
    buf.insert(buf.end(), tag.begin(), tag.end());
    append(buf, material);
    return sha256(buf);
}

/// Digest reduced into Z_q^*; a residue of 0 maps to 1.
inline Scalar hash_to_scalar(const Curve& curve, std::string_view tag,
                             std::span<const std::uint8_t> material) {
    Digest d = tagged_digest(tag, material);
    Scalar s = curve.reduce(from_bytes_be(d));
    if (s.v == 0) s.v = 1;
    return s;
}

/// 128-bit output: the digest truncated to 16 bytes.
inline Bits128 hash_to_bits(std::string_view tag, std::span<const std::uint8_t> material) {
    Digest d = tagged_digest(tag, material);
    Bits128 out;
    std::copy(d.begin(), d.begin() + out.size(), out.begin());
    return out;
}

}  // namespace catfl
