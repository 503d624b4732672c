#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace catfl {

using Bytes = std::vector<std::uint8_t>;
using Bits128 = std::array<std::uint8_t, 16>;

inline void append(Bytes& out, std::span<const std::uint8_t> data) {
    out.insert(out.end(), data.begin(), data.end());
}

inline void append_u32be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_u64be(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

inline Bytes u64be(std::uint64_t v) {
    Bytes out;
    append_u64be(out, v);
    return out;
}

/// 4-byte big-endian length prefix followed by the field bytes.
inline void append_framed(Bytes& out, std::span<const std::uint8_t> field) {
    append_u32be(out, static_cast<std::uint32_t>(field.size()));
    append(out, field);
}

inline Bits128 xor_bits(const Bits128& a, const Bits128& b) {
    Bits128 out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i];
    return out;
}

inline std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0x0f]);
    }
    return s;
}

inline std::optional<Bytes> from_hex(std::string_view s) {
    if (s.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    out.reserve(s.size() / 2);
    for (std::size_t i = 0; i < s.size(); i += 2) {
        int hi = nibble(s[i]), lo = nibble(s[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

/// Sequential reader for length-prefixed wire formats.
class Cursor {
  public:
    explicit Cursor(std::span<const std::uint8_t> data) : data_(data) {}

    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::optional<std::span<const std::uint8_t>> take(std::size_t n) {
        if (remaining() < n) return std::nullopt;
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::optional<std::uint32_t> take_u32be() {
        auto raw = take(4);
        if (!raw) return std::nullopt;
        auto& r = *raw;
        return (std::uint32_t{r[0]} << 24) | (std::uint32_t{r[1]} << 16) |
               (std::uint32_t{r[2]} << 8) | std::uint32_t{r[3]};
    }

    std::optional<std::uint64_t> take_u64be() {
        auto raw = take(8);
        if (!raw) return std::nullopt;
        std::uint64_t v = 0;
        for (std::uint8_t b : *raw) v = (v << 8) | b;
        return v;
    }

    /// Reads one length-prefixed field.
    std::optional<std::span<const std::uint8_t>> take_framed() {
        auto len = take_u32be();
        if (!len) return std::nullopt;
        return take(*len);
    }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace catfl
