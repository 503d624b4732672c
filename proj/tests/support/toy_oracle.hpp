#pragma once

// Independent reference arithmetic for the 19-point test curve
// y^2 = x^3 + 2x + 2 over F_17, generator (5,1). Written with plain machine
// integers and exhaustive search so it shares no code with the library's
// group law: points are enumerated from the curve equation, the field
// inverse is found by scanning, and the group law is tabulated through
// discrete logs of the generator.

#include <catfl/curve.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace toy_oracle {

inline constexpr std::int64_t P = 17;
inline constexpr std::int64_t A = 2;
inline constexpr std::int64_t B = 2;
inline constexpr std::int64_t ORDER = 19;

struct Pt {
    bool inf = true;
    std::int64_t x = 0;
    std::int64_t y = 0;

    bool operator==(const Pt&) const = default;
};

inline std::int64_t mod(std::int64_t v) { return ((v % P) + P) % P; }

inline std::int64_t inv(std::int64_t v) {
    v = mod(v);
    for (std::int64_t c = 1; c < P; ++c) {
        if (mod(v * c) == 1) return c;
    }
    throw std::logic_error("toy oracle: no inverse");
}

inline bool on_curve(const Pt& p) {
    if (p.inf) return true;
    return mod(p.y * p.y) == mod(p.x * p.x * p.x + A * p.x + B);
}

/// Every affine point satisfying the curve equation, plus the identity.
inline std::vector<Pt> enumerate_points() {
    std::vector<Pt> pts;
    pts.push_back(Pt{});
    for (std::int64_t x = 0; x < P; ++x) {
        for (std::int64_t y = 0; y < P; ++y) {
            Pt p{false, x, y};
            if (on_curve(p)) pts.push_back(p);
        }
    }
    return pts;
}

inline Pt add(const Pt& p, const Pt& q) {
    if (p.inf) return q;
    if (q.inf) return p;
    if (p.x == q.x && mod(p.y + q.y) == 0) return Pt{};
    std::int64_t lam;
    if (p.x == q.x && p.y == q.y) {
        lam = mod((3 * p.x * p.x + A) * inv(2 * p.y));
    } else {
        lam = mod((q.y - p.y) * inv(q.x - p.x));
    }
    std::int64_t x3 = mod(lam * lam - p.x - q.x);
    std::int64_t y3 = mod(lam * (p.x - x3) - p.y);
    return Pt{false, x3, y3};
}

/// multiples[k] = k*G for k in [0, ORDER).
inline const std::vector<Pt>& generator_multiples() {
    static const std::vector<Pt> table = [] {
        std::vector<Pt> t;
        t.push_back(Pt{});
        Pt g{false, 5, 1};
        Pt acc = g;
        for (int k = 1; k < ORDER; ++k) {
            t.push_back(acc);
            acc = add(acc, g);
        }
        if (!(acc == Pt{})) throw std::logic_error("toy oracle: generator order mismatch");
        return t;
    }();
    return table;
}

/// Discrete log of a point with respect to G, by table scan.
inline std::optional<int> dlog(const Pt& p) {
    const auto& table = generator_multiples();
    for (int k = 0; k < ORDER; ++k) {
        if (table[static_cast<std::size_t>(k)] == p) return k;
    }
    return std::nullopt;
}

/// Group law through the dlog table: iG + jG = ((i+j) mod 19)G.
inline Pt tabulated_add(const Pt& p, const Pt& q) {
    auto i = dlog(p);
    auto j = dlog(q);
    if (!i || !j) throw std::logic_error("toy oracle: point not in the group");
    return generator_multiples()[static_cast<std::size_t>((*i + *j) % ORDER)];
}

inline Pt from_element(const catfl::GroupElement& e) {
    if (e.inf) return Pt{};
    return Pt{false, static_cast<std::int64_t>(e.x), static_cast<std::int64_t>(e.y)};
}

inline catfl::GroupElement to_element(const Pt& p) {
    if (p.inf) return catfl::GroupElement::identity();
    return catfl::GroupElement::affine(p.x, p.y);
}

inline std::optional<int> dlog_of(const catfl::GroupElement& e) { return dlog(from_element(e)); }

}  // namespace toy_oracle
