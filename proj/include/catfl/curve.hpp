#pragma once

#include <catfl/bigint.hpp>
#include <catfl/bytes.hpp>
#include <catfl/rng.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace catfl {

struct CurveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Short-Weierstrass curve y^2 = x^3 + ax + b over F_p with a prime-order
/// generator. Both the production curve and the tiny test curve use this.
struct CurveSpec {
    Int p;
    Int a;
    Int b;
    Int gx;
    Int gy;
    Int q;  // order of the generator, prime
    unsigned cofactor = 1;
};

struct GroupElement {
    bool inf = true;
    Int x = 0;
    Int y = 0;

    static GroupElement identity() { return GroupElement{}; }
    static GroupElement affine(Int px, Int py) { return GroupElement{false, std::move(px), std::move(py)}; }

    bool operator==(const GroupElement& o) const {
        if (inf || o.inf) return inf == o.inf;
        return x == o.x && y == o.y;
    }
    bool operator!=(const GroupElement& o) const { return !(*this == o); }
};

/// Residue modulo the group order q, always kept in [0, q).
struct Scalar {
    Int v = 0;

    bool operator==(const Scalar& o) const { return v == o.v; }
    bool operator!=(const Scalar& o) const { return v != o.v; }
};

/// Precomputed window-4 comb multiples of one base point:
/// table[i][j-1] = j * 16^i * B for j in 1..15.
struct FixedBaseTable {
    std::vector<std::array<GroupElement, 15>> columns;
};

class Curve {
  public:
    explicit Curve(CurveSpec spec) : sp_(std::move(spec)) {
        if (sp_.p <= 3 || !probably_prime(sp_.p)) throw CurveError("field prime invalid");
        sp_.a = ((sp_.a % sp_.p) + sp_.p) % sp_.p;
        sp_.b = ((sp_.b % sp_.p) + sp_.p) % sp_.p;
        Int disc = (4 * sp_.a * sp_.a * sp_.a + 27 * sp_.b * sp_.b) % sp_.p;
        if (disc == 0) throw CurveError("curve is singular (4a^3 + 27b^2 = 0)");
        if (sp_.q <= 1 || !probably_prime(sp_.q)) throw CurveError("group order is not prime");
        if (sp_.cofactor == 0) throw CurveError("cofactor must be positive");
        gen_ = GroupElement::affine(((sp_.gx % sp_.p) + sp_.p) % sp_.p,
                                    ((sp_.gy % sp_.p) + sp_.p) % sp_.p);
        if (!on_curve(gen_) || gen_.inf) throw CurveError("generator not on curve");
        coord_width_ = (bit_length(sp_.p) + 7) / 8;
        scalar_width_ = (bit_length(sp_.q) + 7) / 8;
        // q*P = O  <=>  (q-1)*P = -P
        if (add_raw(mul_plain(Scalar{sp_.q - 1}, gen_), gen_) != GroupElement::identity()) {
            throw CurveError("generator order mismatch");
        }
        gen_table_ = make_table(gen_);
    }

    /// y^2 = x^3 + 2x + 2 over F_17, generator (5,1), order 19. Small enough
    /// that tests can enumerate the whole group.
    static Curve toy() {
        return Curve(CurveSpec{17, 2, 2, 5, 1, 19, 1});
    }

    /// secp256k1.
    static Curve secp256k1() {
        CurveSpec s;
        s.p = Int("0xfffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f");
        s.a = 0;
        s.b = 7;
        s.gx = Int("0x79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");
        s.gy = Int("0x483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8");
        s.q = Int("0xfffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
        s.cofactor = 1;
        return Curve(std::move(s));
    }

    /// Decimal fields p, a, b, Px, Py, q, one per line. '#' starts a comment.
    static Curve from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw CurveError("cannot open curve spec file: " + path);
        std::vector<Int> fields;
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            std::istringstream ls(line);
            std::string tok;
            if (!(ls >> tok)) continue;
            try {
                fields.emplace_back(tok);
            } catch (const std::exception&) {
                throw CurveError("curve spec file: bad integer '" + tok + "'");
            }
        }
        if (fields.size() != 6) {
            throw CurveError("curve spec file: expected 6 fields (p, a, b, Px, Py, q)");
        }
        return Curve(CurveSpec{fields[0], fields[1], fields[2], fields[3], fields[4], fields[5], 1});
    }

    const CurveSpec& spec() const { return sp_; }
    const GroupElement& generator() const { return gen_; }
    std::size_t coord_width() const { return coord_width_; }
    std::size_t scalar_width() const { return scalar_width_; }
    /// Wire size of a non-identity element: flag byte plus two coordinates.
    std::size_t element_size() const { return 1 + 2 * coord_width_; }

    bool on_curve(const GroupElement& pt) const {
        if (pt.inf) return true;
        if (pt.x < 0 || pt.x >= sp_.p || pt.y < 0 || pt.y >= sp_.p) return false;
        Int lhs = (pt.y * pt.y) % sp_.p;
        Int rhs = (pt.x * pt.x * pt.x + sp_.a * pt.x + sp_.b) % sp_.p;
        return lhs == rhs;
    }

    void require_valid(const GroupElement& pt) const {
        if (!on_curve(pt)) throw CurveError("group element does not belong to this curve");
    }

    GroupElement negate(const GroupElement& pt) const {
        require_valid(pt);
        return neg_raw(pt);
    }

    GroupElement add(const GroupElement& lhs, const GroupElement& rhs) const {
        require_valid(lhs);
        require_valid(rhs);
        return add_raw(lhs, rhs);
    }

    /// Scalar multiple of an arbitrary point (width-4 wNAF).
    GroupElement mul(const Scalar& k, const GroupElement& pt) const {
        require_valid(pt);
        return mul_plain(k, pt);
    }

    /// Scalar multiple of the generator via the precomputed comb table.
    GroupElement mul_base(const Scalar& k) const { return mul_table(k, gen_table_); }

    /// k1*p1 + k2*p2 with shared doublings (Strauss).
    GroupElement mul2(const Scalar& k1, const GroupElement& p1, const Scalar& k2,
                      const GroupElement& p2) const {
        require_valid(p1);
        require_valid(p2);
        auto d1 = wnaf_digits(k1);
        auto d2 = wnaf_digits(k2);
        auto o1 = odd_multiples(p1);
        auto o2 = odd_multiples(p2);
        GroupElement acc = GroupElement::identity();
        for (std::size_t i = std::max(d1.size(), d2.size()); i-- > 0;) {
            acc = dbl_raw(acc);
            if (i < d1.size() && d1[i] != 0) acc = add_digit(acc, d1[i], o1);
            if (i < d2.size() && d2[i] != 0) acc = add_digit(acc, d2[i], o2);
        }
        return acc;
    }

    FixedBaseTable make_table(const GroupElement& base) const {
        require_valid(base);
        FixedBaseTable t;
        std::size_t columns = (bit_length(sp_.q) + 3) / 4;
        t.columns.resize(columns);
        GroupElement col_base = base;  // 16^i * B
        for (std::size_t i = 0; i < columns; ++i) {
            GroupElement acc = GroupElement::identity();
            for (int j = 1; j <= 15; ++j) {
                acc = add_raw(acc, col_base);
                t.columns[i][static_cast<std::size_t>(j - 1)] = acc;
            }
            // next column base: 16 * col_base
            col_base = add_raw(t.columns[i][14], col_base);
        }
        return t;
    }

    GroupElement mul_table(const Scalar& k, const FixedBaseTable& table) const {
        check_scalar(k);
        GroupElement acc = GroupElement::identity();
        Int v = k.v;
        std::size_t i = 0;
        while (v != 0) {
            if (i >= table.columns.size()) throw CurveError("fixed-base table too small for scalar");
            auto digit = static_cast<unsigned>(static_cast<std::uint64_t>(v & 0xf));
            if (digit != 0) acc = add_raw(acc, table.columns[i][digit - 1]);
            v >>= 4;
            ++i;
        }
        return acc;
    }

    // -- scalar field (mod q) --

    Scalar reduce(const Int& v) const { return Scalar{((v % sp_.q) + sp_.q) % sp_.q}; }
    Scalar s_add(const Scalar& a, const Scalar& b) const { return reduce(a.v + b.v); }
    Scalar s_sub(const Scalar& a, const Scalar& b) const { return reduce(a.v - b.v); }
    Scalar s_mul(const Scalar& a, const Scalar& b) const { return reduce(a.v * b.v); }
    Scalar s_neg(const Scalar& a) const { return reduce(-a.v); }
    Scalar s_inv(const Scalar& a) const { return Scalar{inv_mod(a.v, sp_.q)}; }

    bool scalar_in_range(const Scalar& s, bool allow_zero = true) const {
        if (s.v < 0 || s.v >= sp_.q) return false;
        return allow_zero || s.v != 0;
    }

    void check_scalar(const Scalar& s) const {
        if (!scalar_in_range(s)) throw CurveError("scalar out of range");
    }

    /// Uniform draw from Z_q^* — never zero.
    Scalar random_scalar(SeededRng& rng) const {
        Int v;
        do {
            v = rng.next_int_below(sp_.q);
        } while (v == 0);
        return Scalar{v};
    }

    // -- canonical encodings --

    /// Identity: single zero byte. Otherwise 0x04 flag byte followed by
    /// fixed-width big-endian x and y.
    Bytes encode_element(const GroupElement& pt) const {
        require_valid(pt);
        if (pt.inf) return Bytes{0x00};
        Bytes out;
        out.reserve(element_size());
        out.push_back(0x04);
        out.resize(element_size());
        to_bytes_be(pt.x, std::span(out).subspan(1, coord_width_));
        to_bytes_be(pt.y, std::span(out).subspan(1 + coord_width_, coord_width_));
        return out;
    }

    std::optional<GroupElement> decode_element(std::span<const std::uint8_t> in) const {
        if (in.size() == 1 && in[0] == 0x00) return GroupElement::identity();
        if (in.size() != element_size() || in[0] != 0x04) return std::nullopt;
        GroupElement pt = GroupElement::affine(from_bytes_be(in.subspan(1, coord_width_)),
                                               from_bytes_be(in.subspan(1 + coord_width_)));
        if (pt.x >= sp_.p || pt.y >= sp_.p) return std::nullopt;
        if (!on_curve(pt)) return std::nullopt;
        return pt;
    }

    Bytes encode_scalar(const Scalar& s) const {
        check_scalar(s);
        Bytes out(scalar_width_);
        to_bytes_be(s.v, out);
        return out;
    }

    std::optional<Scalar> decode_scalar(std::span<const std::uint8_t> in) const {
        if (in.size() != scalar_width_) return std::nullopt;
        Scalar s{from_bytes_be(in)};
        if (s.v >= sp_.q) return std::nullopt;
        return s;
    }

  private:
    GroupElement neg_raw(const GroupElement& pt) const {
        if (pt.inf || pt.y == 0) return pt;
        return GroupElement::affine(pt.x, sp_.p - pt.y);
    }

    GroupElement add_raw(const GroupElement& lhs, const GroupElement& rhs) const {
        if (lhs.inf) return rhs;
        if (rhs.inf) return lhs;
        const Int& p = sp_.p;
        if (lhs.x == rhs.x) {
            if ((lhs.y + rhs.y) % p == 0) return GroupElement::identity();
            return dbl_raw(lhs);
        }
        Int lam = ((rhs.y - lhs.y) % p + p) % p;
        lam = (lam * inv_mod(((rhs.x - lhs.x) % p + p) % p, p)) % p;
        Int x3 = ((lam * lam - lhs.x - rhs.x) % p + p) % p;
        Int y3 = ((lam * (lhs.x - x3) - lhs.y) % p + p) % p;
        return GroupElement::affine(std::move(x3), std::move(y3));
    }

    GroupElement dbl_raw(const GroupElement& pt) const {
        if (pt.inf || pt.y == 0) return GroupElement::identity();
        const Int& p = sp_.p;
        Int lam = (3 * pt.x * pt.x + sp_.a) % p;
        lam = (lam * inv_mod((2 * pt.y) % p, p)) % p;
        Int x3 = ((lam * lam - 2 * pt.x) % p + p) % p;
        Int y3 = ((lam * (pt.x - x3) - pt.y) % p + p) % p;
        return GroupElement::affine(std::move(x3), std::move(y3));
    }

    /// Odd multiples 1,3,5,...,15 of pt, the wNAF lookup set.
    std::array<GroupElement, 8> odd_multiples(const GroupElement& pt) const {
        std::array<GroupElement, 8> odd;
        odd[0] = pt;
        GroupElement twice = dbl_raw(pt);
        for (std::size_t i = 1; i < odd.size(); ++i) odd[i] = add_raw(odd[i - 1], twice);
        return odd;
    }

    /// Width-4 wNAF digits (odd, in [-15, 15]), least significant first.
    std::vector<int> wnaf_digits(const Scalar& k) const {
        check_scalar(k);
        std::vector<int> digits;
        Int v = k.v;
        while (v != 0) {
            if (test_bit(v, 0)) {
                int d = static_cast<int>(static_cast<std::uint64_t>(v & 0x1f));
                if (d >= 16) d -= 32;
                digits.push_back(d);
                v -= d;
            } else {
                digits.push_back(0);
            }
            v >>= 1;
        }
        return digits;
    }

    GroupElement add_digit(const GroupElement& acc, int d,
                           const std::array<GroupElement, 8>& odd) const {
        if (d > 0) return add_raw(acc, odd[static_cast<std::size_t>(d / 2)]);
        return add_raw(acc, neg_raw(odd[static_cast<std::size_t>(-d / 2)]));
    }

    /// Width-4 wNAF double-and-add; no validity checks on the base.
    GroupElement mul_plain(const Scalar& k, const GroupElement& pt) const {
        if (k.v == 0 || pt.inf) {
            check_scalar(k);
            return GroupElement::identity();
        }
        auto odd = odd_multiples(pt);
        auto digits = wnaf_digits(k);
        GroupElement acc = GroupElement::identity();
        for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
            acc = dbl_raw(acc);
            if (*it != 0) acc = add_digit(acc, *it, odd);
        }
        return acc;
    }

    CurveSpec sp_;
    GroupElement gen_;
    std::size_t coord_width_ = 0;
    std::size_t scalar_width_ = 0;
    FixedBaseTable gen_table_;
};

}  // namespace catfl
