#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace catfl {

using Int = boost::multiprecision::mpz_int;

/// Modular inverse of a mod m. Throws if gcd(a, m) != 1.
inline Int inv_mod(const Int& a, const Int& m) {
    Int r;
    if (mpz_invert(r.backend().data(), a.backend().data(), m.backend().data()) == 0) {
        throw std::domain_error("inv_mod: element not invertible");
    }
    return r;
}

inline Int pow_mod(const Int& base, const Int& exp, const Int& m) {
    Int r;
    mpz_powm(r.backend().data(), base.backend().data(), exp.backend().data(), m.backend().data());
    return r;
}

/// Baillie-PSW plus Miller-Rabin rounds; no false negatives for primes.
inline bool probably_prime(const Int& n) {
    if (n < 2) return false;
    return mpz_probab_prime_p(n.backend().data(), 32) != 0;
}

inline std::size_t bit_length(const Int& n) {
    if (n == 0) return 0;
    return mpz_sizeinbase(n.backend().data(), 2);
}

inline bool test_bit(const Int& n, std::size_t i) {
    return mpz_tstbit(n.backend().data(), static_cast<mp_bitcnt_t>(i)) != 0;
}

/// Big-endian, fixed-width encoding. Throws if n does not fit.
inline void to_bytes_be(const Int& n, std::span<std::uint8_t> out) {
    if (n < 0) throw std::invalid_argument("to_bytes_be: negative value");
    std::size_t count = 0;
    std::vector<std::uint8_t> raw((bit_length(n) + 7) / 8);
    if (n != 0) {
        mpz_export(raw.data(), &count, 1, 1, 1, 0, n.backend().data());
    }
    if (count > out.size()) throw std::invalid_argument("to_bytes_be: value too wide");
    std::fill(out.begin(), out.end(), std::uint8_t{0});
    std::copy(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(count),
              out.end() - static_cast<std::ptrdiff_t>(count));
}

inline Int from_bytes_be(std::span<const std::uint8_t> in) {
    Int n;
    if (!in.empty()) {
        mpz_import(n.backend().data(), in.size(), 1, 1, 1, 0, in.data());
    }
    return n;
}

}  // namespace catfl
