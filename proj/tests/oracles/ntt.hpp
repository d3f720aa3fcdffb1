#pragma once
// Reference transforms: direct O(n^2) evaluation and the textbook iterative in-place NTT.

#include <cstdint>
#include <functional>
#include <vector>

#include "oracles/modq.hpp"

namespace oracle {

inline unsigned bitrev(unsigned i, unsigned bits) {
    unsigned r = 0;
    for (unsigned b = 0; b < bits; ++b)
        if (i >> b & 1) r |= 1u << (bits - 1 - b);
    return r;
}

inline unsigned lg(size_t n) {
    unsigned l = 0;
    while ((size_t(1) << l) < n) ++l;
    return l;
}

// A[k] = sum_i a[i] w^(ik)
inline std::vector<uint32_t> dft(const std::vector<uint32_t>& a, uint32_t w, uint32_t q) {
    const size_t n = a.size();
    std::vector<uint32_t> out(n);
    for (size_t k = 0; k < n; ++k) {
        unsigned __int128 acc = 0;
        uint64_t wk = pow_mod(w, k, q), x = 1;
        for (size_t i = 0; i < n; ++i) {
            acc += (unsigned __int128)a[i] * x;
            x = x * wk % q;
        }
        out[k] = mod(acc, q);
    }
    return out;
}

inline std::vector<uint32_t> permute_bitrev(const std::vector<uint32_t>& a) {
    std::vector<uint32_t> out(a.size());
    unsigned b = lg(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[bitrev(unsigned(i), b)];
    return out;
}

// Bit-reverse, then lg n in-place CT stages; on_stage sees the array after each stage.
inline std::vector<uint32_t> iterative_ntt(std::vector<uint32_t> a, uint32_t w, uint32_t q,
                                           const std::function<void(unsigned, const std::vector<uint32_t>&)>& on_stage = {}) {
    const size_t n = a.size();
    a = permute_bitrev(a);
    unsigned L = lg(n);
    for (unsigned s = 1; s <= L; ++s) {
        size_t m = size_t(1) << s;
        uint64_t wm = pow_mod(w, n / m, q);
        for (size_t k = 0; k < n; k += m) {
            uint64_t x = 1;
            for (size_t j = 0; j < m / 2; ++j) {
                uint64_t t = x * a[k + j + m / 2] % q;
                uint64_t u = a[k + j];
                a[k + j] = uint32_t((u + t) % q);
                a[k + j + m / 2] = uint32_t((u + q - t) % q);
                x = x * wm % q;
            }
        }
        if (on_stage) on_stage(s, a);
    }
    return a;
}

}  // namespace oracle
