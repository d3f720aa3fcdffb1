#include "sapphire/modmath.hpp"

#include <algorithm>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

constexpr std::array<uint32_t, 11> kSpecialized = {
    7681, 12289, 40961, 120833, 133121, 184321, 8380417, 8058881, 4205569, 4206593, 8404993,
};

void check_q(uint32_t q) {
    if (q < 2 || q >= (1u << 24)) throw ConfigError("modulus must satisfy 2 <= q < 2^24, got " + std::to_string(q));
}

void check_residue(uint32_t x, uint32_t q) {
    if (x >= q) throw ContractViolation("operand " + std::to_string(x) + " not below q = " + std::to_string(q));
}

void check_product(uint64_t z, uint32_t q) {
    if (z >= uint64_t(q) * q) throw ContractViolation("reduction input " + std::to_string(z) + " not below q^2");
}

bool is_pow2(uint32_t q) { return q != 0 && (q & (q - 1)) == 0; }

// Final step shared by every Barrett block: z = x - t, then one masked subtraction.
uint32_t finish(i128 x, i128 t, uint32_t q) {
    auto z = static_cast<uint32_t>(x - t);
    return detail::select_sub(z, q);
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::GenericBarrett: return "generic-barrett";
        case Strategy::SpecializedBarrett: return "specialized-barrett";
        case Strategy::PowerOfTwo: return "power-of-two";
        case Strategy::Fermat65537: return "fermat-65537";
    }
    return "?";
}

const std::array<uint32_t, 11>& specialized_primes() { return kSpecialized; }

bool is_specialized_prime(uint32_t q) {
    return std::find(kSpecialized.begin(), kSpecialized.end(), q) != kSpecialized.end();
}

bool barrett_valid(uint32_t q, uint32_t m, unsigned k) {
    if (q < 2 || k > 63) return false;
    u128 two_k = u128(1) << k;
    if (u128(m) != two_k / q) return false;
    u128 gap = two_k - u128(m) * q;
    return gap * q < two_k;
}

ModulusProfile ModulusProfile::generic(uint32_t q) {
    check_q(q);
    for (unsigned k = 16; k <= 48; ++k) {
        u128 m = (u128(1) << k) / q;
        if (m >= (1u << 24)) break;
        if (barrett_valid(q, uint32_t(m), k)) return {q, Strategy::GenericBarrett, uint32_t(m), k};
    }
    throw ConfigError("no Barrett pair with k <= 48 and m < 2^24 for q = " + std::to_string(q));
}

ModulusProfile ModulusProfile::generic(uint32_t q, uint32_t m, unsigned k) {
    check_q(q);
    if (k < 16 || k > 48) throw ConfigError("Barrett shift k must lie in [16, 48]");
    if (m >= (1u << 24)) throw ConfigError("Barrett multiplier m must be below 2^24");
    if (!barrett_valid(q, m, k))
        throw ConfigError("Barrett pair (m = " + std::to_string(m) + ", k = " + std::to_string(k) +
                          ") invalid for q = " + std::to_string(q));
    return {q, Strategy::GenericBarrett, m, k};
}

ModulusProfile ModulusProfile::specialized(uint32_t q) {
    if (!is_specialized_prime(q)) throw ConfigError("no specialized reduction block for q = " + std::to_string(q));
    ModulusProfile g = generic(q);
    g.strategy = Strategy::SpecializedBarrett;
    return g;
}

ModulusProfile ModulusProfile::power_of_two(uint32_t q) {
    check_q(q);
    if (!is_pow2(q)) throw ConfigError(std::to_string(q) + " is not a power of two");
    return {q, Strategy::PowerOfTwo, 0, 0};
}

ModulusProfile ModulusProfile::fermat() { return {65537, Strategy::Fermat65537, 0, 0}; }

ModulusProfile ModulusProfile::for_modulus(uint32_t q) {
    check_q(q);
    if (q == 65537) return fermat();
    if (is_specialized_prime(q)) return specialized(q);
    if (is_pow2(q)) return power_of_two(q);
    return generic(q);
}

uint32_t mod_add(uint32_t x, uint32_t y, const ModulusProfile& p) {
    check_residue(x, p.q);
    check_residue(y, p.q);
    return detail::add(x, y, p.q);
}

uint32_t mod_sub(uint32_t x, uint32_t y, const ModulusProfile& p) {
    check_residue(x, p.q);
    check_residue(y, p.q);
    return detail::sub(x, y, p.q);
}

uint32_t mod_mul(uint32_t x, uint32_t y, const ModulusProfile& p) {
    check_residue(x, p.q);
    check_residue(y, p.q);
    return reduce(uint64_t(x) * y, p);
}

uint32_t reduce_generic(uint64_t z, uint32_t q, uint32_t m, unsigned k) {
    u128 t = (u128(z) * m) >> k;
    return finish(i128(z), i128(t * q), q);
}

uint32_t reduce_fermat(uint64_t z) {
    constexpr uint32_t q = 65537;
    auto x0 = int64_t(z & 0xFFFF);
    auto x1 = int64_t((z >> 16) & 0xFFFF);
    auto x2 = int64_t(z >> 32);
    int64_t r = x0 - x1 + x2;
    int64_t mask = r >> 63;  // all ones when negative
    return uint32_t(r + (q & mask));
}

uint32_t reduce_specialized(uint64_t z, uint32_t q) {
    const i128 x = i128(z);
    i128 t;
    switch (q) {
        case 7681:
            t = (x << 8) + (x << 4) + x;
            t >>= 21;
            t = (t << 13) - (t << 9) + t;
            break;
        case 12289:
            t = 10921 * x;
            t >>= 27;
            t = (t << 13) + (t << 12) + t;
            break;
        case 40961:
            t = 52427 * x;
            t >>= 31;
            t = (t << 15) + (t << 13) + t;
            break;
        case 120833:
            t = 71089 * x;
            t >>= 33;
            t = (t << 17) - (t << 14) + (t << 13) - (t << 11) + t;
            break;
        case 133121:
            t = (x << 16) - (x << 10) + (x << 4) - x;
            t >>= 33;
            t = (t << 17) + (t << 11) + t;
            break;
        case 184321:
            t = 46603 * x;
            t >>= 33;
            t = (t << 17) + (t << 15) + (t << 14) + (t << 12) + t;
            break;
        case 8380417:
            t = (x << 23) + (x << 13) + (x << 3) - x;
            t >>= 46;
            t = (t << 23) - (t << 13) + t;
            break;
        case 8058881:
            t = 8731825 * x;
            t >>= 46;
            t = 8058881 * t;
            break;
        case 4205569:
            t = 4183069 * x;
            t >>= 44;
            t = (t << 22) + (t << 13) + (t << 11) + (t << 10) + t;
            break;
        case 4206593:
            t = (x << 21) - (x << 13) + (x << 11) + (x << 4) + x;
            t >>= 43;
            t = (t << 22) + (t << 13) + (t << 12) + t;
            break;
        case 8404993:
            t = (x << 22) - (x << 13) + (x << 4) - x;
            t >>= 45;
            t = (t << 23) + (t << 14) + t;
            break;
        default:
            throw ConfigError("no specialized reduction block for q = " + std::to_string(q));
    }
    return finish(x, t, q);
}

uint32_t reduce(uint64_t z, const ModulusProfile& p) {
    check_product(z, p.q);
    switch (p.strategy) {
        case Strategy::PowerOfTwo: return uint32_t(z & (p.q - 1));
        case Strategy::Fermat65537: return reduce_fermat(z);
        case Strategy::SpecializedBarrett: return reduce_specialized(z, p.q);
        case Strategy::GenericBarrett:
            if (p.k == 0) throw ConfigError("generic Barrett profile without m/k");
            return reduce_generic(z, p.q, p.m, p.k);
    }
    throw ConfigError("unknown strategy");
}

}  // namespace sapphire
