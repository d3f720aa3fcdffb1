#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace sapphire {

enum class Strategy { GenericBarrett, SpecializedBarrett, PowerOfTwo, Fermat65537 };

std::string to_string(Strategy s);

// Modulus q < 2^24 together with the reduction it uses.
struct ModulusProfile {
    uint32_t q = 0;
    Strategy strategy = Strategy::GenericBarrett;
    uint32_t m = 0;  // floor(2^k / q); 0 when unused
    unsigned k = 0;  // 0 when unused

    // Derives the smallest valid k (>= 16) and m.
    static ModulusProfile generic(uint32_t q);
    // Validates a caller-supplied pair; throws ConfigError when it would need a second subtraction.
    static ModulusProfile generic(uint32_t q, uint32_t m, unsigned k);
    static ModulusProfile specialized(uint32_t q);
    static ModulusProfile power_of_two(uint32_t q);
    static ModulusProfile fermat();
    // Specialized when q is one of the hard-wired primes, fermat for 65537,
    // power-of-two when applicable, generic otherwise.
    static ModulusProfile for_modulus(uint32_t q);

    bool operator==(const ModulusProfile&) const = default;
};

// The eleven primes with a dedicated shift/add reduction block.
const std::array<uint32_t, 11>& specialized_primes();
bool is_specialized_prime(uint32_t q);

// (2^k - m q) q < 2^k, i.e. 1/q - m/2^k < 1/q^2.
bool barrett_valid(uint32_t q, uint32_t m, unsigned k);

uint32_t mod_add(uint32_t x, uint32_t y, const ModulusProfile& p);
uint32_t mod_sub(uint32_t x, uint32_t y, const ModulusProfile& p);
uint32_t mod_mul(uint32_t x, uint32_t y, const ModulusProfile& p);

// z in [0, q^2) -> z mod q using the profile's strategy.
uint32_t reduce(uint64_t z, const ModulusProfile& p);

// Individual reduction paths, exposed so that they can be cross-checked.
uint32_t reduce_generic(uint64_t z, uint32_t q, uint32_t m, unsigned k);
uint32_t reduce_specialized(uint64_t z, uint32_t q);
uint32_t reduce_fermat(uint64_t z);

// Unchecked variants for inner loops whose operands are already canonical.
namespace detail {
inline uint32_t select_sub(uint32_t z, uint32_t q) {
    // z in [0, 2q): subtract q when z >= q, by mask.
    uint32_t d = z - q;
    uint32_t mask = 0u - (d >> 31);  // all ones when z < q
    return (z & mask) | (d & ~mask);
}
inline uint32_t add(uint32_t x, uint32_t y, uint32_t q) { return select_sub(x + y, q); }
inline uint32_t sub(uint32_t x, uint32_t y, uint32_t q) {
    uint32_t d = x - y;
    uint32_t mask = 0u - (d >> 31);  // all ones on borrow
    return d + (q & mask);
}
}  // namespace detail

}  // namespace sapphire
