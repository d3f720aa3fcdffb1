#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sapphire/modmath.hpp"
#include "sapphire/polycache.hpp"

namespace sapphire {

struct LatticeConfig {
    unsigned n = 0;
    uint32_t q = 0;
    ModulusProfile profile;
    unsigned lg_n = 0;

    // Accepts any power of two n in [8, 2048] and 2 <= q < 2^24.
    static LatticeConfig make(unsigned n, uint32_t q);
    static LatticeConfig make(unsigned n, const ModulusProfile& p);
};

bool is_prime(uint32_t q);
// q prime and q = 1 mod 2n.
bool supports_ntt(unsigned n, uint32_t q);

struct NttConstants {
    unsigned n = 0;
    uint32_t q = 0;
    uint32_t psi = 0;
    uint32_t omega = 0;
    uint32_t n_inv = 0;
    std::vector<uint32_t> omega_powers;    // omega^j, j < n/2
    std::vector<uint32_t> psi_powers;      // psi^i, i < n
    std::vector<uint32_t> psi_inv_scaled;  // n^-1 psi^-i, i < n

    size_t storage_words() const { return omega_powers.size() + psi_powers.size() + psi_inv_scaled.size(); }
    // Words needed when every stage's forward and inverse twiddles are stored as well.
    static size_t full_storage_words(unsigned n) { return 2 * (n - 1) + 2 * size_t(n); }

    // omega^-e for e < n/2, mirrored from the forward table.
    uint32_t omega_inv_power(unsigned e) const;

    std::string to_text() const;
    static NttConstants parse(const std::string& text);
};

NttConstants gen_constants(const LatticeConfig& cfg);

enum class ButterflyMode { CT, GS };

// CT: (a + w b, a - w b); GS: (a + b, (a - b) w).
std::pair<uint32_t, uint32_t> butterfly(uint32_t a, uint32_t b, uint32_t w, ButterflyMode mode,
                                        const ModulusProfile& p);

enum class NttMode { DIF_NTT, DIT_NTT, DIF_INTT, DIT_INTT };

std::string to_string(NttMode m);
bool is_dit(NttMode m);
bool is_inverse(NttMode m);

// Exponent of the twiddle used by butterfly j in stage s (1-based).
unsigned twiddle_exponent(NttMode mode, unsigned lg_n, unsigned stage, unsigned j);
uint32_t twiddle(const NttConstants& c, NttMode mode, unsigned stage, unsigned j);

uint64_t transform_cycles(unsigned n);
uint64_t psi_cycles(unsigned n);

// Constant-geometry transform from src to dst through the cache, one butterfly per cycle,
// starting at start_cycle. Returns the cycles consumed. src keeps the penultimate stage output.
uint64_t ntt(PolynomialCache& cache, unsigned src, unsigned dst, NttMode mode, const NttConstants& c,
             const ModulusProfile& p, uint64_t start_cycle = 0);

// In place, one coefficient per cycle with a one-cycle write lag.
uint64_t mult_psi(PolynomialCache& cache, unsigned slot, const NttConstants& c, const ModulusProfile& p,
                  uint64_t start_cycle = 0);
uint64_t mult_psi_inv(PolynomialCache& cache, unsigned slot, const NttConstants& c, const ModulusProfile& p,
                      uint64_t start_cycle = 0);

// One constant-geometry stage (1-based) on a plain vector.
std::vector<uint32_t> cg_stage(const std::vector<uint32_t>& a, NttMode mode, unsigned stage, const NttConstants& c,
                               const ModulusProfile& p);
// Same transform on a plain vector (no cache, no ledger).
std::vector<uint32_t> cg_transform(std::vector<uint32_t> a, NttMode mode, const NttConstants& c,
                                   const ModulusProfile& p);

unsigned bit_reverse(unsigned i, unsigned bits);
std::vector<uint32_t> bit_reverse_copy(const std::vector<uint32_t>& a);

// Negacyclic product through mult_psi, DIF_NTT, pointwise MUL, DIT_INTT, mult_psi_inv.
std::vector<uint32_t> ntt_multiply(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b,
                                   const NttConstants& c, const ModulusProfile& p);

}  // namespace sapphire
