#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sapphire/keccak.hpp"

namespace sapphire {

enum class Prng { Shake128, Shake256 };

using Seed = std::array<uint8_t, 32>;

// Sponge absorbing seed (32 bytes) || c0 (LE16) || c1 (LE16), finalized and ready to squeeze.
KeccakState seeded_prng(Prng prng, const Seed& seed, uint16_t c0, uint16_t c1);

// Work counters feeding the machine's cycle model.
struct SamplerStats {
    uint64_t words = 0;        // 32-bit PRNG words consumed
    uint64_t samples = 0;      // coefficients written
    uint64_t candidates = 0;   // rejection-style draws
    uint64_t rejected = 0;
    uint64_t comparisons = 0;  // CDT table comparisons
};

// Pulls 32-bit words from a sponge and counts them.
class WordSource {
public:
    WordSource(KeccakState& s, SamplerStats* stats) : s_(s), stats_(stats) {}
    uint32_t next();

private:
    KeccakState& s_;
    SamplerStats* stats_;
};

uint32_t low_mask(unsigned bits);
int64_t centered(uint32_t residue, uint32_t q);
uint32_t to_residue(int64_t v, uint32_t q);
std::vector<uint32_t> to_residues(const std::vector<int32_t>& v, uint32_t q);

// ---- rejection sampling over Z_q ----

struct RejectionPlan {
    uint32_t q = 0;
    uint32_t scale = 1;
    unsigned cand_bits = 0;  // ceil(lg(scale * q))
    uint32_t reduce_m = 0;   // floor(2^reduce_k / q)
    unsigned reduce_k = 0;

    static RejectionPlan make(uint32_t q, uint32_t scale);
    // Uses the scaling factor of the rejection-probability table (1 for unlisted moduli).
    static RejectionPlan for_modulus(uint32_t q);

    uint64_t bound() const { return uint64_t(scale) * q; }
    double rejection_probability() const;
    bool accepts(uint32_t candidate) const { return candidate < bound(); }
    // [0, scale*q) -> [0, q) with one small Barrett step.
    uint32_t fold(uint32_t v) const;
};

uint32_t default_rejection_scale(uint32_t q);

std::vector<uint32_t> rej_sample(size_t n, const RejectionPlan& plan, KeccakState& prng,
                                 SamplerStats* stats = nullptr);

// ---- centered binomial ----

int bin_value(uint32_t a, uint32_t b, unsigned k);
std::vector<int32_t> bin_sample(size_t n, unsigned k, KeccakState& prng, SamplerStats* stats = nullptr);

// ---- CDT inversion sampling ----

struct CdtTable {
    unsigned r = 0;                 // precision, r1 in [0, 2^r)
    std::vector<uint32_t> entries;  // T[0..s-1]

    unsigned s() const { return unsigned(entries.size()); }
    void validate() const;
    // Table for a discrete Gaussian of parameter sigma truncated to [-s, s].
    static CdtTable gaussian(double sigma, unsigned s, unsigned r = 31);
    static CdtTable parse(const std::string& text);
    std::string to_text() const;
    // Output distribution implied by the table, indexed v + s for v in [-s, s].
    std::vector<double> pmf() const;
};

struct CdtConfig {
    double sigma;
    unsigned s;
};
// The three discrete-Gaussian parameter rows measured on the chip.
const std::array<CdtConfig, 3>& reference_cdt_configs();

// Full-table scan; adds s to *comparisons.
int cdt_value(unsigned r0, uint32_t r1, const CdtTable& t, uint64_t* comparisons = nullptr);
std::vector<int32_t> cdt_sample(size_t n, const CdtTable& t, KeccakState& prng, SamplerStats* stats = nullptr);

// ---- uniform over [-eta, eta] ----

std::vector<int32_t> uni_sample(size_t n, uint32_t eta, unsigned bitlen, KeccakState& prng,
                                SamplerStats* stats = nullptr);

// ---- trinary ----

std::vector<int32_t> tri_sample_fixed(size_t n, size_t m, KeccakState& prng, SamplerStats* stats = nullptr);
std::vector<int32_t> tri_sample_split(size_t n, size_t m0, size_t m1, KeccakState& prng,
                                      SamplerStats* stats = nullptr);
std::vector<int32_t> tri_sample_prob(size_t n, unsigned k, KeccakState& prng, SamplerStats* stats = nullptr);
// Coefficient for one draw x in [0, 2^k): 0 -> +1, 1 -> -1, else 0.
int tri_prob_value(uint32_t x);

}  // namespace sapphire
