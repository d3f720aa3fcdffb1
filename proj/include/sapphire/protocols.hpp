#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sapphire/isa.hpp"
#include "sapphire/machine.hpp"
#include "sapphire/sampler.hpp"

namespace sapphire {

using Poly = std::vector<uint32_t>;
using Message256 = std::array<uint8_t, 32>;

// ---- program corpus ----

// Directory holding the .sph corpus: $SAPPHIRE_PROGRAMS_DIR, else <source>/programs.
std::string programs_dir();
// Assembles programs/<name>.sph once and caches the result.
const Program& corpus_program(const std::string& name);

// ---- hex import / export (3 bytes per coefficient, little-endian) ----

std::string poly_to_hex(const Poly& p);
Poly poly_from_hex(const std::string& hex);
std::string message_to_hex(const Message256& m);
Message256 message_from_hex(const std::string& hex);

// ---- NewHope CPA-PKE ----

constexpr uint32_t kNewHopeQ = 12289;
constexpr unsigned kNewHopeK = 8;

struct CpaPublicKey {
    Poly a_hat, b_hat;
    bool operator==(const CpaPublicKey&) const = default;
};
struct CpaSecretKey {
    Poly s_hat;
    bool operator==(const CpaSecretKey&) const = default;
};
struct CpaKeyPair {
    CpaPublicKey pk;
    CpaSecretKey sk;
};
struct CpaCiphertext {
    Poly u_hat, v_prime;
    bool operator==(const CpaCiphertext&) const = default;
};

// Each bit i sets coefficients i + 256 j (j < n/256) to 0 or floor(q/2).
Poly newhope_encode(const Message256& m, unsigned n, uint32_t q);
// Bit i is 0 iff sum_j |c - floor(q/2)| over its group exceeds (n/256) q / 4 (q itself at n = 1024).
Message256 newhope_decode(const Poly& v, uint32_t q);

// The machine must be configured with n in {512, 1024} and q = 12289. k overrides the binomial parameter.
CpaKeyPair newhope_keygen(Machine& m, const Seed& seed, unsigned k = kNewHopeK);
CpaCiphertext newhope_encrypt(Machine& m, const CpaPublicKey& pk, const Seed& coin, const Message256& mu,
                              unsigned k = kNewHopeK);
Message256 newhope_decrypt(Machine& m, const CpaSecretKey& sk, const CpaCiphertext& ct);

CpaCiphertext ciphertext_add(const CpaCiphertext& a, const CpaCiphertext& b, uint32_t q);

struct Mask {
    Message256 mu_r{};
    Seed coin{};
};
// Derives mu_r and the encryption coin from a seed with SHAKE-256.
Mask derive_mask(const Seed& mask_seed);
// Encrypts mu_r under pk, adds it to ct, decrypts the sum and removes mu_r.
Message256 masked_decrypt(Machine& m, const CpaPublicKey& pk, const CpaSecretKey& sk, const CpaCiphertext& ct,
                          const Mask& mask, unsigned k = kNewHopeK);

// ---- Kyber A*s + e (rank 2, n = 256, q = 7681) ----

constexpr unsigned kKyberN = 256;
constexpr uint32_t kKyberQ = 7681;

// Runs the listing with r0 = rho (A) and r1 = sigma (s, e); returns slots 24 and 25.
std::array<Poly, 2> kyber_as_plus_e(Machine& m, const Seed& rho, const Seed& sigma);
// Same quantity on the host: A recovered from its transform by direct interpolation, schoolbook products.
std::array<Poly, 2> kyber_as_plus_e_reference(const Seed& rho, const Seed& sigma);

// ---- Frodo matrix kernels ----

struct FrodoTile {
    unsigned size = 0;   // polynomial length of the tile
    unsigned zeros = 0;  // zero-padded tail elements
    bool operator==(const FrodoTile&) const = default;
};
// Split of a Frodo dimension into power-of-two arrays. Accepts 640, 976, 1344 and the
// reduced dimensions 80, 122, 168 (all sizes divided by 8).
std::vector<FrodoTile> frodo_tiling(unsigned dim);
bool frodo_single_column(unsigned dim);

constexpr unsigned kFrodoNbar = 8;

// Row-major dim x nbar (AS + E) or nbar x dim (S'A + E') matrix of residues.
struct Matrix {
    unsigned rows = 0, cols = 0;
    std::vector<uint32_t> v;
    uint32_t& at(unsigned r, unsigned c) { return v[size_t(r) * cols + c]; }
    uint32_t at(unsigned r, unsigned c) const { return v[size_t(r) * cols + c]; }
    bool operator==(const Matrix&) const = default;
};

// Matrix entries as defined by the kernels' sampler calls; used by the dense host reference.
struct FrodoMatrices {
    Matrix a;       // dim x dim
    Matrix s, e;    // dim x nbar
    Matrix sp, ep;  // nbar x dim
};
CdtTable frodo_cdt_table();
FrodoMatrices frodo_matrices(unsigned dim, uint32_t q, const Seed& seed_a, const Seed& seed_s);

// The machine must be configured with n = the largest tile of frodo_tiling(dim) and a power-of-two q.
// seed_a drives A (r0), seed_s drives S, E, S', E' (r1).
Matrix frodo_as_plus_e(Machine& m, unsigned dim, const Seed& seed_a, const Seed& seed_s);
Matrix frodo_sa_plus_e(Machine& m, unsigned dim, const Seed& seed_a, const Seed& seed_s);

// Dense products mod q.
Matrix frodo_as_plus_e_reference(const FrodoMatrices& fm, uint32_t q);
Matrix frodo_sa_plus_e_reference(const FrodoMatrices& fm, uint32_t q);

}  // namespace sapphire
