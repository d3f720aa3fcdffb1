#include "sapphire/protocols.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "sapphire/errors.hpp"
#include "sapphire/keccak.hpp"
#include "sapphire/nttcore.hpp"

namespace sapphire {

namespace {

uint64_t pow_mod(uint64_t b, uint64_t e, uint32_t q) {
    uint64_t r = 1 % q;
    b %= q;
    for (; e; e >>= 1, b = b * b % q)
        if (e & 1) r = r * b % q;
    return r;
}

void run_to_halt(Machine& m, const Program& p) {
    m.load_program(p);
    m.reset();
    CycleReport r = m.run();
    if (!r.halted) throw ProgramError("driver program did not halt");
}

Program with_noise(Program p, unsigned k) {
    for (auto& i : p.code)
        if (i.op == Op::BinSample) i.k = k;
    return p;
}

// NewHope slot plan: bank-1 slots differ between n = 512 and n = 1024.
struct NewHopeSlots {
    unsigned a, b, c, d;
};

NewHopeSlots newhope_slots(unsigned n) { return n == 1024 ? NewHopeSlots{4, 5, 6, 7} : NewHopeSlots{8, 9, 10, 11}; }

unsigned newhope_n(const Machine& m) {
    const auto& cfg = m.state().config;
    if (!cfg) throw ConfigError("NewHope driver: machine is not configured");
    if (cfg->q != kNewHopeQ || (cfg->n != 512 && cfg->n != 1024))
        throw ConfigError("NewHope driver: needs n in {512, 1024} and q = 12289");
    return cfg->n;
}

std::string newhope_name(unsigned n, const char* step) { return "newhope" + std::to_string(n) + "_" + step; }

void require_length(const Poly& p, unsigned n, const char* what) {
    if (p.size() != n) throw ContractViolation(std::string(what) + ": expected " + std::to_string(n) + " coefficients");
}

// ---- Frodo helpers ----

struct TilePlan {
    std::vector<FrodoTile> tiles;
    std::vector<unsigned> offset, real;
    unsigned width = 0;  // configured polynomial length
};

TilePlan plan_for(unsigned dim) {
    TilePlan p;
    p.tiles = frodo_tiling(dim);
    unsigned off = 0;
    for (const auto& t : p.tiles) {
        p.offset.push_back(off);
        p.real.push_back(t.size - t.zeros);
        off += t.size - t.zeros;
        p.width = std::max(p.width, t.size);
    }
    return p;
}

uint32_t frodo_q(const Machine& m, const TilePlan& plan) {
    const auto& cfg = m.state().config;
    if (!cfg) throw ConfigError("Frodo driver: machine is not configured");
    if (cfg->n != plan.width) throw ConfigError("Frodo driver: configured n must equal the largest tile");
    if (cfg->q < 2 || (cfg->q & (cfg->q - 1))) throw ConfigError("Frodo driver: q must be a power of two");
    return cfg->q;
}

void write_mask(Machine& m, const TilePlan& plan, unsigned t) {
    Poly mask(plan.width, 0);
    for (unsigned k = 0; k < plan.real[t]; ++k) mask[k] = 1;
    m.write_slot(2, mask);
}

uint16_t a_counter(const TilePlan& plan, unsigned row, unsigned t) {
    return uint16_t(row * plan.tiles.size() + t);
}

std::vector<uint32_t> sample_chunk(Prng prng, const Seed& seed, uint16_t c0, uint16_t c1, unsigned size, uint32_t q,
                                   bool gaussian, const CdtTable& table) {
    KeccakState s = seeded_prng(prng, seed, c0, c1);
    if (gaussian) return to_residues(cdt_sample(size, table, s), q);
    return rej_sample(size, RejectionPlan::for_modulus(q), s);
}

}  // namespace

// ---- program corpus ----

std::string programs_dir() {
    if (const char* d = std::getenv("SAPPHIRE_PROGRAMS_DIR"); d && *d) return d;
    return std::string(SAPPHIRE_SOURCE_DIR) + "/programs";
}

const Program& corpus_program(const std::string& name) {
    static std::mutex mu;
    static std::map<std::string, Program> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(name); it != cache.end()) return it->second;
    const std::string path = programs_dir() + "/" + name + ".sph";
    std::ifstream in(path);
    if (!in) throw ProgramError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return cache.emplace(name, assemble(ss.str())).first->second;
}

// ---- hex ----

namespace {

std::vector<uint8_t> unhex(const std::string& h) {
    if (h.size() % 2) throw ContractViolation("hex string has odd length");
    std::vector<uint8_t> out(h.size() / 2);
    auto nib = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return unsigned(c - '0');
        if (c >= 'a' && c <= 'f') return unsigned(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return unsigned(c - 'A' + 10);
        throw ContractViolation(std::string("bad hex digit '") + c + "'");
    };
    for (size_t i = 0; i < out.size(); ++i) out[i] = uint8_t(nib(h[2 * i]) << 4 | nib(h[2 * i + 1]));
    return out;
}

std::string hex(const uint8_t* p, size_t n) {
    static const char* d = "0123456789abcdef";
    std::string s;
    s.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        s += d[p[i] >> 4];
        s += d[p[i] & 15];
    }
    return s;
}

}  // namespace

std::string poly_to_hex(const Poly& p) {
    std::vector<uint8_t> b;
    b.reserve(3 * p.size());
    for (uint32_t c : p) {
        if (c >> 24) throw ContractViolation("coefficient exceeds 24 bits");
        b.push_back(uint8_t(c));
        b.push_back(uint8_t(c >> 8));
        b.push_back(uint8_t(c >> 16));
    }
    return hex(b.data(), b.size());
}

Poly poly_from_hex(const std::string& h) {
    auto b = unhex(h);
    if (b.size() % 3) throw ContractViolation("polynomial hex is not a whole number of 3-byte coefficients");
    Poly p(b.size() / 3);
    for (size_t i = 0; i < p.size(); ++i) p[i] = b[3 * i] | uint32_t(b[3 * i + 1]) << 8 | uint32_t(b[3 * i + 2]) << 16;
    return p;
}

std::string message_to_hex(const Message256& m) { return hex(m.data(), m.size()); }

Message256 message_from_hex(const std::string& h) {
    auto b = unhex(h);
    if (b.size() != 32) throw ContractViolation("message must be 32 bytes");
    Message256 m;
    std::copy(b.begin(), b.end(), m.begin());
    return m;
}

// ---- NewHope ----

Poly newhope_encode(const Message256& m, unsigned n, uint32_t q) {
    if (n < 256 || n % 256) throw ContractViolation("NewHope encode needs n a multiple of 256");
    Poly v(n, 0);
    for (unsigned i = 0; i < 256; ++i)
        if (m[i / 8] >> (i % 8) & 1)
            for (unsigned j = 0; j < n / 256; ++j) v[i + 256 * j] = q / 2;
    return v;
}

Message256 newhope_decode(const Poly& v, uint32_t q) {
    const size_t n = v.size();
    if (n < 256 || n % 256) throw ContractViolation("NewHope decode needs n a multiple of 256");
    const uint64_t groups = n / 256, half = q / 2;
    Message256 m{};
    for (unsigned i = 0; i < 256; ++i) {
        uint64_t sum = 0;
        for (unsigned j = 0; j < groups; ++j) {
            uint64_t c = v[i + 256 * j] % q;
            sum += c > half ? c - half : half - c;
        }
        if (4 * sum <= groups * q) m[i / 8] |= uint8_t(1u << (i % 8));
    }
    return m;
}

CpaKeyPair newhope_keygen(Machine& m, const Seed& seed, unsigned k) {
    const unsigned n = newhope_n(m);
    const auto s = newhope_slots(n);
    m.write_seed(0, seed);
    run_to_halt(m, with_noise(corpus_program(newhope_name(n, "keygen")), k));
    CpaKeyPair kp;
    kp.pk.a_hat = m.read_slot(3);
    kp.pk.b_hat = m.read_slot(s.b);
    kp.sk.s_hat = m.read_slot(s.a);
    return kp;
}

CpaCiphertext newhope_encrypt(Machine& m, const CpaPublicKey& pk, const Seed& coin, const Message256& mu, unsigned k) {
    const unsigned n = newhope_n(m);
    const auto s = newhope_slots(n);
    require_length(pk.a_hat, n, "a_hat");
    require_length(pk.b_hat, n, "b_hat");
    m.write_seed(1, coin);
    m.write_slot(0, pk.a_hat);
    m.write_slot(3, pk.b_hat);
    m.write_slot(s.d, newhope_encode(mu, n, kNewHopeQ));
    run_to_halt(m, with_noise(corpus_program(newhope_name(n, "encrypt")), k));
    return {m.read_slot(s.b), m.read_slot(s.d)};
}

Message256 newhope_decrypt(Machine& m, const CpaSecretKey& sk, const CpaCiphertext& ct) {
    const unsigned n = newhope_n(m);
    const auto s = newhope_slots(n);
    require_length(sk.s_hat, n, "s_hat");
    require_length(ct.u_hat, n, "u_hat");
    require_length(ct.v_prime, n, "v'");
    m.write_slot(0, sk.s_hat);
    m.write_slot(s.a, ct.u_hat);
    m.write_slot(s.b, ct.v_prime);
    run_to_halt(m, corpus_program(newhope_name(n, "decrypt")));
    return newhope_decode(m.read_slot(1), kNewHopeQ);
}

CpaCiphertext ciphertext_add(const CpaCiphertext& a, const CpaCiphertext& b, uint32_t q) {
    if (a.u_hat.size() != b.u_hat.size() || a.v_prime.size() != b.v_prime.size())
        throw ContractViolation("ciphertext lengths differ");
    CpaCiphertext c = a;
    for (size_t i = 0; i < c.u_hat.size(); ++i) c.u_hat[i] = uint32_t((uint64_t(a.u_hat[i]) + b.u_hat[i]) % q);
    for (size_t i = 0; i < c.v_prime.size(); ++i) c.v_prime[i] = uint32_t((uint64_t(a.v_prime[i]) + b.v_prime[i]) % q);
    return c;
}

Mask derive_mask(const Seed& mask_seed) {
    auto bytes = shake256(mask_seed, 64);
    Mask mk;
    std::copy(bytes.begin(), bytes.begin() + 32, mk.mu_r.begin());
    std::copy(bytes.begin() + 32, bytes.end(), mk.coin.begin());
    return mk;
}

Message256 masked_decrypt(Machine& m, const CpaPublicKey& pk, const CpaSecretKey& sk, const CpaCiphertext& ct,
                          const Mask& mask, unsigned k) {
    CpaCiphertext cr = newhope_encrypt(m, pk, mask.coin, mask.mu_r, k);
    Message256 masked = newhope_decrypt(m, sk, ciphertext_add(ct, cr, kNewHopeQ));
    for (size_t i = 0; i < masked.size(); ++i) masked[i] ^= mask.mu_r[i];
    return masked;
}

// ---- Kyber ----

std::array<Poly, 2> kyber_as_plus_e(Machine& m, const Seed& rho, const Seed& sigma) {
    const auto& cfg = m.state().config;
    if (!cfg || cfg->n != kKyberN || cfg->q != kKyberQ)
        throw ConfigError("Kyber driver: machine must be configured with n = 256, q = 7681");
    m.write_seed(0, rho);
    m.write_seed(1, sigma);
    run_to_halt(m, corpus_program("kyber_as_e"));
    return {m.read_slot(24), m.read_slot(25)};
}

std::array<Poly, 2> kyber_as_plus_e_reference(const Seed& rho, const Seed& sigma) {
    const unsigned n = kKyberN;
    const uint32_t q = kKyberQ;
    const unsigned lg = 8;
    const uint64_t psi = gen_constants(LatticeConfig::make(n, q)).psi;
    const uint64_t psi_inv = pow_mod(psi, q - 2, q);
    const uint64_t n_inv = pow_mod(n, q - 2, q);
    std::vector<uint64_t> omega_inv_pow(n), psi_inv_pow(n);
    for (unsigned i = 0; i < n; ++i) {
        omega_inv_pow[i] = pow_mod(psi_inv, 2 * i, q);
        psi_inv_pow[i] = pow_mod(psi_inv, i, q);
    }
    // a_j = n^-1 psi^-j sum_t X[t] omega^-jt, where the transform slot holds X in bit-reversed order
    auto interpolate = [&](const Poly& hat) {
        Poly a(n);
        for (unsigned j = 0; j < n; ++j) {
            uint64_t acc = 0;
            for (unsigned t = 0; t < n; ++t) acc = (acc + hat[bit_reverse(t, lg)] * omega_inv_pow[(j * t) % n]) % q;
            a[j] = uint32_t(acc * psi_inv_pow[j] % q * n_inv % q);
        }
        return a;
    };
    auto schoolbook = [&](const Poly& a, const Poly& b, std::vector<uint64_t>& acc) {
        for (unsigned i = 0; i < n; ++i)
            for (unsigned j = 0; j < n; ++j) {
                uint64_t p = uint64_t(a[i]) * b[j] % q;
                unsigned k = i + j;
                if (k < n) acc[k] = (acc[k] + p) % q;
                else acc[k - n] = (acc[k - n] + q - p) % q;
            }
    };
    auto binomial = [&](uint16_t c1) {
        KeccakState s = seeded_prng(Prng::Shake256, sigma, 0, c1);
        return to_residues(bin_sample(n, 3, s), q);
    };
    std::array<Poly, 2> sv = {binomial(0), binomial(1)};
    std::array<Poly, 2> out;
    for (unsigned i = 0; i < 2; ++i) {
        std::vector<uint64_t> acc(n, 0);
        for (unsigned j = 0; j < 2; ++j) {
            KeccakState s = seeded_prng(Prng::Shake128, rho, uint16_t(j), uint16_t(i));
            schoolbook(interpolate(rej_sample(n, RejectionPlan::for_modulus(q), s)), sv[j], acc);
        }
        Poly e = binomial(uint16_t(2 + i));
        out[i].resize(n);
        for (unsigned k = 0; k < n; ++k) out[i][k] = uint32_t((acc[k] + e[k]) % q);
    }
    return out;
}

// ---- Frodo ----

std::vector<FrodoTile> frodo_tiling(unsigned dim) {
    switch (dim) {
        case 640: return {{512, 0}, {128, 0}};
        case 976: return {{1024, 48}};
        case 1344: return {{1024, 0}, {512, 192}};
        case 80: return {{64, 0}, {16, 0}};
        case 122: return {{128, 6}};
        case 168: return {{128, 0}, {64, 24}};
        default: throw ContractViolation("unsupported Frodo dimension " + std::to_string(dim));
    }
}

bool frodo_single_column(unsigned dim) { return dim == 1344 || dim == 168; }

CdtTable frodo_cdt_table() { return CdtTable::gaussian(2.75, 11, 31); }

FrodoMatrices frodo_matrices(unsigned dim, uint32_t q, const Seed& seed_a, const Seed& seed_s) {
    const TilePlan plan = plan_for(dim);
    const CdtTable table = frodo_cdt_table();
    const unsigned nbar = kFrodoNbar;
    FrodoMatrices fm;
    fm.a = {dim, dim, std::vector<uint32_t>(size_t(dim) * dim)};
    fm.s = fm.e = {dim, nbar, std::vector<uint32_t>(size_t(dim) * nbar)};
    fm.sp = fm.ep = {nbar, dim, std::vector<uint32_t>(size_t(dim) * nbar)};
    for (unsigned t = 0; t < plan.tiles.size(); ++t) {
        const unsigned size = plan.tiles[t].size, off = plan.offset[t];
        for (unsigned i = 0; i < dim; ++i) {
            auto row = sample_chunk(Prng::Shake128, seed_a, a_counter(plan, i, t), 0, size, q, false, table);
            for (unsigned k = 0; k < plan.real[t]; ++k) fm.a.at(i, off + k) = row[k];
        }
        for (unsigned j = 0; j < nbar; ++j) {
            auto s = sample_chunk(Prng::Shake256, seed_s, uint16_t(j), uint16_t(t), size, q, true, table);
            auto e = sample_chunk(Prng::Shake256, seed_s, uint16_t(nbar + j), uint16_t(t), size, q, true, table);
            auto sp = sample_chunk(Prng::Shake256, seed_s, uint16_t(2 * nbar + j), uint16_t(t), size, q, true, table);
            auto ep = sample_chunk(Prng::Shake256, seed_s, uint16_t(3 * nbar + j), uint16_t(t), size, q, true, table);
            for (unsigned k = 0; k < plan.real[t]; ++k) {
                fm.s.at(off + k, j) = s[k];
                fm.e.at(off + k, j) = e[k];
                fm.sp.at(j, off + k) = sp[k];
                fm.ep.at(j, off + k) = ep[k];
            }
        }
    }
    return fm;
}

Matrix frodo_as_plus_e_reference(const FrodoMatrices& fm, uint32_t q) {
    Matrix out = fm.e;
    for (unsigned i = 0; i < fm.a.rows; ++i)
        for (unsigned j = 0; j < fm.s.cols; ++j) {
            uint64_t acc = fm.e.at(i, j);
            for (unsigned k = 0; k < fm.a.cols; ++k) acc += uint64_t(fm.a.at(i, k)) * fm.s.at(k, j);
            out.at(i, j) = uint32_t(acc % q);
        }
    return out;
}

Matrix frodo_sa_plus_e_reference(const FrodoMatrices& fm, uint32_t q) {
    Matrix out = fm.ep;
    for (unsigned j = 0; j < fm.sp.rows; ++j)
        for (unsigned c = 0; c < fm.a.cols; ++c) {
            uint64_t acc = fm.ep.at(j, c);
            for (unsigned i = 0; i < fm.a.rows; ++i) acc += uint64_t(fm.sp.at(j, i)) * fm.a.at(i, c);
            out.at(j, c) = uint32_t(acc % q);
        }
    return out;
}

Matrix frodo_as_plus_e(Machine& m, unsigned dim, const Seed& seed_a, const Seed& seed_s) {
    const TilePlan plan = plan_for(dim);
    const uint32_t q = frodo_q(m, plan);
    const unsigned nbar = kFrodoNbar;
    const bool single = frodo_single_column(dim);
    const unsigned step = single ? 1 : 2;
    const Program& sample = corpus_program(single ? "frodo_sample_one" : "frodo_sample_pair");
    const Program& inner = corpus_program(single ? "frodo_as_one" : "frodo_as_pair");
    m.write_seed(0, seed_a);
    m.write_seed(1, seed_s);
    m.load_cdt(frodo_cdt_table());

    Matrix out{dim, nbar, std::vector<uint32_t>(size_t(dim) * nbar, 0)};
    auto accumulate = [&](unsigned i, unsigned j, uint32_t v) { out.at(i, j) = uint32_t((uint64_t(out.at(i, j)) + v) % q); };
    for (unsigned j = 0; j < nbar; j += step) {
        for (unsigned t = 0; t < plan.tiles.size(); ++t) {
            write_mask(m, plan, t);
            m.set_counters(uint16_t(j), uint16_t(t));
            run_to_halt(m, sample);
            for (unsigned i = 0; i < dim; ++i) {
                m.set_counters(a_counter(plan, i, t), 0);
                run_to_halt(m, inner);
                if (single) {
                    accumulate(i, j, m.state().reg);
                } else {
                    accumulate(i, j, m.state().tmp);
                    accumulate(i, j + 1, m.state().reg);
                }
            }
            // E columns for this tile
            write_mask(m, plan, t);
            m.set_counters(uint16_t(nbar + j), uint16_t(t));
            run_to_halt(m, sample);
            for (unsigned c = 0; c < step; ++c) {
                Poly e = m.read_slot(c);
                for (unsigned k = 0; k < plan.real[t]; ++k) accumulate(plan.offset[t] + k, j + c, e[k]);
            }
        }
    }
    return out;
}

Matrix frodo_sa_plus_e(Machine& m, unsigned dim, const Seed& seed_a, const Seed& seed_s) {
    const TilePlan plan = plan_for(dim);
    const uint32_t q = frodo_q(m, plan);
    const unsigned nbar = kFrodoNbar;
    const bool single = frodo_single_column(dim);
    const unsigned step = single ? 1 : 2;
    const Program& sample = corpus_program(single ? "frodo_sample_one" : "frodo_sample_pair");
    const Program& inner = corpus_program(single ? "frodo_sa_one" : "frodo_sa_pair");
    const Program& init = corpus_program("frodo_init_acc");
    m.write_seed(0, seed_a);
    m.write_seed(1, seed_s);
    m.load_cdt(frodo_cdt_table());

    Matrix out{nbar, dim, std::vector<uint32_t>(size_t(dim) * nbar, 0)};
    for (unsigned j = 0; j < nbar; j += step) {
        for (unsigned t = 0; t < plan.tiles.size(); ++t) {
            run_to_halt(m, init);
            for (unsigned u = 0; u < plan.tiles.size(); ++u) {
                write_mask(m, plan, u);
                m.set_counters(uint16_t(2 * nbar + j), uint16_t(u));
                run_to_halt(m, sample);
                for (unsigned k = 0; k < plan.real[u]; ++k) {
                    m.set_counters(a_counter(plan, plan.offset[u] + k, t), uint16_t(k));
                    run_to_halt(m, inner);
                }
            }
            std::array<Poly, 2> acc;
            for (unsigned c = 0; c < step; ++c) acc[c] = m.read_slot(6 + c);
            write_mask(m, plan, t);
            m.set_counters(uint16_t(3 * nbar + j), uint16_t(t));
            run_to_halt(m, sample);
            for (unsigned c = 0; c < step; ++c) {
                Poly e = m.read_slot(c);
                for (unsigned k = 0; k < plan.real[t]; ++k)
                    out.at(j + c, plan.offset[t] + k) = uint32_t((uint64_t(acc[c][k]) + e[k]) % q);
            }
        }
    }
    return out;
}

}  // namespace sapphire
