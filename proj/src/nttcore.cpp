#include "sapphire/nttcore.hpp"

#include <bit>
#include <sstream>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

uint32_t pow_mod(uint64_t b, uint64_t e, uint32_t q) {
    uint64_t r = 1 % q;
    b %= q;
    while (e) {
        if (e & 1) r = r * b % q;
        b = b * b % q;
        e >>= 1;
    }
    return uint32_t(r);
}

void check_n(unsigned n) {
    if (!std::has_single_bit(n) || n < PolynomialCache::kMinN || n > PolynomialCache::kMaxN)
        throw ConfigError("ring dimension " + std::to_string(n) + " not a power of two in [8, 2048]");
}

}  // namespace

LatticeConfig LatticeConfig::make(unsigned n, uint32_t q) { return make(n, ModulusProfile::for_modulus(q)); }

LatticeConfig LatticeConfig::make(unsigned n, const ModulusProfile& p) {
    check_n(n);
    return {n, p.q, p, unsigned(std::countr_zero(n))};
}

bool is_prime(uint32_t q) {
    if (q < 2) return false;
    for (uint32_t d = 2; uint64_t(d) * d <= q; ++d)
        if (q % d == 0) return false;
    return true;
}

bool supports_ntt(unsigned n, uint32_t q) { return is_prime(q) && q % (2 * uint64_t(n)) == 1; }

uint32_t NttConstants::omega_inv_power(unsigned e) const {
    if (e >= n / 2) throw ContractViolation("twiddle exponent out of range");
    // omega^-e = omega^(n-e) = -omega^(n/2-e)
    return e == 0 ? 1 : q - omega_powers[n / 2 - e];
}

NttConstants gen_constants(const LatticeConfig& cfg) {
    check_n(cfg.n);
    const unsigned n = cfg.n;
    const uint32_t q = cfg.q;
    if (!is_prime(q)) throw ConfigError("NTT modulus " + std::to_string(q) + " is not prime");
    if (q % (2 * uint64_t(n)) != 1)
        throw ConfigError("no 2n-th root of unity: " + std::to_string(q) + " != 1 mod " + std::to_string(2 * n));
    NttConstants c;
    c.n = n;
    c.q = q;
    for (uint32_t g = 2; g < q; ++g) {
        uint32_t cand = pow_mod(g, (q - 1) / (2 * uint64_t(n)), q);
        if (pow_mod(cand, n, q) == q - 1) {
            c.psi = cand;
            break;
        }
    }
    if (c.psi == 0) throw ConfigError("no primitive 2n-th root found");
    c.omega = uint32_t(uint64_t(c.psi) * c.psi % q);
    c.n_inv = pow_mod(n, q - 2, q);
    uint32_t psi_inv = pow_mod(c.psi, q - 2, q);
    c.omega_powers.resize(n / 2);
    c.psi_powers.resize(n);
    c.psi_inv_scaled.resize(n);
    uint64_t w = 1, ps = 1, pi = c.n_inv;
    for (unsigned i = 0; i < n; ++i) {
        if (i < n / 2) c.omega_powers[i] = uint32_t(w);
        c.psi_powers[i] = uint32_t(ps);
        c.psi_inv_scaled[i] = uint32_t(pi);
        w = w * c.omega % q;
        ps = ps * c.psi % q;
        pi = pi * psi_inv % q;
    }
    if (pow_mod(c.omega, n / 2, q) != q - 1) throw ConfigError("omega^(n/2) != -1");
    return c;
}

std::string NttConstants::to_text() const {
    std::ostringstream os;
    os << q << '\n' << n << '\n';
    auto row = [&](const char* name, const std::vector<uint32_t>& v) {
        os << name;
        for (auto x : v) os << ' ' << x;
        os << '\n';
    };
    row("omega_powers", omega_powers);
    row("psi_powers", psi_powers);
    row("psi_inv_scaled", psi_inv_scaled);
    return os.str();
}

NttConstants NttConstants::parse(const std::string& text) {
    std::istringstream is(text);
    NttConstants c;
    if (!(is >> c.q >> c.n)) throw ConfigError("constants: missing q or n");
    check_n(c.n);
    auto row = [&](const char* name, std::vector<uint32_t>& v, size_t len) {
        std::string tag;
        if (!(is >> tag) || tag != name) throw ConfigError(std::string("constants: expected ") + name);
        v.resize(len);
        for (auto& x : v) {
            uint64_t t;
            if (!(is >> t) || t >= c.q) throw ConfigError(std::string("constants: bad entry in ") + name);
            x = uint32_t(t);
        }
    };
    row("omega_powers", c.omega_powers, c.n / 2);
    row("psi_powers", c.psi_powers, c.n);
    row("psi_inv_scaled", c.psi_inv_scaled, c.n);
    c.psi = c.psi_powers[1];
    c.omega = c.omega_powers[1];
    c.n_inv = c.psi_inv_scaled[0];
    const uint64_t q = c.q;
    bool ok = c.psi_powers[0] == 1 && c.omega_powers[0] == 1 && c.omega == uint64_t(c.psi) * c.psi % q &&
              c.n_inv * uint64_t(c.n) % q == 1 && pow_mod(c.psi, c.n, c.q) == q - 1;
    for (unsigned i = 1; ok && i < c.n; ++i) {
        ok = c.psi_powers[i] == c.psi_powers[i - 1] * uint64_t(c.psi) % q &&
             c.psi_inv_scaled[i] * uint64_t(c.psi_powers[i]) % q == c.n_inv;
        if (ok && i < c.n / 2) ok = c.omega_powers[i] == c.omega_powers[i - 1] * uint64_t(c.omega) % q;
    }
    if (!ok) throw ConfigError("constants: tables are inconsistent");
    return c;
}

std::pair<uint32_t, uint32_t> butterfly(uint32_t a, uint32_t b, uint32_t w, ButterflyMode mode,
                                        const ModulusProfile& p) {
    if (mode == ButterflyMode::CT) {
        uint32_t t = mod_mul(b, w, p);
        return {mod_add(a, t, p), mod_sub(a, t, p)};
    }
    return {mod_add(a, b, p), mod_mul(mod_sub(a, b, p), w, p)};
}

std::string to_string(NttMode m) {
    switch (m) {
        case NttMode::DIF_NTT: return "DIF_NTT";
        case NttMode::DIT_NTT: return "DIT_NTT";
        case NttMode::DIF_INTT: return "DIF_INTT";
        case NttMode::DIT_INTT: return "DIT_INTT";
    }
    return "?";
}

bool is_dit(NttMode m) { return m == NttMode::DIT_NTT || m == NttMode::DIT_INTT; }
bool is_inverse(NttMode m) { return m == NttMode::DIF_INTT || m == NttMode::DIT_INTT; }

unsigned twiddle_exponent(NttMode mode, unsigned lg_n, unsigned stage, unsigned j) {
    unsigned shift = is_dit(mode) ? lg_n - stage : stage - 1;
    return (j >> shift) << shift;
}

uint32_t twiddle(const NttConstants& c, NttMode mode, unsigned stage, unsigned j) {
    unsigned e = twiddle_exponent(mode, unsigned(std::countr_zero(c.n)), stage, j);
    return is_inverse(mode) ? c.omega_inv_power(e) : c.omega_powers[e];
}

uint64_t transform_cycles(unsigned n) { return (uint64_t(n) / 2 + 1) * unsigned(std::countr_zero(n)); }
uint64_t psi_cycles(unsigned n) { return uint64_t(n) + 1; }

namespace {

void check_constants(const NttConstants& c, unsigned n, const ModulusProfile& p) {
    if (c.n != n || c.q != p.q || c.omega_powers.size() != n / 2)
        throw ConfigError("NTT constants not loaded for the configured (n, q)");
}

}  // namespace

uint64_t ntt(PolynomialCache& cache, unsigned src, unsigned dst, NttMode mode, const NttConstants& c,
             const ModulusProfile& p, uint64_t start_cycle) {
    const unsigned n = cache.n();
    check_constants(c, n, p);
    if (cache.bank_of(src) == cache.bank_of(dst))
        throw ProgramError("transform source and destination share bank " + std::to_string(cache.bank_of(src)));
    const unsigned lg = unsigned(std::countr_zero(n));
    const bool dit = is_dit(mode);
    const PairKind rd = dit ? PairKind::Adjacent : PairKind::Strided;
    const PairKind wr = dit ? PairKind::Strided : PairKind::Adjacent;
    const ButterflyMode bf = dit ? ButterflyMode::CT : ButterflyMode::GS;
    const HazardMode saved = cache.hazard_mode();
    cache.set_hazard_mode(HazardMode::Fault);

    uint64_t cycle = start_cycle;
    for (unsigned s = 1; s <= lg; ++s) {
        const unsigned from = (s % 2 == 1) ? src : dst;
        const unsigned to = (s % 2 == 1) ? dst : src;
        std::pair<uint32_t, uint32_t> pending{};
        for (unsigned k = 0; k <= n / 2; ++k, ++cycle) {
            cache.begin_cycle(cycle);
            std::pair<uint32_t, uint32_t> next{};
            if (k < n / 2) {
                auto [a, b] = cache.read_pair(from, rd, k);
                next = butterfly(a, b, twiddle(c, mode, s, k), bf, p);
            }
            if (k >= 1) cache.write_pair(to, wr, k - 1, pending.first, pending.second);
            pending = next;
        }
    }
    // Even stage counts end in src's bank; the slot roles are exchanged at no cycle cost.
    if (lg % 2 == 0) cache.swap_slots(src, dst);
    cache.set_hazard_mode(saved);
    return cycle - start_cycle;
}

namespace {

uint64_t scale_slot(PolynomialCache& cache, unsigned slot, const std::vector<uint32_t>& factors,
                    const ModulusProfile& p, uint64_t start_cycle) {
    const unsigned n = cache.n();
    uint64_t cycle = start_cycle;
    uint32_t pending = 0;
    for (unsigned k = 0; k <= n; ++k, ++cycle) {
        cache.begin_cycle(cycle);
        uint32_t next = 0;
        if (k < n) next = mod_mul(cache.read(slot, k), factors[k], p);
        if (k >= 1) cache.write(slot, k - 1, pending);
        pending = next;
    }
    return cycle - start_cycle;
}

}  // namespace

uint64_t mult_psi(PolynomialCache& cache, unsigned slot, const NttConstants& c, const ModulusProfile& p,
                  uint64_t start_cycle) {
    check_constants(c, cache.n(), p);
    return scale_slot(cache, slot, c.psi_powers, p, start_cycle);
}

uint64_t mult_psi_inv(PolynomialCache& cache, unsigned slot, const NttConstants& c, const ModulusProfile& p,
                      uint64_t start_cycle) {
    check_constants(c, cache.n(), p);
    return scale_slot(cache, slot, c.psi_inv_scaled, p, start_cycle);
}

std::vector<uint32_t> cg_stage(const std::vector<uint32_t>& a, NttMode mode, unsigned stage, const NttConstants& c,
                               const ModulusProfile& p) {
    const unsigned n = unsigned(a.size());
    std::vector<uint32_t> out(n);
    for (unsigned j = 0; j < n / 2; ++j) {
        uint32_t w = twiddle(c, mode, stage, j);
        if (is_dit(mode)) {
            auto [x, y] = butterfly(a[2 * j], a[2 * j + 1], w, ButterflyMode::CT, p);
            out[j] = x;
            out[j + n / 2] = y;
        } else {
            auto [x, y] = butterfly(a[j], a[j + n / 2], w, ButterflyMode::GS, p);
            out[2 * j] = x;
            out[2 * j + 1] = y;
        }
    }
    return out;
}

std::vector<uint32_t> cg_transform(std::vector<uint32_t> a, NttMode mode, const NttConstants& c,
                                   const ModulusProfile& p) {
    check_constants(c, unsigned(a.size()), p);
    const unsigned lg = unsigned(std::countr_zero(a.size()));
    for (unsigned s = 1; s <= lg; ++s) a = cg_stage(a, mode, s, c, p);
    return a;
}

unsigned bit_reverse(unsigned i, unsigned bits) {
    unsigned r = 0;
    for (unsigned b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    return r;
}

std::vector<uint32_t> bit_reverse_copy(const std::vector<uint32_t>& a) {
    const unsigned bits = unsigned(std::countr_zero(a.size()));
    std::vector<uint32_t> out(a.size());
    for (unsigned i = 0; i < a.size(); ++i) out[i] = a[bit_reverse(i, bits)];
    return out;
}

std::vector<uint32_t> ntt_multiply(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b,
                                   const NttConstants& c, const ModulusProfile& p) {
    const unsigned n = unsigned(a.size());
    if (b.size() != n) throw ContractViolation("operand lengths differ");
    std::vector<uint32_t> x(n), y(n);
    for (unsigned i = 0; i < n; ++i) {
        x[i] = mod_mul(a[i], c.psi_powers[i], p);
        y[i] = mod_mul(b[i], c.psi_powers[i], p);
    }
    x = cg_transform(std::move(x), NttMode::DIF_NTT, c, p);
    y = cg_transform(std::move(y), NttMode::DIF_NTT, c, p);
    for (unsigned i = 0; i < n; ++i) x[i] = mod_mul(x[i], y[i], p);
    x = cg_transform(std::move(x), NttMode::DIT_INTT, c, p);
    for (unsigned i = 0; i < n; ++i) x[i] = mod_mul(x[i], c.psi_inv_scaled[i], p);
    return x;
}

}  // namespace sapphire
