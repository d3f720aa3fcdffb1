#include "sapphire/sampler.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

struct ScaleRow {
    uint32_t q, scale;
};
constexpr ScaleRow kScales[] = {
    {7681, 1},    {12289, 5},   {40961, 3},   {65537, 7},   {120833, 1},  {133121, 7},
    {184321, 11}, {8380417, 1}, {8058881, 1}, {4205569, 7}, {4206593, 7}, {8404993, 7},
};

unsigned bits_for(uint64_t bound) {
    unsigned b = 0;
    while ((uint64_t(1) << b) < bound) ++b;
    return b;
}

void require_pow2(size_t n) {
    if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("dimension must be a power of two");
}

}  // namespace

KeccakState seeded_prng(Prng prng, const Seed& seed, uint16_t c0, uint16_t c1) {
    KeccakState s(prng == Prng::Shake128 ? SpongeMode::Shake128 : SpongeMode::Shake256);
    uint8_t block[36];
    std::copy(seed.begin(), seed.end(), block);
    block[32] = uint8_t(c0);
    block[33] = uint8_t(c0 >> 8);
    block[34] = uint8_t(c1);
    block[35] = uint8_t(c1 >> 8);
    s.absorb(block);
    s.finalize();
    return s;
}

uint32_t WordSource::next() {
    if (stats_) ++stats_->words;
    return s_.squeeze_word();
}

uint32_t low_mask(unsigned bits) { return bits >= 32 ? 0xFFFFFFFFu : (1u << bits) - 1; }

int64_t centered(uint32_t residue, uint32_t q) { return residue > q / 2 ? int64_t(residue) - q : int64_t(residue); }

uint32_t to_residue(int64_t v, uint32_t q) {
    int64_t r = v % int64_t(q);
    return uint32_t(r < 0 ? r + q : r);
}

std::vector<uint32_t> to_residues(const std::vector<int32_t>& v, uint32_t q) {
    std::vector<uint32_t> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = to_residue(v[i], q);
    return out;
}

// ---- rejection ----

uint32_t default_rejection_scale(uint32_t q) {
    for (auto row : kScales)
        if (row.q == q) return row.scale;
    return 1;
}

RejectionPlan RejectionPlan::make(uint32_t q, uint32_t scale) {
    if (q < 2 || q >= (1u << 24)) throw ConfigError("rejection modulus out of range");
    if (scale < 1) throw ConfigError("rejection scale must be at least 1");
    RejectionPlan p;
    p.q = q;
    p.scale = scale;
    p.cand_bits = bits_for(uint64_t(scale) * q);
    if (p.cand_bits > 32) throw ConfigError("scaled rejection bound exceeds one PRNG word");
    // (2^k - m q) < q and v < 2^k keep the quotient error below one
    p.reduce_k = p.cand_bits;
    p.reduce_m = uint32_t((uint64_t(1) << p.reduce_k) / q);
    return p;
}

RejectionPlan RejectionPlan::for_modulus(uint32_t q) { return make(q, default_rejection_scale(q)); }

double RejectionPlan::rejection_probability() const {
    return 1.0 - double(bound()) / std::ldexp(1.0, int(cand_bits));
}

uint32_t RejectionPlan::fold(uint32_t v) const {
    uint64_t t = (uint64_t(v) * reduce_m) >> reduce_k;
    auto z = uint32_t(uint64_t(v) - t * q);
    uint32_t d = z - q;
    uint32_t mask = 0u - (d >> 31);
    return (z & mask) | (d & ~mask);
}

std::vector<uint32_t> rej_sample(size_t n, const RejectionPlan& plan, KeccakState& prng, SamplerStats* stats) {
    WordSource src(prng, stats);
    std::vector<uint32_t> out;
    out.reserve(n);
    const uint32_t mask = low_mask(plan.cand_bits);
    while (out.size() < n) {
        uint32_t c = src.next() & mask;
        if (stats) ++stats->candidates;
        if (plan.accepts(c)) {
            out.push_back(plan.fold(c));
            if (stats) ++stats->samples;
        } else if (stats) {
            ++stats->rejected;
        }
    }
    return out;
}

// ---- binomial ----

int bin_value(uint32_t a, uint32_t b, unsigned k) {
    uint32_t m = low_mask(k);
    return std::popcount(a & m) - std::popcount(b & m);
}

std::vector<int32_t> bin_sample(size_t n, unsigned k, KeccakState& prng, SamplerStats* stats) {
    if (k < 1 || k > 32) throw ConfigError("binomial parameter k must lie in [1, 32]");
    WordSource src(prng, stats);
    std::vector<int32_t> out(n);
    for (auto& v : out) {
        uint32_t a = src.next();
        uint32_t b = src.next();
        v = bin_value(a, b, k);
        if (stats) ++stats->samples;
    }
    return out;
}

// ---- CDT ----

void CdtTable::validate() const {
    if (r < 1 || r > 32) throw ConfigError("CDT precision r must lie in [1, 32]");
    if (entries.empty() || entries.size() > 64) throw ConfigError("CDT support bound s must lie in [1, 64]");
    uint64_t lim = uint64_t(1) << r;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i] >= lim) throw ConfigError("CDT entry not below 2^r");
        if (i && entries[i] < entries[i - 1]) throw ConfigError("CDT entries must be nondecreasing");
    }
}

CdtTable CdtTable::gaussian(double sigma, unsigned s, unsigned r) {
    if (sigma <= 0) throw ConfigError("sigma must be positive");
    std::vector<long double> w(s + 1);
    long double total = 0;
    for (unsigned i = 0; i <= s; ++i) {
        w[i] = std::exp(-(long double)(i) * i / (2.0L * sigma * sigma));
        total += i ? 2 * w[i] : w[i];
    }
    CdtTable t;
    t.r = r;
    const long double scale = std::ldexp(1.0L, int(r));
    const auto top = uint64_t(scale) - 2;
    long double cum = 0;
    uint64_t prev = 0;
    for (unsigned z = 0; z < s; ++z) {
        cum += (z ? 2 * w[z] : w[z]) / total;
        long double v = std::round(scale * cum) - 1;
        uint64_t e = v < 0 ? 0 : uint64_t(v);
        if (e > top) e = top;
        if (e < prev) e = prev;
        t.entries.push_back(uint32_t(e));
        prev = e;
    }
    t.validate();
    return t;
}

CdtTable CdtTable::parse(const std::string& text) {
    std::istringstream in(text);
    CdtTable t;
    unsigned s = 0;
    if (!(in >> t.r >> s)) throw ConfigError("CDT file must start with precision r and bound s");
    if (s > 64) throw ConfigError("CDT support bound s must lie in [1, 64]");
    for (unsigned i = 0; i < s; ++i) {
        uint64_t v;
        if (!(in >> v)) throw ConfigError("CDT file holds fewer than s entries");
        if (v > 0xFFFFFFFFull) throw ConfigError("CDT entry exceeds 32 bits");
        t.entries.push_back(uint32_t(v));
    }
    std::string extra;
    if (in >> extra) throw ConfigError("CDT file holds more than s entries");
    t.validate();
    return t;
}

std::string CdtTable::to_text() const {
    std::ostringstream out;
    out << r << "\n" << s() << "\n";
    for (auto e : entries) out << e << "\n";
    return out.str();
}

std::vector<double> CdtTable::pmf() const {
    const double scale = std::ldexp(1.0, int(r));
    const unsigned S = s();
    std::vector<double> mag(S + 1);
    mag[0] = (double(entries[0]) + 1) / scale;
    for (unsigned z = 1; z < S; ++z) mag[z] = double(entries[z] - entries[z - 1]) / scale;
    mag[S] = (scale - 1 - double(entries[S - 1])) / scale;
    std::vector<double> out(2 * S + 1);
    out[S] = mag[0];
    for (unsigned z = 1; z <= S; ++z) out[S + z] = out[S - z] = mag[z] / 2;
    return out;
}

const std::array<CdtConfig, 3>& reference_cdt_configs() {
    static const std::array<CdtConfig, 3> c = {{{25.0, 54}, {2.75, 11}, {2.30, 10}}};
    return c;
}

int cdt_value(unsigned r0, uint32_t r1, const CdtTable& t, uint64_t* comparisons) {
    int e = 0;
    for (uint32_t entry : t.entries) e += int(r1 > entry);
    if (comparisons) *comparisons += t.entries.size();
    int sign = -int(r0 & 1);     // 0 or -1
    return (e ^ sign) - sign;    // (-1)^r0 * e without a branch
}

std::vector<int32_t> cdt_sample(size_t n, const CdtTable& t, KeccakState& prng, SamplerStats* stats) {
    t.validate();
    WordSource src(prng, stats);
    std::vector<int32_t> out(n);
    uint64_t cmp = 0;
    for (auto& v : out) {
        unsigned r0;
        uint32_t r1;
        if (t.r < 32) {
            uint32_t w = src.next();
            r0 = w & 1;
            r1 = (w >> 1) & low_mask(t.r);
        } else {
            r0 = src.next() & 1;
            r1 = src.next();
        }
        v = cdt_value(r0, r1, t, &cmp);
        if (stats) ++stats->samples;
    }
    if (stats) stats->comparisons += cmp;
    return out;
}

// ---- uniform ----

std::vector<int32_t> uni_sample(size_t n, uint32_t eta, unsigned bitlen, KeccakState& prng, SamplerStats* stats) {
    if (bitlen < 1 || bitlen > 32) throw ConfigError("uniform candidate width must lie in [1, 32]");
    uint64_t range = 2ull * eta + 1;
    if (range > (uint64_t(1) << bitlen)) throw ConfigError("2*eta+1 exceeds 2^bitlen");
    WordSource src(prng, stats);
    std::vector<int32_t> out;
    out.reserve(n);
    const uint32_t mask = low_mask(bitlen);
    while (out.size() < n) {
        uint32_t c = src.next() & mask;
        if (stats) ++stats->candidates;
        if (c < range) {
            out.push_back(int32_t(int64_t(c) - eta));
            if (stats) ++stats->samples;
        } else if (stats) {
            ++stats->rejected;
        }
    }
    return out;
}

// ---- trinary ----

std::vector<int32_t> tri_sample_fixed(size_t n, size_t m, KeccakState& prng, SamplerStats* stats) {
    require_pow2(n);
    if (m >= n) throw ConfigError("fixed-weight trinary needs m < n");
    WordSource src(prng, stats);
    const unsigned lg = unsigned(std::countr_zero(n));
    std::vector<int32_t> s(n, 0);
    size_t i = 0;
    while (i < m) {
        uint32_t w = src.next();
        size_t pos = w & (n - 1);
        unsigned sign = (w >> lg) & 1;
        if (stats) ++stats->candidates;
        if (s[pos] == 0) {
            s[pos] = sign == 0 ? 1 : -1;
            ++i;
        } else if (stats) {
            ++stats->rejected;
        }
    }
    if (stats) stats->samples += n;
    return s;
}

std::vector<int32_t> tri_sample_split(size_t n, size_t m0, size_t m1, KeccakState& prng, SamplerStats* stats) {
    require_pow2(n);
    if (m0 + m1 >= n) throw ConfigError("split trinary needs m0 + m1 < n");
    WordSource src(prng, stats);
    std::vector<int32_t> s(n, 0);
    auto place = [&](size_t count, int value) {
        size_t i = 0;
        while (i < count) {
            size_t pos = src.next() & (n - 1);
            if (stats) ++stats->candidates;
            if (s[pos] == 0) {
                s[pos] = value;
                ++i;
            } else if (stats) {
                ++stats->rejected;
            }
        }
    };
    place(m0, 1);
    place(m1, -1);
    if (stats) stats->samples += n;
    return s;
}

int tri_prob_value(uint32_t x) { return x == 0 ? 1 : (x == 1 ? -1 : 0); }

std::vector<int32_t> tri_sample_prob(size_t n, unsigned k, KeccakState& prng, SamplerStats* stats) {
    if (k < 1 || k > 7) throw ConfigError("trinary probability exponent k must lie in [1, 7]");
    WordSource src(prng, stats);
    std::vector<int32_t> s(n);
    for (auto& v : s) {
        v = tri_prob_value(src.next() & low_mask(k));
        if (stats) ++stats->samples;
    }
    return s;
}

}  // namespace sapphire
