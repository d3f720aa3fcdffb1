// One PASS/FAIL line per acceptance criterion. Exit status 0 only when every line passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "oracles/kyber.hpp"
#include "oracles/modq.hpp"
#include "oracles/stats.hpp"
#include "sapphire/errors.hpp"
#include "sapphire/isa.hpp"
#include "sapphire/keccak.hpp"
#include "sapphire/machine.hpp"
#include "sapphire/modmath.hpp"
#include "sapphire/nttcore.hpp"
#include "sapphire/polycache.hpp"
#include "sapphire/protocols.hpp"
#include "sapphire/sampler.hpp"
#include "util.hpp"

using namespace sapphire;

namespace {

// ---- pinned tolerances and sizes ----
constexpr double kMaxSeconds1 = 1.0;
constexpr double kMaxSeconds2 = 30.0;
constexpr double kMaxSeconds3 = 60.0;
constexpr double kMaxSeconds5 = 60.0;
constexpr size_t kReductionInputs = 1000000;
constexpr int kNttPairs = 100;
constexpr uint64_t kRejectionCandidates = 1000000;
constexpr double kRejectionTolerance = 0.01;
constexpr size_t kBinomialSamples = 1000000;
constexpr double kBinomialMeanTolerance = 0.01;
constexpr double kBinomialVarianceRelTolerance = 0.02;
constexpr size_t kCdtSamples = 1000000;
constexpr double kCdtMinPValue = 0.001;
constexpr size_t kNewHopeTrials = 1000;
constexpr size_t kMaskedTrials = 100;
constexpr int kKyberTrials = 5;
constexpr int kConstantTimeInputs = 100;

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Seed random_seed(std::mt19937_64& rng) {
    Seed s;
    for (auto& b : s) b = uint8_t(rng());
    return s;
}

std::vector<uint32_t> random_poly(unsigned n, uint32_t q, std::mt19937_64& rng) {
    std::uniform_int_distribution<uint32_t> d(0, q - 1);
    std::vector<uint32_t> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

CycleReport run_source(Machine& m, const std::string& src) {
    m.load_program(assemble(src));
    return m.run();
}

// ---- 1 ----
Verdict c1_ntt_cycles() {
    struct Row {
        unsigned n;
        uint32_t q;
        uint64_t expected;
    };
    Verdict v;
    std::ostringstream d;
    for (Row r : {Row{256, 7681, 1289}, Row{512, 12289, 2826}, Row{1024, 12289, 6155}}) {
        Machine m;
        m.configure(r.n, r.q);
        const unsigned other = m.state().cache.slots_per_bank();
        CycleReport rep = run_source(
            m, "mult_psi (poly = 0)\ntransform (mode = DIF_NTT, poly_dst = " + std::to_string(other) + ", poly_src = 0)");
        const uint64_t got = rep.unit(Unit::Ntt) + rep.unit(Unit::Psi);
        v.pass &= got == r.expected && rep.total == r.expected;
        d << r.n << ":" << got << "/" << r.expected << " ";
    }
    v.detail = d.str();
    return v;
}

// ---- 2 ----
Verdict c2_reduction_sweeps() {
    std::mt19937_64 rng(2);
    size_t routines = 0, failures = 0;
    auto sweep = [&](uint32_t q, const std::function<uint32_t(uint64_t)>& f) {
        ++routines;
        const uint64_t q2 = uint64_t(q) * q;
        std::vector<uint64_t> edges = {0, 1, q - 1u, q, q + 1u, 2ull * q - 1, 2ull * q, q2 - 1, q2 - q, q2 - q - 1,
                                       (q2 - 1) / 2};
        bool ok = true;
        for (uint64_t z : edges) ok &= f(z) == oracle::mod(z, q);
        std::uniform_int_distribution<uint64_t> dist(0, q2 - 1);
        for (size_t i = 0; i < kReductionInputs; ++i) {
            uint64_t z = dist(rng);
            ok &= f(z) == oracle::mod(z, q);
        }
        failures += !ok;
    };
    for (uint32_t q : specialized_primes()) sweep(q, [q](uint64_t z) { return reduce_specialized(z, q); });
    sweep(65537, [](uint64_t z) { return reduce_fermat(z); });
    // generic configurable Barrett, exercised on every listed prime
    bool generic_ok = true;
    for (uint32_t q : specialized_primes()) {
        auto g = ModulusProfile::generic(q);
        size_t before = failures;
        sweep(q, [g](uint64_t z) { return reduce(z, g); });
        generic_ok &= failures == before;
        --routines;
    }
    ++routines;
    for (unsigned bits : {15u, 16u}) {
        auto p = ModulusProfile::power_of_two(1u << bits);
        sweep(1u << bits, [p](uint64_t z) { return reduce(z, p); });
    }
    Verdict v;
    v.pass = failures == 0 && generic_ok && routines == 13 + 2;
    v.detail = std::to_string(routines - 2) + " routines + power-of-two masking, " + std::to_string(kReductionInputs) +
               " inputs each, " + std::to_string(failures) + " mismatching";
    return v;
}

// ---- 3 ----
Verdict c3_ntt_correctness() {
    std::mt19937_64 rng(3);
    Verdict v;
    size_t products = 0, round_trips = 0, bad = 0;
    for (auto [n, q] : {std::pair{64u, 7681u}, {256u, 7681u}, {512u, 12289u}, {1024u, 12289u}}) {
        Machine m;
        m.configure(n, q);
        const unsigned b1 = m.state().cache.slots_per_bank();
        const std::string mul = "mult_psi (poly = 0)\nmult_psi (poly = 1)\n"
                                "transform (mode = DIF_NTT, poly_dst = " + std::to_string(b1) + ", poly_src = 0)\n"
                                "transform (mode = DIF_NTT, poly_dst = " + std::to_string(b1 + 1) + ", poly_src = 1)\n"
                                "poly_op (op = MUL, poly_dst = " + std::to_string(b1) + ", poly_src = " + std::to_string(b1 + 1) + ")\n"
                                "transform (mode = DIT_INTT, poly_dst = 2, poly_src = " + std::to_string(b1) + ")\n"
                                "mult_psi_inv (poly = 2)\n";
        const std::string rt = "mult_psi (poly = 0)\n"
                               "transform (mode = DIF_NTT, poly_dst = " + std::to_string(b1) + ", poly_src = 0)\n"
                               "transform (mode = DIT_INTT, poly_dst = 3, poly_src = " + std::to_string(b1) + ")\n"
                               "mult_psi_inv (poly = 3)\n";
        Program pm = assemble(mul), pr = assemble(rt);
        for (int t = 0; t < kNttPairs; ++t) {
            auto a = random_poly(n, q, rng), b = random_poly(n, q, rng);
            m.write_slot(0, a);
            m.write_slot(1, b);
            m.load_program(pm);
            m.run();
            bad += m.read_slot(2) != oracle::negacyclic_mul(a, b, q);
            ++products;
            m.write_slot(0, a);
            m.load_program(pr);
            m.run();
            bad += m.read_slot(3) != a;
            ++round_trips;
        }
    }
    v.pass = bad == 0;
    v.detail = std::to_string(products) + " products, " + std::to_string(round_trips) + " round trips, " +
               std::to_string(bad) + " mismatching";
    return v;
}

// ---- 4 ----
Verdict c4_memory_model() {
    Verdict v;
    size_t transforms = 0, violations = 0;
    std::mt19937_64 rng(4);
    const uint32_t q = 12289;
    for (unsigned n = 8; n <= 2048; n *= 2) {
        auto c = gen_constants(LatticeConfig::make(n, q));
        auto p = ModulusProfile::for_modulus(q);
        PolynomialCache cache(n);
        cache.set_hazard_mode(HazardMode::Fault);
        const unsigned other = cache.slots_per_bank();
        for (auto mode : {NttMode::DIT_NTT, NttMode::DIF_NTT, NttMode::DIT_INTT, NttMode::DIF_INTT}) {
            for (auto [src, dst] : {std::pair{0u, other}, {other + 1, 1u}}) {
                cache.store(src, random_poly(n, q, rng));
                cache.reset_hazards();
                try {
                    ntt(cache, src, dst, mode, c, p);
                } catch (const HazardFault&) {
                    ++violations;
                }
                violations += cache.hazards();
                ++transforms;
            }
        }
    }
    size_t golden_ok = 0;
    auto c8 = gen_constants(LatticeConfig::make(8, 7681));
    auto p8 = ModulusProfile::for_modulus(7681);
    for (auto [mode, file] : {std::pair{NttMode::DIT_NTT, "trace_dit8.txt"}, {NttMode::DIF_NTT, "trace_dif8.txt"}}) {
        PolynomialCache cache(8);
        cache.store(0, {1, 2, 3, 4, 5, 6, 7, 8});
        cache.set_recording(true);
        ntt(cache, 0, 64, mode, c8, p8);
        golden_ok += format_trace(cache.events()) == testutil::read_file(std::string("tests/golden/") + file);
    }
    v.pass = violations == 0 && golden_ok == 2;
    v.detail = std::to_string(transforms) + " transforms (n = 8..2048, 4 modes), " + std::to_string(violations) +
               " violations, golden 8-point traces " + std::to_string(golden_ok) + "/2";
    return v;
}

// ---- 5 ----
Verdict c5_rejection() {
    struct Row {
        uint32_t q;
        double without, with;
    };
    const Row table[] = {{7681, 0.06, 0.06},       {12289, 0.25, 0.06},   {40961, 0.37, 0.06},
                         {65537, 0.50, 0.12},      {120833, 0.08, 0.08},  {133121, 0.49, 0.11},
                         {184321, 0.30, 0.03},     {8380417, 0.0, 0.0},   {8058881, 0.04, 0.04},
                         {4205569, 0.50, 0.12},    {4206593, 0.50, 0.12}, {8404993, 0.50, 0.12}};
    Verdict v;
    double worst = 0;
    uint16_t c = 0;
    for (const Row& r : table) {
        for (bool scaled : {false, true}) {
            auto plan = RejectionPlan::make(r.q, scaled ? default_rejection_scale(r.q) : 1);
            Seed seed{};
            seed[0] = 5;
            auto prng = seeded_prng(Prng::Shake128, seed, c++, 0);
            SamplerStats st;
            while (st.candidates < kRejectionCandidates) rej_sample(1024, plan, prng, &st);
            const double rate = double(st.rejected) / double(st.candidates);
            const double dev = std::abs(rate - (scaled ? r.with : r.without));
            worst = std::max(worst, dev);
            v.pass &= dev <= kRejectionTolerance;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "12 primes x {1, scaled}, worst |empirical - table| = %.4f (tol %.2f)", worst,
                  kRejectionTolerance);
    v.detail = buf;
    return v;
}

// ---- 6 ----
Verdict c6_binomial() {
    Verdict v;
    std::ostringstream d;
    d.precision(4);
    for (unsigned k : {3u, 4u, 8u, 16u}) {
        Seed seed{};
        seed[0] = uint8_t(k);
        auto prng = seeded_prng(Prng::Shake256, seed, 6, 0);
        auto s = bin_sample(kBinomialSamples, k, prng);
        bool bounded = true;
        for (int x : s) bounded &= std::abs(x) <= int(k);
        auto mo = oracle::moments(s);
        const double half = k / 2.0;
        const bool ok = bounded && std::abs(mo.mean) <= kBinomialMeanTolerance &&
                        std::abs(mo.variance - half) <= kBinomialVarianceRelTolerance * half;
        v.pass &= ok;
        d << "k=" << k << " mean " << mo.mean << " var " << mo.variance << "; ";
    }
    v.detail = d.str();
    return v;
}

// ---- 7 ----
Verdict c7_cdt() {
    Verdict v;
    std::ostringstream d;
    d.precision(3);
    for (auto cfg : reference_cdt_configs()) {
        auto t = CdtTable::gaussian(cfg.sigma, cfg.s);
        Seed seed{};
        seed[0] = uint8_t(cfg.s);
        auto prng = seeded_prng(Prng::Shake256, seed, 7, 0);
        SamplerStats st;
        auto s = cdt_sample(kCdtSamples, t, prng, &st);
        std::vector<uint64_t> counts(2 * cfg.s + 1, 0);
        bool bounded = true;
        for (int x : s) {
            bounded &= std::abs(x) <= int(cfg.s);
            if (std::abs(x) <= int(cfg.s)) ++counts[x + int(cfg.s)];
        }
        auto chi = oracle::chi_square(counts, t.pmf());
        // per-draw trip count
        bool constant = st.comparisons == uint64_t(kCdtSamples) * cfg.s;
        auto words = seeded_prng(Prng::Shake256, seed, 7, 1);
        for (int i = 0; i < 10000; ++i) {
            uint32_t w = words.squeeze_word();
            uint64_t cmp = 0;
            cdt_value(w & 1, (w >> 1) & low_mask(t.r), t, &cmp);
            constant &= cmp == cfg.s;
        }
        v.pass &= bounded && constant && chi.p_value > kCdtMinPValue;
        d << "s=" << cfg.s << " p=" << chi.p_value << (constant ? "" : " trip-count varies") << "; ";
    }
    v.detail = d.str();
    return v;
}

// ---- 8 ----
Verdict c8_fips202() {
    size_t ok = 0, total = 0;
    for (const auto& k : testutil::load_kats()) {
        std::vector<uint8_t> got;
        if (k.alg == "sha3_256") {
            auto h = sha3_256(k.msg);
            got.assign(h.begin(), h.end());
        } else if (k.alg == "sha3_512") {
            auto h = sha3_512(k.msg);
            got.assign(h.begin(), h.end());
        } else if (k.alg == "shake128") {
            got = shake128(k.msg, k.out_len);
        } else if (k.alg == "shake256") {
            got = shake256(k.msg, k.out_len);
        }
        ok += testutil::hex(got) == k.expected;
        ++total;
    }
    return {ok == total && total > 0, std::to_string(ok) + "/" + std::to_string(total) + " vectors"};
}

// ---- 9 ----
Verdict c9_isa() {
    Verdict v;
    Program cov = assemble(testutil::read_file("programs/isa_coverage.sph"));
    std::set<Op> seen;
    size_t bad = 0;
    for (const auto& i : cov.code) {
        seen.insert(i.op);
        Program one;
        one.code.push_back(i);
        if (i.op == Op::Branch) one.code[0].target = 0;
        bad += decode(encode(one)) != one;
        bad += assemble(disassemble(one)) != one;
    }
    bad += decode(encode(cov)) != cov;
    bad += assemble(disassemble(cov)) != cov;
    size_t files = 0, diagnostics = 0;
    for (const auto& e : std::filesystem::directory_iterator(testutil::source_path("programs"))) {
        if (e.path().extension() != ".sph") continue;
        ++files;
        try {
            Program p = assemble(testutil::read_file("programs/" + e.path().filename().string()));
            bad += decode(encode(p)) != p;
        } catch (const AsmError&) {
            ++diagnostics;
        }
    }
    v.pass = seen.size() == kOpCount && bad == 0 && diagnostics == 0;
    v.detail = std::to_string(seen.size()) + "/" + std::to_string(kOpCount) + " mnemonics round-trip, " +
               std::to_string(files) + " corpus files, " + std::to_string(diagnostics) + " diagnostics";
    return v;
}

// ---- 10 ----
Verdict c10_protocols() {
    std::mt19937_64 rng(10);
    Verdict v;
    std::ostringstream d;
    for (unsigned n : {512u, 1024u}) {
        Machine m;
        m.configure(n, kNewHopeQ);
        size_t ok = 0;
        for (size_t t = 0; t < kNewHopeTrials; ++t) {
            CpaKeyPair kp = newhope_keygen(m, random_seed(rng));
            Message256 mu;
            for (auto& b : mu) b = uint8_t(rng());
            ok += newhope_decrypt(m, kp.sk, newhope_encrypt(m, kp.pk, random_seed(rng), mu)) == mu;
        }
        v.pass &= ok == kNewHopeTrials;
        d << "NewHope-" << n << " " << ok << "/" << kNewHopeTrials << "; ";
    }
    {
        Machine m;
        m.configure(kKyberN, kKyberQ);
        int ok = 0;
        for (int t = 0; t < kKyberTrials; ++t) {
            Seed rho = random_seed(rng), sigma = random_seed(rng);
            const auto got = kyber_as_plus_e(m, rho, sigma);
            ok += got == oracle::kyber_as_plus_e(rho, sigma) && got == kyber_as_plus_e_reference(rho, sigma);
        }
        v.pass &= ok == kKyberTrials;
        d << "Kyber " << ok << "/" << kKyberTrials << "; ";
    }
    {
        const uint32_t q = 1u << 15;
        int ok = 0;
        for (unsigned dim : {80u, 122u, 168u}) {
            unsigned width = 0;
            for (auto t : frodo_tiling(dim)) width = std::max(width, t.size);
            Machine m;
            m.configure(width, q);
            Seed sa = random_seed(rng), ss = random_seed(rng);
            FrodoMatrices fm = frodo_matrices(dim, q, sa, ss);
            Matrix as = frodo_as_plus_e(m, dim, sa, ss), spa = frodo_sa_plus_e(m, dim, sa, ss);
            bool good = true;
            for (unsigned i = 0; i < dim; ++i)
                for (unsigned j = 0; j < kFrodoNbar; ++j) {
                    uint64_t x = fm.e.at(i, j), y = fm.ep.at(j, i);
                    for (unsigned k = 0; k < dim; ++k) {
                        x += uint64_t(fm.a.at(i, k)) * fm.s.at(k, j);
                        y += uint64_t(fm.sp.at(j, k)) * fm.a.at(k, i);
                    }
                    good &= as.at(i, j) == x % q && spa.at(j, i) == y % q;
                }
            ok += good;
        }
        v.pass &= ok == 3;
        d << "Frodo " << ok << "/3; ";
    }
    for (unsigned n : {512u, 1024u}) {
        Machine m;
        m.configure(n, kNewHopeQ);
        CpaKeyPair kp = newhope_keygen(m, random_seed(rng));
        size_t ok = 0;
        for (size_t t = 0; t < kMaskedTrials; ++t) {
            Message256 mu;
            for (auto& b : mu) b = uint8_t(rng());
            CpaCiphertext ct = newhope_encrypt(m, kp.pk, random_seed(rng), mu);
            ok += masked_decrypt(m, kp.pk, kp.sk, ct, derive_mask(random_seed(rng))) == newhope_decrypt(m, kp.sk, ct);
        }
        v.pass &= ok == kMaskedTrials;
        d << "masked-" << n << " " << ok << "/" << kMaskedTrials << "; ";
    }
    v.detail = d.str();
    return v;
}

// ---- 11 ----
Verdict c11_constant_time() {
    std::mt19937_64 rng(11);
    Verdict v;
    size_t checked = 0, differing = 0;
    for (auto [n, q] : {std::pair{256u, 7681u}, {512u, 12289u}, {1024u, 12289u}}) {
        Machine probe;
        probe.configure(n, q);
        const std::string b1 = std::to_string(probe.state().cache.slots_per_bank());
        const std::vector<std::string> kernels = {
            "transform (mode = DIF_NTT, poly_dst = " + b1 + ", poly_src = 0)",
            "transform (mode = DIT_INTT, poly_dst = " + b1 + ", poly_src = 0)",
            "mult_psi (poly = 0)",
            "mult_psi_inv (poly = 0)",
            "poly_op (op = MUL, poly_dst = " + b1 + ", poly_src = 0)",
            "poly_op (op = ADD, poly_dst = " + b1 + ", poly_src = 0)",
            "poly_op (op = CONST_MUL, poly_dst = " + b1 + ", poly_src = 0)",
            "bin_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 0, k = 8, poly = 0)",
            "cdt_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 0, r = 31, s = 11, poly = 0)",
        };
        const CdtTable table = CdtTable::gaussian(2.75, 11);
        for (const auto& k : kernels) {
            Program p = assemble(k);
            std::string first;
            uint64_t first_cycles = 0;
            for (int t = 0; t < kConstantTimeInputs; ++t) {
                Machine m;
                m.configure(n, q);
                m.load_cdt(table);
                m.write_slot(0, random_poly(n, q, rng));
                m.write_slot(unsigned(std::stoul(b1)), random_poly(n, q, rng));
                m.write_seed(1, random_seed(rng));
                m.set_reg(uint32_t(rng() % q));
                m.set_trace(true);
                m.load_program(p);
                CycleReport r = m.run();
                std::string trace = format_trace(m.trace());
                if (t == 0) {
                    first = trace;
                    first_cycles = r.total;
                } else {
                    differing += trace != first || r.total != first_cycles;
                }
                ++checked;
            }
        }
    }
    v.pass = differing == 0;
    v.detail = std::to_string(checked) + " runs (9 kernels x 3 configs x " + std::to_string(kConstantTimeInputs) +
               " inputs), " + std::to_string(differing) + " differing";
    return v;
}

struct Criterion {
    int id;
    const char* name;
    double max_seconds;  // 0 = no limit
    Verdict (*fn)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "NTT cycle counts", kMaxSeconds1, c1_ntt_cycles},
        {2, "modular reduction sweeps", kMaxSeconds2, c2_reduction_sweeps},
        {3, "NTT correctness", kMaxSeconds3, c3_ntt_correctness},
        {4, "memory model", 0, c4_memory_model},
        {5, "rejection probabilities", kMaxSeconds5, c5_rejection},
        {6, "binomial sampler", 0, c6_binomial},
        {7, "CDT sampler", 0, c7_cdt},
        {8, "SHAKE/SHA-3 known answers", 0, c8_fips202},
        {9, "ISA round trip and corpus", 0, c9_isa},
        {10, "protocols", 0, c10_protocols},
        {11, "constant-time traces", 0, c11_constant_time},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = seconds_since(t0);
        if (c.max_seconds > 0 && secs >= c.max_seconds) {
            v.pass = false;
            v.detail += " [over time limit]";
        }
        std::printf("%s %2d %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed ? 1 : 0;
}
