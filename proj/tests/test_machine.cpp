#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "oracles/ntt.hpp"
#include "sapphire/errors.hpp"
#include "sapphire/machine.hpp"
#include "util.hpp"

using namespace sapphire;

namespace {

std::vector<uint32_t> random_poly(std::mt19937_64& rng, unsigned n, uint32_t q) {
    std::vector<uint32_t> v(n);
    for (auto& x : v) x = uint32_t(rng() % q);
    return v;
}

Seed seed_of(uint8_t base) {
    Seed s;
    for (size_t i = 0; i < s.size(); ++i) s[i] = uint8_t(base + i);
    return s;
}

CycleReport run_source(Machine& m, const std::string& src) {
    m.load_program(assemble(src));
    return m.run();
}

}  // namespace

TEST_CASE("empty program halts immediately") {
    Machine m;
    m.load_program(Program{});
    auto ev = m.step();
    CHECK(ev.halted);
    CHECK(m.state().halted);
    CHECK(m.state().cycles == 0);
    CHECK(m.run().halted);
}

TEST_CASE("reset keeps seeds and data") {
    Machine m;
    m.configure(256, 7681);
    m.write_seed(0, seed_of(1));
    m.write_seed(1, seed_of(9));
    run_source(m, "c0 = 3\nreg = 5");
    CHECK(m.state().pc == 2);
    CHECK(m.state().cycles == 2);
    m.reset();
    CHECK(m.state().pc == 0);
    CHECK(m.state().cycles == 0);
    CHECK(!m.state().halted);
    CHECK(m.state().c0 == 3);
    CHECK_THROWS_AS(m.read_seed(0), ContractViolation);
    m.set_debug(true);
    CHECK(m.read_seed(0) == seed_of(1));
    CHECK(m.read_seed(1) == seed_of(9));
}

TEST_CASE("program loading") {
    Machine m;
    Program p = assemble(testutil::read_file("programs/newhope_as_e.sph"));
    m.load_program(p);
    CHECK(m.program().code.size() == 10);
    Program big;
    for (int i = 0; i < 129; ++i) big.code.push_back(assemble("config (n = 256, q = 7681)").code[0]);
    CHECK_THROWS_AS(m.load_program(big), ProgramError);
}

TEST_CASE("host data movement") {
    Machine m;
    m.configure(1024, 12289);
    CHECK(m.state().cache.slots() == 8);
    std::mt19937_64 rng(3);
    for (unsigned s = 0; s < 8; ++s) {
        auto v = random_poly(rng, 1024, 12289);
        m.write_slot(s, v);
        CHECK(m.read_slot(s) == v);
    }
    CHECK(m.state().cycles == 0);
    CHECK_THROWS_AS(m.write_slot(8, std::vector<uint32_t>(1024)), ProgramError);
    CHECK_THROWS_AS(m.write_slot(0, std::vector<uint32_t>(1024, 12289)), ContractViolation);
    CHECK_THROWS_AS(m.write_slot(0, std::vector<uint32_t>(512)), ContractViolation);
    Machine fresh;
    CHECK_THROWS_AS(fresh.read_slot(0), ProgramError);
}

TEST_CASE("transform and psi cycle counts reproduce the published totals") {
    struct Row {
        unsigned n;
        uint32_t q;
        uint64_t total;
    };
    for (Row r : {Row{256, 7681, 1289}, Row{512, 12289, 2826}, Row{1024, 12289, 6155}}) {
        Machine m;
        m.configure(r.n, r.q);
        unsigned other = m.state().cache.slots_per_bank();
        auto rep = run_source(m, "mult_psi (poly = 0)\ntransform (mode = DIF_NTT, poly_dst = " + std::to_string(other) +
                                     ", poly_src = 0)");
        CHECK(rep.total == r.total);
        CHECK(rep.per_instruction.at(Op::MultPsi).cycles == r.n + 1);
    }
    Machine m;
    m.configure(1024, 12289);
    auto rep = run_source(m, "transform (mode = DIF_NTT, poly_dst = 4, poly_src = 0)");
    CHECK(rep.total == 5130);
}

TEST_CASE("cycle buckets and clock gating") {
    Machine m;
    m.configure(256, 7681);
    auto rep = run_source(m, "mult_psi (poly = 0)\ntransform (mode = DIF_NTT, poly_dst = 16, poly_src = 0)");
    CHECK(rep.unit(Unit::Ntt) == 1032);
    CHECK(rep.unit(Unit::Psi) == 257);
    CHECK(rep.unit(Unit::Keccak) == 0);

    m.write_seed(1, seed_of(7));
    rep = run_source(m, "clock_config (keccak = UNGATE, ntt = GATE, sampler = UNGATE)\n"
                        "bin_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 0, k = 8, poly = 1)\n"
                        "mult_psi (poly = 1)");
    CHECK(rep.unit(Unit::Keccak) > 0);
    CHECK(rep.unit(Unit::Sampler) > 0);
    CHECK(rep.unit(Unit::Ntt) == 0);
    CHECK(rep.unit(Unit::Psi) == 0);
    uint64_t sum = 0;
    for (auto c : rep.per_unit) sum += c;
    CHECK(sum <= rep.total);
    CHECK(rep.total == 1 + rep.per_instruction.at(Op::BinSample).cycles + 257);

    // strict mode faults on a gated unit, permissive mode only filters statistics
    const std::string gated = "clock_config (keccak = GATE, ntt = UNGATE, sampler = GATE)\n"
                              "bin_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 0, k = 8, poly = 1)";
    m.set_strict_gating(true);
    try {
        run_source(m, gated);
        FAIL("gated sampler ran in strict mode");
    } catch (const MachineFault& e) {
        CHECK(e.pc == 1);
    }
    m.set_strict_gating(false);
    rep = run_source(m, gated);
    CHECK(rep.halted);
    CHECK(rep.unit(Unit::Keccak) == 0);
    CHECK(rep.unit(Unit::Sampler) == 0);
    CHECK(rep.total > 1);
}

TEST_CASE("measurement loop runs exactly 1000 times") {
    Machine m;
    m.configure(1024, 12289);
    m.set_strict_gating(true);
    auto rep = run_source(m, testutil::read_file("programs/ntt_loop.sph"));
    CHECK(rep.halted);
    CHECK(m.state().c0 == 1000);
    CHECK(rep.per_instruction.at(Op::Transform).count == 1000);
    CHECK(rep.per_instruction.at(Op::Compare).count == 1000);
    CHECK(rep.unit(Unit::Ntt) == 1000 * 5130);
    CHECK(rep.unit(Unit::Psi) == 1000 * 1025);
    CHECK(rep.unit(Unit::Keccak) == 0);
    CHECK(rep.total == 1 + 1 + 1000 * (6155 + 1 + 1 + 1));
    CHECK(rep.hazards == 0);
}

TEST_CASE("counter loop from the listing idiom") {
    Machine m;
    auto rep = run_source(m, "c0 = 0\nloop: c0 = c0 + 1\nflag = compare (c0, 1000)\nif (flag == -1) goto loop");
    CHECK(m.state().c0 == 1000);
    CHECK(rep.per_instruction.at(Op::C0Add).count == 1000);
    CHECK(rep.total == 1 + 3 * 1000);
}

TEST_CASE("poly_op matches host arithmetic") {
    const unsigned n = 256;
    const uint32_t q = 7681;
    Machine m;
    m.configure(n, q);
    std::mt19937_64 rng(11);
    const std::vector<std::pair<std::string, std::function<uint32_t(uint64_t, uint64_t, uint64_t)>>> ops = {
        {"ADD", [&](uint64_t s, uint64_t d, uint64_t) { return uint32_t((s + d) % q); }},
        {"SUB", [&](uint64_t s, uint64_t d, uint64_t) { return uint32_t((s + q - d) % q); }},
        {"MUL", [&](uint64_t s, uint64_t d, uint64_t) { return uint32_t(s * d % q); }},
        {"CONST_ADD", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s + r) % q); }},
        {"CONST_SUB", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s + q - r % q) % q); }},
        {"CONST_MUL", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t(s * r % q); }},
        {"CONST_AND", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s & r) % q); }},
        {"CONST_OR", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s | r) % q); }},
        {"CONST_XOR", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s ^ r) % q); }},
        {"CONST_RSHIFT", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t((s >> r) % q); }},
        {"CONST_LSHIFT", [&](uint64_t s, uint64_t, uint64_t r) { return uint32_t(((s << r) & 0xFFFFFF) % q); }},
    };
    for (const auto& [name, f] : ops) {
        CAPTURE(name);
        for (int t = 0; t < 5; ++t) {
            auto src = random_poly(rng, n, q), dst = random_poly(rng, n, q);
            uint32_t reg = name.find("SHIFT") != std::string::npos ? uint32_t(rng() % 12) : uint32_t(rng() % q);
            m.write_slot(3, src);
            m.write_slot(20, dst);
            m.set_reg(reg);
            auto rep = run_source(m, "poly_op (op = " + name + ", poly_dst = 20, poly_src = 3)");
            CHECK(rep.total == n + 1);
            auto got = m.read_slot(20);
            bool ok = true;
            for (unsigned i = 0; i < n; ++i) ok &= got[i] == f(src[i], dst[i], reg);
            CHECK(ok);
            CHECK(m.read_slot(3) == src);
        }
    }
    auto src = random_poly(rng, n, q);
    m.write_slot(3, src);
    run_source(m, "poly_op (op = BITREV, poly_dst = 20, poly_src = 3)");
    CHECK(m.read_slot(20) == oracle::permute_bitrev(src));
}

TEST_CASE("init, copy, shift and reductions") {
    const unsigned n = 64;
    const uint32_t q = 7681;
    Machine m;
    m.configure(n, q);
    std::mt19937_64 rng(5);
    auto a = random_poly(rng, n, q);
    m.write_slot(0, a);
    run_source(m, "poly_copy (poly_dst = 100, poly_src = 0)\ninit (poly = 0)");
    CHECK(m.read_slot(100) == a);
    CHECK(m.read_slot(0) == std::vector<uint32_t>(n, 0));
    CHECK(m.report().total == 2 * (n + 1));

    run_source(m, "shift_poly (ring = x^N+1, poly_dst = 1, poly_src = 100)\n"
                  "shift_poly (ring = x^N-1, poly_dst = 2, poly_src = 100)");
    auto neg = m.read_slot(1), cyc = m.read_slot(2);
    CHECK(neg[0] == (q - a[n - 1]) % q);
    CHECK(cyc[0] == a[n - 1]);
    for (unsigned i = 1; i < n; ++i) {
        REQUIRE(neg[i] == a[i - 1]);
        REQUIRE(cyc[i] == a[i - 1]);
    }
    // x^n = -1 in the negacyclic ring
    m.write_slot(1, a);
    std::string src;
    for (unsigned i = 0; i < n; ++i) src += "shift_poly (ring = x^N+1, poly_dst = 1, poly_src = 1)\n";
    run_source(m, src);
    auto wrapped = m.read_slot(1);
    for (unsigned i = 0; i < n; ++i) REQUIRE(wrapped[i] == (q - a[i]) % q);

    uint64_t sum = 0;
    uint32_t mx = 0;
    for (auto x : a) {
        sum += x;
        mx = std::max(mx, x);
    }
    run_source(m, "reg = sum_elems (poly = 100)");
    CHECK(m.state().reg == sum % q);
    run_source(m, "reg = max_elems (poly = 100)");
    CHECK(m.state().reg == mx);
    CHECK(m.report().total == n + 1);

    run_source(m, "c1 = 9\nreg = (poly = 100)[c1]\n(poly = 2)[3] = reg\nreg = (poly = 100)[5]");
    CHECK(m.read_slot(2)[3] == a[9]);
    CHECK(m.state().reg == a[5]);
    CHECK_THROWS_AS(run_source(m, "c0 = 64\nreg = (poly = 1)[c0]"), MachineFault);
}

TEST_CASE("flag semantics at boundaries") {
    Machine m;
    m.configure(64, 7681);
    auto flag_after = [&](const std::string& s) {
        run_source(m, s);
        return int(m.state().flag);
    };
    CHECK(flag_after("reg = 10\nflag = compare (reg, 10)") == 0);
    CHECK(flag_after("reg = 10\nflag = compare (reg, 11)") == -1);
    CHECK(flag_after("reg = 10\nflag = compare (reg, 9)") == 1);
    CHECK(flag_after("tmp = 0\nflag = compare (tmp, 0)") == 0);
    CHECK(flag_after("c1 = 65535\nflag = compare (c1, 65534)") == 1);
    CHECK(flag_after("c0 = 0\nflag = compare (c0, 16777215)") == -1);

    std::vector<uint32_t> a(64, 0), b(64, 0);
    m.write_slot(0, a);
    m.write_slot(1, b);
    CHECK(flag_after("flag = eq_check (0, 1)") == 1);
    b[63] = 1;
    m.write_slot(1, b);
    CHECK(flag_after("flag = eq_check (0, 1)") == 0);
    CHECK(flag_after("flag = eq_check (1, 1)") == 1);

    // centred magnitude exactly at, one below and one above the bound
    std::vector<uint32_t> v(64, 0);
    v[7] = 7681 - 100;  // -100
    v[9] = 100;
    m.write_slot(2, v);
    CHECK(flag_after("flag = inf_norm_check (poly = 2, bound = 100)") == 1);
    CHECK(flag_after("flag = inf_norm_check (poly = 2, bound = 99)") == 0);
    CHECK(flag_after("flag = inf_norm_check (poly = 2, bound = 101)") == 1);
    v[9] = 3840;  // largest positive centred value
    m.write_slot(2, v);
    CHECK(flag_after("flag = inf_norm_check (poly = 2, bound = 3840)") == 1);
    CHECK(flag_after("flag = inf_norm_check (poly = 2, bound = 3839)") == 0);

    // branch polarity
    CHECK(flag_after("reg = 1\nflag = compare (reg, 0)\nif (flag != +1) goto bad\nc0 = 7\nbad:") == 1);
    CHECK(m.state().c0 == 7);
    run_source(m, "c0 = 0\nreg = 1\nflag = compare (reg, 0)\nif (flag == +1) goto skip\nc0 = 7\nskip:");
    CHECK(m.state().c0 == 0);
}

TEST_CASE("scalar ALU and counters") {
    Machine m;
    run_source(m, "tmp = 16777215\nreg = 1\ntmp = tmp + reg");
    CHECK(m.state().tmp == 0);
    run_source(m, "tmp = 0\nreg = 1\ntmp = tmp - reg");
    CHECK(m.state().tmp == 0xFFFFFF);
    run_source(m, "tmp = 4096\nreg = 4097\ntmp = tmp MUL reg");
    CHECK(m.state().tmp == (4096u * 4097u & 0xFFFFFF));
    run_source(m, "tmp = 0xF0F0\nreg = 0xFF00\ntmp = tmp AND reg\nreg = tmp");
    CHECK(m.state().reg == 0xF000);
    run_source(m, "tmp = 0xF0F0\nreg = 0x0F0F\ntmp = tmp OR reg");
    CHECK(m.state().tmp == 0xFFFF);
    run_source(m, "tmp = 0xFFFF\nreg = 0x0F0F\ntmp = tmp XOR reg");
    CHECK(m.state().tmp == 0xF0F0);
    run_source(m, "tmp = 0x100\nreg = 4\ntmp = tmp RSHIFT reg");
    CHECK(m.state().tmp == 0x10);
    run_source(m, "tmp = 0x100\nreg = 20\ntmp = tmp LSHIFT reg");
    CHECK(m.state().tmp == 0);
    run_source(m, "c0 = 0\nc0 = c0 - 1\nc1 = 65535\nc1 = c1 + 2");
    CHECK(m.state().c0 == 65535);
    CHECK(m.state().c1 == 1);
}

TEST_CASE("samplers follow the seeded PRNG") {
    const unsigned n = 256;
    const uint32_t q = 7681;
    Machine m;
    m.configure(n, q);
    m.write_seed(0, seed_of(40));
    m.write_seed(1, seed_of(80));
    m.load_cdt(CdtTable::gaussian(2.75, 11, 31));

    run_source(m, "bin_sample (prng = SHAKE-256, seed = r1, c0 = 3, c1 = 4, k = 8, poly = 5)");
    {
        auto prng = seeded_prng(Prng::Shake256, seed_of(80), 3, 4);
        SamplerStats st;
        auto want = to_residues(bin_sample(n, 8, prng, &st), q);
        CHECK(m.read_slot(5) == want);
        CHECK(m.report().total == 24 * prng.permutations() + st.words + n);
        CHECK(m.report().unit(Unit::Keccak) == 24 * prng.permutations());
    }
    run_source(m, "c0 = 2\nc1 = 9\nrej_sample (prng = SHAKE-128, seed = r0, c0 = c0, c1 = c1, poly = 6)");
    {
        auto prng = seeded_prng(Prng::Shake128, seed_of(40), 2, 9);
        CHECK(m.read_slot(6) == rej_sample(n, RejectionPlan::for_modulus(q), prng));
    }
    run_source(m, "cdt_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 1, r = 31, s = 11, poly = 7)");
    {
        auto prng = seeded_prng(Prng::Shake256, seed_of(80), 0, 1);
        CHECK(m.read_slot(7) == to_residues(cdt_sample(n, CdtTable::gaussian(2.75, 11, 31), prng), q));
    }
    run_source(m, "uni_sample (prng = SHAKE-128, seed = r0, c0 = 1, c1 = 1, eta = 2, bitlen = 3, poly = 8)\n"
                  "tri_sample_1 (prng = SHAKE-128, seed = r0, c0 = 1, c1 = 2, m = 60, poly = 9)\n"
                  "tri_sample_2 (prng = SHAKE-128, seed = r0, c0 = 1, c1 = 3, m0 = 20, m1 = 30, poly = 10)\n"
                  "tri_sample_3 (prng = SHAKE-128, seed = r0, c0 = 1, c1 = 4, rho = 1/2^2, poly = 11)");
    {
        auto p1 = seeded_prng(Prng::Shake128, seed_of(40), 1, 1);
        CHECK(m.read_slot(8) == to_residues(uni_sample(n, 2, 3, p1), q));
        auto p2 = seeded_prng(Prng::Shake128, seed_of(40), 1, 2);
        CHECK(m.read_slot(9) == to_residues(tri_sample_fixed(n, 60, p2), q));
        auto p3 = seeded_prng(Prng::Shake128, seed_of(40), 1, 3);
        CHECK(m.read_slot(10) == to_residues(tri_sample_split(n, 20, 30, p3), q));
        auto p4 = seeded_prng(Prng::Shake128, seed_of(40), 1, 4);
        CHECK(m.read_slot(11) == to_residues(tri_sample_prob(n, 2, p4), q));
    }
    CHECK_THROWS_AS(run_source(m, "cdt_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 1, r = 31, s = 12, poly = 7)"),
                    MachineFault);
    CHECK_THROWS_AS(run_source(m, "tri_sample_1 (prng = SHAKE-128, seed = r0, c0 = 1, c1 = 2, m = 300, poly = 9)"),
                    MachineFault);
}

TEST_CASE("sha3 instructions") {
    Machine m;
    m.configure(64, 7681);
    m.set_debug(true);
    m.write_seed(0, seed_of(1));
    run_source(m, "sha3_init\nsha3_256_absorb (r0)\nr1 = sha3_256_digest");
    CHECK(m.read_seed(1) == sha3_256(seed_of(1)));

    std::vector<uint32_t> a(64);
    for (unsigned i = 0; i < 64; ++i) a[i] = 7000 + i;
    m.write_slot(3, a);
    run_source(m, "sha3_init\nsha3_512_absorb (poly = 3)\nsha3_512_absorb (r1)\nr0 || r1 = sha3_512_digest");
    std::vector<uint8_t> bytes;
    for (auto v : a) {
        bytes.push_back(uint8_t(v));
        bytes.push_back(uint8_t(v >> 8));
        bytes.push_back(uint8_t(v >> 16));
    }
    auto r1_before = sha3_256(seed_of(1));
    bytes.insert(bytes.end(), r1_before.begin(), r1_before.end());
    auto d = sha3_512(bytes);
    Seed lo, hi;
    std::copy(d.begin(), d.begin() + 32, lo.begin());
    std::copy(d.begin() + 32, d.end(), hi.begin());
    CHECK(m.read_seed(0) == lo);
    CHECK(m.read_seed(1) == hi);
    CHECK(m.report().unit(Unit::Keccak) == m.report().total);

    CHECK_THROWS_AS(run_source(m, "sha3_init\nsha3_256_absorb (r0)\nsha3_512_absorb (r0)"), MachineFault);
    CHECK_THROWS_AS(run_source(m, "sha3_init\nsha3_256_absorb (r0)\nr0 || r1 = sha3_512_digest"), MachineFault);
    CHECK_THROWS_AS(run_source(m, "sha3_init\nr0 = sha3_256_digest\nr0 = sha3_256_digest"), MachineFault);
    run_source(m, "sha3_init\nr0 = sha3_256_digest");
    CHECK(m.read_seed(0) == sha3_256(std::vector<uint8_t>{}));
}

TEST_CASE("faults carry the pc") {
    Machine m;
    auto pc_of = [&](const std::string& s) -> long {
        try {
            run_source(m, s);
        } catch (const MachineFault& e) {
            return long(e.pc);
        }
        return -1;
    };
    CHECK(pc_of("c0 = 1\ntransform (mode = DIF_NTT, poly_dst = 4, poly_src = 0)") == 1);
    CHECK(pc_of("config (n = 1024, q = 12289)\ninit (poly = 8)") == 1);
    CHECK(pc_of("config (n = 1024, q = 12289)\ntransform (mode = DIF_NTT, poly_dst = 1, poly_src = 0)") == 1);
    CHECK(pc_of("config (n = 256, q = 7000)\nmult_psi (poly = 0)") == 1);
    CHECK(pc_of("config (n = 256, q = 32768)\npoly_op (op = MUL, poly_dst = 1, poly_src = 0)") == -1);
}

TEST_CASE("program pipeline equals the negacyclic product") {
    const unsigned n = 256;
    const uint32_t q = 7681;
    Machine m;
    m.configure(n, q);
    std::mt19937_64 rng(77);
    auto a = random_poly(rng, n, q), b = random_poly(rng, n, q);
    m.write_slot(0, a);
    m.write_slot(1, b);
    run_source(m, "mult_psi (poly = 0)\ntransform (mode = DIF_NTT, poly_dst = 16, poly_src = 0)\n"
                  "mult_psi (poly = 1)\ntransform (mode = DIF_NTT, poly_dst = 17, poly_src = 1)\n"
                  "poly_op (op = MUL, poly_dst = 16, poly_src = 17)\n"
                  "transform (mode = DIT_INTT, poly_dst = 2, poly_src = 16)\nmult_psi_inv (poly = 2)");
    std::vector<uint64_t> want(n, 0);
    for (unsigned i = 0; i < n; ++i)
        for (unsigned j = 0; j < n; ++j) {
            uint64_t p = uint64_t(a[i]) * b[j] % q;
            unsigned k = (i + j) % n;
            want[k] = (i + j < n) ? (want[k] + p) % q : (want[k] + q - p) % q;
        }
    auto got = m.read_slot(2);
    bool ok = true;
    for (unsigned i = 0; i < n; ++i) ok &= got[i] == want[i];
    CHECK(ok);
}

TEST_CASE("determinism and data-independent timing") {
    const unsigned n = 256;
    const uint32_t q = 7681;
    const std::string prog = "mult_psi (poly = 0)\n"
                             "transform (mode = DIF_NTT, poly_dst = 16, poly_src = 0)\n"
                             "poly_op (op = MUL, poly_dst = 16, poly_src = 1)\n"
                             "bin_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 0, k = 8, poly = 2)\n"
                             "cdt_sample (prng = SHAKE-256, seed = r1, c0 = 0, c1 = 1, r = 31, s = 11, poly = 3)\n";
    std::mt19937_64 rng(99);
    std::optional<uint64_t> cycles;
    std::optional<std::vector<AccessEvent>> trace;
    for (int t = 0; t < 20; ++t) {
        Machine m;
        m.configure(n, q);
        m.load_cdt(CdtTable::gaussian(2.75, 11, 31));
        m.write_slot(0, random_poly(rng, n, q));
        m.write_slot(1, random_poly(rng, n, q));
        Seed s;
        for (auto& x : s) x = uint8_t(rng());
        m.write_seed(1, s);
        m.set_trace(true);
        auto rep = run_source(m, prog);
        if (!cycles) {
            cycles = rep.total;
            trace = m.trace();
            CHECK(!trace->empty());
        } else {
            CHECK(rep.total == *cycles);
            CHECK(m.trace() == *trace);
        }
    }
    // identical inputs give identical state
    auto once = [&] {
        Machine m;
        m.configure(n, q);
        m.load_cdt(CdtTable::gaussian(2.75, 11, 31));
        m.write_seed(1, seed_of(5));
        run_source(m, prog);
        return std::make_tuple(m.read_slot(2), m.read_slot(3), m.read_slot(16), m.report());
    };
    CHECK(once() == once());
}

TEST_CASE("report formats") {
    Machine m;
    m.configure(256, 7681);
    auto rep = run_source(m, "mult_psi (poly = 0)\ntransform (mode = DIF_NTT, poly_dst = 16, poly_src = 0)");
    auto kv = format_report(rep, ReportFormat::KeyValue);
    CHECK(kv.find("cycles.total=1289\n") != std::string::npos);
    CHECK(kv.find("cycles.ntt=1032\n") != std::string::npos);
    CHECK(kv.find("op.transform.count=1\n") != std::string::npos);
    auto text = format_report(rep, ReportFormat::Text);
    CHECK(text.find("total cycles: 1289") != std::string::npos);
}
