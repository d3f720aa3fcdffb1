#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "sapphire/errors.hpp"
#include "sapphire/isa.hpp"
#include "sapphire/keccak.hpp"
#include "sapphire/machine.hpp"
#include "sapphire/modmath.hpp"
#include "sapphire/nttcore.hpp"
#include "sapphire/protocols.hpp"

extern const char* const kFips202Kats;

using namespace sapphire;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFault = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<uint8_t> unhex(const std::string& h) {
    if (h.size() % 2) throw UsageError("odd-length hex string");
    std::vector<uint8_t> out;
    for (size_t i = 0; i < h.size(); i += 2) {
        unsigned v;
        if (std::sscanf(h.substr(i, 2).c_str(), "%2x", &v) != 1 || !std::isxdigit(h[i]) || !std::isxdigit(h[i + 1]))
            throw UsageError("bad hex string");
        out.push_back(uint8_t(v));
    }
    return out;
}

std::string hex(const uint8_t* p, size_t n) {
    static const char* d = "0123456789abcdef";
    std::string s;
    for (size_t i = 0; i < n; ++i) {
        s += d[p[i] >> 4];
        s += d[p[i] & 15];
    }
    return s;
}

Seed parse_seed_text(const std::string& text) {
    Seed s{};
    if (text == "os") {
        std::random_device rd;
        for (auto& b : s) b = uint8_t(rd());
        return s;
    }
    if (text.size() != 64) throw UsageError("seed must be 64 hex digits or \"os\"");
    auto b = unhex(text);
    std::copy(b.begin(), b.end(), s.begin());
    return s;
}

// --seed, then SAPPHIRE_EMU_SEED, then all zero.
Seed resolve_seed(const std::string& flag) {
    if (!flag.empty()) return parse_seed_text(flag);
    if (const char* env = std::getenv("SAPPHIRE_EMU_SEED"); env && *env) return parse_seed_text(env);
    return Seed{};
}

// Independent 32-byte streams per (label, index) from the master seed.
Seed derive(const Seed& master, const std::string& label, uint32_t index) {
    std::vector<uint8_t> in(master.begin(), master.end());
    in.insert(in.end(), label.begin(), label.end());
    for (int i = 0; i < 4; ++i) in.push_back(uint8_t(index >> (8 * i)));
    auto out = shake256(in, 32);
    Seed s;
    std::copy(out.begin(), out.end(), s.begin());
    return s;
}

Program load_program_file(const std::string& path) {
    std::string data = read_text(path);
    if (data.size() >= 4 && data.compare(0, 4, "SPH1") == 0)
        return decode(from_binary(std::vector<uint8_t>(data.begin(), data.end())));
    return assemble(data);
}

ReportFormat parse_format(const std::string& f) {
    if (f == "text") return ReportFormat::Text;
    if (f == "kv" || f == "structured") return ReportFormat::KeyValue;
    throw UsageError("unknown report format " + f);
}

// ---- asm ----

int cmd_asm(const std::string& src, std::string out) {
    Program p;
    try {
        p = assemble(read_text(src));
    } catch (const AsmError& e) {
        std::cerr << src << ":" << e.line << ":" << e.col << ": error: "
                  << std::string(e.what()).substr(std::string(e.what()).find(": ") + 2) << '\n';
        return kExitUsage;
    }
    if (out.empty()) {
        auto dot = src.rfind('.');
        out = (dot == std::string::npos ? src : src.substr(0, dot)) + ".bin";
    }
    auto bin = to_binary(encode(p));
    std::ofstream os(out, std::ios::binary);
    if (!os) throw UsageError("cannot write " + out);
    os.write(reinterpret_cast<const char*>(bin.data()), std::streamsize(bin.size()));
    std::cout << p.code.size() << " instructions\n";
    return kExitPass;
}

// ---- run ----

struct RunOptions {
    std::string program;
    std::string data_in, data_out;
    std::vector<unsigned> dump;
    std::string seed;
    uint64_t cycles = UINT64_MAX;
    std::string trace;
    bool strict = false;
    std::string format = "text";
    unsigned n = 0;
    uint32_t q = 0;
};

// Lines: `slot <id> <hex>`, `r0|r1 <hex>`, `c0|c1|reg|tmp <value>`, `#` comments.
void apply_data_in(Machine& m, const std::string& path) {
    std::istringstream in(read_text(path));
    std::string line;
    size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        auto fail = [&](const std::string& msg) { throw UsageError(path + ":" + std::to_string(no) + ": " + msg); };
        std::string val;
        if (key == "slot") {
            unsigned slot;
            if (!(ls >> slot >> val)) fail("expected `slot <id> <hex>`");
            m.write_slot(slot, poly_from_hex(val));
        } else if (key == "r0" || key == "r1") {
            if (!(ls >> val)) fail("expected a seed");
            m.write_seed(key == "r1", parse_seed_text(val));
        } else if (key == "c0" || key == "c1" || key == "reg" || key == "tmp") {
            uint64_t v;
            if (!(ls >> v)) fail("expected a value");
            const auto& st = m.state();
            if (key == "c0") m.set_counters(uint16_t(v), st.c1);
            if (key == "c1") m.set_counters(st.c0, uint16_t(v));
            if (key == "reg") m.set_reg(uint32_t(v));
            if (key == "tmp") m.set_tmp(uint32_t(v));
        } else {
            fail("unknown key " + key);
        }
    }
}

int cmd_run(const RunOptions& o) {
    Program p;
    try {
        p = load_program_file(o.program);
    } catch (const AsmError& e) {
        std::cerr << o.program << ":" << e.what() << '\n';
        return kExitUsage;
    } catch (const DecodeError& e) {
        std::cerr << o.program << ": " << e.what() << '\n';
        return kExitUsage;
    }
    const ReportFormat fmt = parse_format(o.format);
    Machine m;
    m.set_strict_gating(o.strict);
    m.set_trace(!o.trace.empty());
    Seed seed = resolve_seed(o.seed);
    m.write_seed(0, seed);
    m.write_seed(1, sha3_256(seed));
    if (o.n || o.q) {
        if (!o.n || !o.q) throw UsageError("--n and --q go together");
        m.configure(o.n, o.q);
    }
    if (!o.data_in.empty()) apply_data_in(m, o.data_in);
    m.load_program(p);
    CycleReport r;
    try {
        r = m.run(o.cycles);
    } catch (const MachineFault& e) {
        std::cerr << "machine fault at " << e.what() << '\n';
        return kExitFault;
    }
    std::cout << format_report(r, fmt);
    if (!o.trace.empty()) {
        std::string t = format_trace(m.trace());
        if (o.trace == "-") {
            std::cout << t;
        } else {
            std::ofstream(o.trace) << t;
        }
    }
    if (!o.dump.empty()) {
        std::ostringstream os;
        for (unsigned s : o.dump) os << "slot " << s << ' ' << poly_to_hex(m.read_slot(s)) << '\n';
        os << "reg " << m.state().reg << "\ntmp " << m.state().tmp << "\nflag " << int(m.state().flag) << '\n';
        if (o.data_out.empty()) std::cout << os.str();
        else std::ofstream(o.data_out) << os.str();
    }
    return kExitPass;
}

// ---- kat ----

struct Outcome {
    size_t passed = 0, total = 0;
    std::vector<std::string> failures;
    void check(bool ok, const std::string& name) {
        ++total;
        if (ok) ++passed;
        else failures.push_back(name);
    }
};

Outcome fips202_kats() {
    Outcome o;
    std::istringstream in(kFips202Kats);
    std::string alg, msg, expected;
    size_t len, line = 0;
    while (in >> alg >> msg >> len >> expected) {
        ++line;
        std::vector<uint8_t> data = msg == "-" ? std::vector<uint8_t>{} : unhex(msg);
        std::string got;
        if (alg == "sha3_256") {
            auto d = sha3_256(data);
            got = hex(d.data(), d.size());
        } else if (alg == "sha3_512") {
            auto d = sha3_512(data);
            got = hex(d.data(), d.size());
        } else if (alg == "shake128") {
            auto d = shake128(data, len);
            got = hex(d.data(), d.size());
        } else if (alg == "shake256") {
            auto d = shake256(data, len);
            got = hex(d.data(), d.size());
        }
        o.check(got == expected, alg + " vector " + std::to_string(line));
    }
    return o;
}

std::vector<uint64_t> sweep_inputs(uint32_t q, size_t count, std::mt19937_64& rng) {
    const uint64_t q2 = uint64_t(q) * q;
    std::vector<uint64_t> v = {0, 1, q - 1u, q, q + 1u, 2ull * q - 1, q2 - 1, q2 - q, (q2 - 1) / 2};
    std::uniform_int_distribution<uint64_t> d(0, q2 - 1);
    for (size_t i = 0; i < count; ++i) v.push_back(d(rng));
    return v;
}

Outcome reduction_sweeps(size_t count) {
    Outcome o;
    std::mt19937_64 rng(0x5eed);
    auto sweep = [&](const std::string& name, uint32_t q, auto&& f) {
        bool ok = true;
        for (uint64_t z : sweep_inputs(q, count, rng)) ok &= f(z) == uint32_t(z % q);
        o.check(ok, name);
    };
    for (uint32_t q : specialized_primes())
        sweep("specialized " + std::to_string(q), q, [q](uint64_t z) { return reduce_specialized(z, q); });
    sweep("fermat 65537", 65537, [](uint64_t z) { return reduce_fermat(z); });
    for (uint32_t q : specialized_primes()) {
        auto g = ModulusProfile::generic(q);
        sweep("generic barrett " + std::to_string(q), q, [g](uint64_t z) { return reduce(z, g); });
    }
    for (unsigned bits : {8u, 15u, 16u, 23u}) {
        auto p = ModulusProfile::power_of_two(1u << bits);
        sweep("power of two 2^" + std::to_string(bits), 1u << bits, [p](uint64_t z) { return reduce(z, p); });
    }
    return o;
}

int report(const std::string& title, const Outcome& o) {
    std::cout << title << ": " << o.passed << "/" << o.total << (o.failures.empty() ? " PASS" : " FAIL") << '\n';
    for (const auto& f : o.failures) std::cout << "  failed: " << f << '\n';
    return o.failures.empty() ? kExitPass : kExitFail;
}

int cmd_kat(size_t sweep) {
    int rc = report("FIPS-202 known answers", fips202_kats());
    rc = std::max(rc, report("modular reduction sweeps", reduction_sweeps(sweep)));
    return rc;
}

// ---- demos ----

// Runs trials [0, count) across threads, each thread with its own machine.
template <class Trial>
size_t parallel_count(size_t count, unsigned threads, Trial trial) {
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(count ? count : 1)));
    std::vector<std::future<size_t>> jobs;
    for (unsigned t = 0; t < threads; ++t)
        jobs.push_back(std::async(std::launch::async, [=] {
            size_t ok = 0;
            for (size_t i = t; i < count; i += threads) ok += trial(uint32_t(i));
            return ok;
        }));
    size_t ok = 0;
    for (auto& j : jobs) ok += j.get();
    return ok;
}

Message256 as_message(const Seed& s) {
    Message256 m;
    std::copy(s.begin(), s.end(), m.begin());
    return m;
}

int demo_newhope(const Seed& master, size_t trials, unsigned threads) {
    int rc = kExitPass;
    for (unsigned n : {512u, 1024u}) {
        const std::string tag = "newhope" + std::to_string(n);
        size_t ok = parallel_count(trials, threads, [&](uint32_t i) -> size_t {
            Machine m;
            m.configure(n, kNewHopeQ);
            CpaKeyPair kp = newhope_keygen(m, derive(master, tag + "/key", i));
            Message256 mu = as_message(derive(master, tag + "/msg", i));
            CpaCiphertext ct = newhope_encrypt(m, kp.pk, derive(master, tag + "/coin", i), mu);
            return newhope_decrypt(m, kp.sk, ct) == mu;
        });
        std::cout << "NewHope-" << n << " CPA-PKE round trips: " << ok << "/" << trials << '\n';
        if (ok != trials) rc = kExitFail;
    }
    return rc;
}

int demo_masked(const Seed& master, size_t trials, unsigned threads) {
    int rc = kExitPass;
    for (unsigned n : {512u, 1024u}) {
        const std::string tag = "masked" + std::to_string(n);
        size_t ok = parallel_count(trials, threads, [&](uint32_t i) -> size_t {
            Machine m;
            m.configure(n, kNewHopeQ);
            CpaKeyPair kp = newhope_keygen(m, derive(master, tag + "/key", i));
            Message256 mu = as_message(derive(master, tag + "/msg", i));
            CpaCiphertext ct = newhope_encrypt(m, kp.pk, derive(master, tag + "/coin", i), mu);
            Message256 plain = newhope_decrypt(m, kp.sk, ct);
            Message256 masked = masked_decrypt(m, kp.pk, kp.sk, ct, derive_mask(derive(master, tag + "/mask", i)));
            return masked == plain && plain == mu;
        });
        std::cout << "NewHope-" << n << " masked decryption equal to unmasked: " << ok << "/" << trials << '\n';
        if (ok != trials) rc = kExitFail;
    }
    return rc;
}

int demo_kyber(const Seed& master, size_t trials, unsigned threads) {
    size_t ok = parallel_count(trials, threads, [&](uint32_t i) -> size_t {
        Machine m;
        m.configure(kKyberN, kKyberQ);
        Seed rho = derive(master, "kyber/rho", i), sigma = derive(master, "kyber/sigma", i);
        return kyber_as_plus_e(m, rho, sigma) == kyber_as_plus_e_reference(rho, sigma);
    });
    std::cout << "Kyber A*s+e equal to host reference: " << ok << "/" << trials << '\n';
    return ok == trials ? kExitPass : kExitFail;
}

int demo_frodo(const Seed& master, unsigned threads) {
    const uint32_t q = 1u << 15;
    const std::vector<unsigned> dims = {80, 122, 168};
    size_t ok = parallel_count(dims.size(), threads, [&](uint32_t i) -> size_t {
        const unsigned dim = dims[i];
        unsigned width = 0;
        for (auto t : frodo_tiling(dim)) width = std::max(width, t.size);
        Machine m;
        m.configure(width, q);
        Seed sa = derive(master, "frodo/a", dim), ss = derive(master, "frodo/s", dim);
        FrodoMatrices fm = frodo_matrices(dim, q, sa, ss);
        bool as = frodo_as_plus_e(m, dim, sa, ss) == frodo_as_plus_e_reference(fm, q);
        bool sa_ = frodo_sa_plus_e(m, dim, sa, ss) == frodo_sa_plus_e_reference(fm, q);
        return as && sa_;
    });
    std::cout << "Frodo tiled AS+E and S'A+E' equal to dense product (dims 80, 122, 168): " << ok << "/"
              << dims.size() << '\n';
    return ok == dims.size() ? kExitPass : kExitFail;
}

// ---- gen-constants ----

int cmd_gen_constants(unsigned n, uint32_t q, const std::string& out) {
    NttConstants c = gen_constants(LatticeConfig::make(n, q));
    const std::string text = c.to_text();
    auto pw = [q](uint64_t b, uint64_t e) {
        uint64_t r = 1;
        for (b %= q; e; e >>= 1, b = b * b % q)
            if (e & 1) r = r * b % q;
        return r;
    };
    bool ok = NttConstants::parse(text).to_text() == text && pw(c.psi, n) == q - 1 &&
              uint64_t(c.psi) * c.psi % q == c.omega && uint64_t(n) * c.n_inv % q == 1;
    for (unsigned i = 0; ok && i < n; ++i)
        ok = c.psi_powers[i] == pw(c.psi, i) && uint64_t(c.psi_inv_scaled[i]) * c.psi_powers[i] % q == c.n_inv;
    if (out.empty() || out == "-") std::cout << text;
    else std::ofstream(out) << text;
    if (!ok) std::cerr << "constants failed self-validation\n";
    return ok ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sapphire lattice-crypto processor emulator"};
    app.require_subcommand(1);

    std::string asm_src, asm_out;
    auto* c_asm = app.add_subcommand("asm", "assemble a .sph file into an SPH1 binary");
    c_asm->add_option("source", asm_src, "assembly source")->required();
    c_asm->add_option("-o,--output", asm_out, "output binary (default: source with .bin)");

    RunOptions ro;
    auto* c_run = app.add_subcommand("run", "execute a program and print its cycle report");
    c_run->add_option("program", ro.program, ".sph source or SPH1 binary")->required();
    c_run->add_option("--seed", ro.seed, "64 hex digits or \"os\"; r0 = seed, r1 = SHA3-256(seed)");
    c_run->add_option("--cycles", ro.cycles, "cycle limit");
    c_run->add_option("--trace", ro.trace, "write the SRAM access trace to a file (- for stdout)");
    c_run->add_flag("--strict-gating", ro.strict, "fault when a clock-gated unit is used");
    c_run->add_option("--format", ro.format, "report format: text | kv")->check(CLI::IsMember({"text", "kv", "structured"}));
    c_run->add_option("--data-in", ro.data_in, "host data loaded before the run");
    c_run->add_option("--data-out", ro.data_out, "file for dumped slots (default stdout)");
    c_run->add_option("--dump", ro.dump, "slots to dump after the run")->delimiter(',');
    c_run->add_option("--n", ro.n, "configure n before the run");
    c_run->add_option("--q", ro.q, "configure q before the run");

    size_t sweep = 100000;
    auto* c_kat = app.add_subcommand("kat", "FIPS-202 known answers and modular reduction sweeps");
    c_kat->add_option("--sweep", sweep, "random inputs per reduction routine");

    std::string demo, demo_seed;
    size_t trials = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    auto* c_demo = app.add_subcommand("demo", "protocol demonstrations");
    c_demo->add_option("name", demo, "newhope | kyber | frodo | masked")
        ->required()
        ->check(CLI::IsMember({"newhope", "kyber", "frodo", "masked"}));
    c_demo->add_option("--trials", trials, "trial count (newhope 1000, masked 100, kyber 10)");
    c_demo->add_option("--seed", demo_seed, "64 hex digits or \"os\"");
    c_demo->add_option("--threads", threads, "worker threads");

    unsigned gn = 0;
    uint32_t gq = 0;
    std::string gout;
    auto* c_gen = app.add_subcommand("gen-constants", "emit transform constants for (n, q)");
    c_gen->add_option("--n", gn, "ring dimension")->required();
    c_gen->add_option("--q", gq, "modulus")->required();
    c_gen->add_option("-o,--output", gout, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (c_asm->parsed()) return cmd_asm(asm_src, asm_out);
        if (c_run->parsed()) return cmd_run(ro);
        if (c_kat->parsed()) return cmd_kat(sweep);
        if (c_gen->parsed()) return cmd_gen_constants(gn, gq, gout);
        if (c_demo->parsed()) {
            Seed master = resolve_seed(demo_seed);
            if (demo == "newhope") return demo_newhope(master, trials ? trials : 1000, threads);
            if (demo == "masked") return demo_masked(master, trials ? trials : 100, threads);
            if (demo == "kyber") return demo_kyber(master, trials ? trials : 10, threads);
            return demo_frodo(master, threads);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const MachineFault& e) {
        std::cerr << "machine fault at " << e.what() << '\n';
        return kExitFault;
    } catch (const ProgramError& e) {
        std::cerr << "program error: " << e.what() << '\n';
        return kExitFault;
    } catch (const HazardFault& e) {
        std::cerr << "hazard: " << e.what() << '\n';
        return kExitFault;
    }
    return kExitUsage;
}
