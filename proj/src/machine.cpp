#include "sapphire/machine.hpp"

#include <algorithm>
#include <sstream>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

constexpr uint32_t kMask24 = (1u << 24) - 1;
constexpr uint64_t kPermutationCycles = 24;

const std::array<const char*, kUnitCount> kUnitNames = {"ntt", "psi", "alu", "keccak", "sampler", "control"};

std::string op_key(Op op) {
    // mnemonic without operands, usable as a report key
    static const std::map<Op, std::string> keys = {
        {Op::C0Set, "c0_set"}, {Op::C0Add, "c0_add"}, {Op::C0Sub, "c0_sub"}, {Op::C1Set, "c1_set"},
        {Op::C1Add, "c1_add"}, {Op::C1Sub, "c1_sub"}, {Op::RegSet, "reg_set"}, {Op::RegFromTmp, "reg_from_tmp"},
        {Op::TmpSet, "tmp_set"}, {Op::TmpOp, "tmp_op"}, {Op::MaxElems, "max_elems"}, {Op::SumElems, "sum_elems"},
        {Op::RegFromPoly, "reg_from_poly"}, {Op::PolyFromReg, "poly_from_reg"}, {Op::EqCheck, "eq_check"},
        {Op::InfNormCheck, "inf_norm_check"}, {Op::Compare, "compare"}, {Op::Branch, "goto"},
        {Op::Sha3Absorb256Poly, "sha3_256_absorb_poly"}, {Op::Sha3Absorb512Poly, "sha3_512_absorb_poly"},
        {Op::Sha3Absorb256Seed, "sha3_256_absorb_seed"}, {Op::Sha3Absorb512Seed, "sha3_512_absorb_seed"},
        {Op::Sha3Digest256, "sha3_256_digest"}, {Op::Sha3Digest512, "sha3_512_digest"}};
    auto it = keys.find(op);
    return it != keys.end() ? it->second : mnemonic(op);
}

int8_t sign_of(int64_t d) { return d < 0 ? -1 : d > 0 ? 1 : 0; }

}  // namespace

std::string to_string(Unit u) { return kUnitNames[size_t(u)]; }

std::string format_report(const CycleReport& r, ReportFormat f) {
    std::ostringstream os;
    if (f == ReportFormat::KeyValue) {
        os << "cycles.total=" << r.total << '\n';
        for (size_t u = 0; u < kUnitCount; ++u) os << "cycles." << kUnitNames[u] << '=' << r.per_unit[u] << '\n';
        os << "instructions=" << r.instructions << '\n';
        os << "hazards=" << r.hazards << '\n';
        os << "halted=" << (r.halted ? 1 : 0) << '\n';
        for (const auto& [op, s] : r.per_instruction) {
            os << "op." << op_key(op) << ".count=" << s.count << '\n';
            os << "op." << op_key(op) << ".cycles=" << s.cycles << '\n';
        }
        return os.str();
    }
    os << "total cycles: " << r.total << '\n';
    os << "instructions: " << r.instructions << (r.halted ? " (halted)" : " (cycle limit)") << '\n';
    os << "hazards:      " << r.hazards << '\n';
    os << "per unit:\n";
    for (size_t u = 0; u < kUnitCount; ++u) os << "  " << kUnitNames[u] << ": " << r.per_unit[u] << '\n';
    os << "per instruction:\n";
    for (const auto& [op, s] : r.per_instruction)
        os << "  " << op_key(op) << ": " << s.count << " x, " << s.cycles << " cycles\n";
    return os.str();
}

Machine::Machine() { st_.cache.set_hazard_mode(HazardMode::Count); }

void Machine::load_program(const Program& p) {
    if (p.words() > kInstructionMemoryWords)
        throw ProgramError("program needs " + std::to_string(p.words()) + " words; instruction memory holds " +
                           std::to_string(kInstructionMemoryWords));
    for (const auto& i : p.code)
        if (i.op == Op::Branch && i.target > p.code.size()) throw ProgramError("branch target outside program");
    program_ = p;
    reset();
}

void Machine::reset() {
    st_.pc = 0;
    st_.cycles = 0;
    st_.halted = false;
    st_.cache.reset_hazards();
    report_ = CycleReport{};
}

void Machine::set_trace(bool on) { st_.cache.set_recording(on); }

// ---------------------------------------------------------------- host interface

void Machine::configure(unsigned n, uint32_t q) {
    LatticeConfig c = LatticeConfig::make(n, q);
    st_.cache.configure(n);
    st_.config = c;
    st_.consts.reset();
    if (supports_ntt(n, q)) st_.consts = gen_constants(c);
}

void Machine::check_slot(unsigned slot) const {
    if (slot >= st_.cache.slots())
        throw ProgramError("slot " + std::to_string(slot) + " out of range (" + std::to_string(st_.cache.slots()) +
                           " slots at n = " + std::to_string(st_.cache.n()) + ")");
}

void Machine::write_slot(unsigned slot, const std::vector<uint32_t>& coeffs) {
    require_config();
    check_slot(slot);
    if (coeffs.size() != cfg().n) throw ContractViolation("slot data must have n coefficients");
    for (auto v : coeffs)
        if (v >= cfg().q) throw ContractViolation("coefficient " + std::to_string(v) + " not below q");
    st_.cache.store(slot, coeffs);
}

std::vector<uint32_t> Machine::read_slot(unsigned slot) const {
    require_config();
    check_slot(slot);
    return st_.cache.load(slot);
}

void Machine::write_seed(unsigned which, const Seed& seed) {
    if (which > 1) throw ContractViolation("seed register must be r0 or r1");
    (which ? st_.r1 : st_.r0) = seed;
}

Seed Machine::read_seed(unsigned which) const {
    if (!debug_) throw ContractViolation("seed registers are write-only outside debug mode");
    if (which > 1) throw ContractViolation("seed register must be r0 or r1");
    return which ? st_.r1 : st_.r0;
}

void Machine::load_cdt(const CdtTable& t) {
    if (t.s() > 64 || t.r > 32) throw ContractViolation("CDT RAM holds at most 64 entries of 32 bits");
    t.validate();
    st_.cdt_ram = t;
}

void Machine::set_counters(uint16_t c0, uint16_t c1) {
    st_.c0 = c0;
    st_.c1 = c1;
}

void Machine::set_reg(uint32_t v) {
    if (v > kMask24) throw ContractViolation("reg is 24 bits");
    st_.reg = v;
}

void Machine::set_tmp(uint32_t v) {
    if (v > kMask24) throw ContractViolation("tmp is 24 bits");
    st_.tmp = v;
}

// ---------------------------------------------------------------- execution

void Machine::require_config() const {
    if (!st_.config) throw ProgramError("machine not configured");
}

void Machine::require_ungated(bool gated, const char* unit) const {
    if (gated && strict_gating_) throw ProgramError(std::string(unit) + " clock is gated");
}

void Machine::charge(Unit u, uint64_t cycles) {
    bool gated = false;
    switch (u) {
        case Unit::Ntt: case Unit::Psi: gated = st_.gates.ntt; break;
        case Unit::Keccak: gated = st_.gates.keccak; break;
        case Unit::Sampler: gated = st_.gates.sampler; break;
        default: break;
    }
    if (!gated) report_.per_unit[size_t(u)] += cycles;
}

ExecutionEvent Machine::step() {
    ExecutionEvent ev;
    ev.pc = st_.pc;
    if (st_.halted || st_.pc >= program_.code.size()) {
        st_.halted = true;
        report_.halted = true;
        ev.halted = true;
        return ev;
    }
    const Instruction& ins = program_.code[st_.pc];
    ev.op = ins.op;
    const size_t pc = st_.pc;
    uint64_t c;
    try {
        c = execute(ins);
    } catch (const MachineFault&) {
        throw;
    } catch (const std::exception& e) {
        throw MachineFault(pc, mnemonic(ins.op) + ": " + e.what());
    }
    st_.cycles += c;
    report_.total = st_.cycles;
    report_.instructions += 1;
    auto& s = report_.per_instruction[ins.op];
    s.count += 1;
    s.cycles += c;
    report_.hazards = st_.cache.hazards();
    if (st_.pc >= program_.code.size()) {
        st_.halted = true;
        report_.halted = true;
    }
    ev.cycles = c;
    return ev;
}

CycleReport Machine::run(uint64_t max_cycles) {
    while (!st_.halted && st_.cycles < max_cycles) step();
    if (!st_.halted && st_.pc >= program_.code.size()) {
        st_.halted = true;
        report_.halted = true;
    }
    return report_;
}

// One pass over n coefficients: cycle c reads index c of every slot in `reads` and writes index
// c - 1 of dst, so n + 1 cycles in total.
uint64_t Machine::stream(unsigned dst, std::vector<unsigned> reads, const std::vector<uint32_t>& out) {
    const unsigned n = cfg().n;
    std::sort(reads.begin(), reads.end());
    reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
    auto& cache = st_.cache;
    for (unsigned c = 0; c <= n; ++c) {
        cache.begin_cycle(st_.cycles + c);
        if (c < n)
            for (unsigned s : reads) cache.read(s, c);
        if (c >= 1) cache.write(dst, c - 1, out[c - 1]);
    }
    return n + 1;
}

// Reads every coefficient once, one per cycle, plus one cycle to retire the result.
uint64_t Machine::read_stream(unsigned slot) {
    const unsigned n = cfg().n;
    for (unsigned c = 0; c < n; ++c) {
        st_.cache.begin_cycle(st_.cycles + c);
        st_.cache.read(slot, c);
    }
    return n + 1;
}

uint64_t Machine::run_sampler(const Instruction& ins) {
    require_config();
    require_ungated(st_.gates.keccak, "keccak");
    require_ungated(st_.gates.sampler, "sampler");
    check_slot(ins.poly);
    const unsigned n = cfg().n;
    const uint32_t q = cfg().q;
    const uint16_t c0 = ins.c0_reg ? st_.c0 : ins.c0;
    const uint16_t c1 = ins.c1_reg ? st_.c1 : ins.c1;
    KeccakState prng = seeded_prng(ins.prng, ins.seed ? st_.r1 : st_.r0, c0, c1);
    SamplerStats stats;
    std::vector<uint32_t> out;
    switch (ins.op) {
        case Op::RejSample: out = rej_sample(n, RejectionPlan::for_modulus(q), prng, &stats); break;
        case Op::BinSample: out = to_residues(bin_sample(n, ins.k, prng, &stats), q); break;
        case Op::CdtSample: {
            if (ins.s > st_.cdt_ram.s()) throw ProgramError("CDT RAM holds fewer than s entries");
            CdtTable t;
            t.r = ins.r;
            t.entries.assign(st_.cdt_ram.entries.begin(), st_.cdt_ram.entries.begin() + ins.s);
            t.validate();
            out = to_residues(cdt_sample(n, t, prng, &stats), q);
            break;
        }
        case Op::UniSample:
            if (ins.eta >= q) throw ProgramError("eta must be below q");
            out = to_residues(uni_sample(n, ins.eta, ins.bitlen, prng, &stats), q);
            break;
        case Op::TriSample1:
            if (ins.m > n) throw ProgramError("m exceeds n");
            out = to_residues(tri_sample_fixed(n, ins.m, prng, &stats), q);
            break;
        case Op::TriSample2:
            if (ins.m0 + ins.m1 > n) throw ProgramError("m0 + m1 exceeds n");
            out = to_residues(tri_sample_split(n, ins.m0, ins.m1, prng, &stats), q);
            break;
        case Op::TriSample3: out = to_residues(tri_sample_prob(n, ins.k, prng, &stats), q); break;
        default: break;
    }
    const uint64_t keccak = kPermutationCycles * prng.permutations();
    const uint64_t sampler = stats.words + n;
    const uint64_t total = keccak + sampler;
    // coefficient i lands at the end of its share of the instruction's cycles
    for (unsigned i = 0; i < n; ++i) {
        st_.cache.begin_cycle(st_.cycles + (uint64_t(i) + 1) * total / n - 1);
        st_.cache.write(ins.poly, i, out[i]);
    }
    charge(Unit::Keccak, keccak);
    charge(Unit::Sampler, sampler);
    return total;
}

uint64_t Machine::sha3_absorb(const Instruction& ins) {
    require_ungated(st_.gates.keccak, "keccak");
    const bool wide = ins.op == Op::Sha3Absorb512Poly || ins.op == Op::Sha3Absorb512Seed;
    const SpongeMode mode = wide ? SpongeMode::Sha3_512 : SpongeMode::Sha3_256;
    if (hash_done_) throw ProgramError("sha3 absorb after digest needs sha3_init");
    if (hash_mode_ && *hash_mode_ != mode) throw ProgramError("sha3 absorb mixes 256 and 512 modes");
    if (!hash_mode_) {
        hash_ = KeccakState(mode);
        hash_mode_ = mode;
    }
    const uint64_t before = hash_.permutations();
    uint64_t cycles;
    if (ins.op == Op::Sha3Absorb256Poly || ins.op == Op::Sha3Absorb512Poly) {
        require_config();
        check_slot(ins.poly);
        const unsigned n = cfg().n;
        std::vector<uint8_t> bytes;
        bytes.reserve(3 * n);
        for (unsigned i = 0; i < n; ++i) {
            st_.cache.begin_cycle(st_.cycles + i);
            uint32_t v = st_.cache.read(ins.poly, i);
            bytes.push_back(uint8_t(v));
            bytes.push_back(uint8_t(v >> 8));
            bytes.push_back(uint8_t(v >> 16));
        }
        hash_.absorb(bytes);
        cycles = n;
    } else {
        const Seed& s = ins.seed ? st_.r1 : st_.r0;
        hash_.absorb(s);
        cycles = s.size() / 4;
    }
    cycles += kPermutationCycles * (hash_.permutations() - before);
    charge(Unit::Keccak, cycles);
    return cycles;
}

uint64_t Machine::sha3_digest(const Instruction& ins) {
    require_ungated(st_.gates.keccak, "keccak");
    const SpongeMode mode = ins.op == Op::Sha3Digest512 ? SpongeMode::Sha3_512 : SpongeMode::Sha3_256;
    if (hash_done_) throw ProgramError("sha3 digest twice without sha3_init");
    if (hash_mode_ && *hash_mode_ != mode) throw ProgramError("sha3 digest does not match the absorb mode");
    if (!hash_mode_) hash_ = KeccakState(mode);
    const uint64_t before = hash_.permutations();
    const size_t len = mode == SpongeMode::Sha3_512 ? 64 : 32;
    auto out = hash_.squeeze_bytes(len);
    hash_done_ = true;
    hash_mode_ = mode;
    if (len == 64) {
        std::copy(out.begin(), out.begin() + 32, st_.r0.begin());
        std::copy(out.begin() + 32, out.end(), st_.r1.begin());
    } else {
        std::copy(out.begin(), out.end(), (ins.seed ? st_.r1 : st_.r0).begin());
    }
    uint64_t cycles = kPermutationCycles * (hash_.permutations() - before) + len / 4;
    charge(Unit::Keccak, cycles);
    return cycles;
}

uint64_t Machine::execute(const Instruction& ins) {
    size_t next = st_.pc + 1;
    uint64_t cycles = 1;
    auto& cache = st_.cache;

    auto index_of = [&](const Instruction& i) -> unsigned {
        unsigned idx = i.index == IndexSource::C0 ? st_.c0 : i.index == IndexSource::C1 ? st_.c1 : i.value;
        if (idx >= cfg().n) throw ProgramError("element index " + std::to_string(idx) + " not below n");
        return idx;
    };

    switch (ins.op) {
        case Op::Config:
            configure(ins.n, ins.q);
            charge(Unit::Control, 1);
            break;
        case Op::ClockConfig:
            st_.gates = {ins.gate_keccak, ins.gate_ntt, ins.gate_sampler};
            charge(Unit::Control, 1);
            break;
        case Op::C0Set: st_.c0 = uint16_t(ins.value); charge(Unit::Alu, 1); break;
        case Op::C0Add: st_.c0 = uint16_t(st_.c0 + ins.value); charge(Unit::Alu, 1); break;
        case Op::C0Sub: st_.c0 = uint16_t(st_.c0 - ins.value); charge(Unit::Alu, 1); break;
        case Op::C1Set: st_.c1 = uint16_t(ins.value); charge(Unit::Alu, 1); break;
        case Op::C1Add: st_.c1 = uint16_t(st_.c1 + ins.value); charge(Unit::Alu, 1); break;
        case Op::C1Sub: st_.c1 = uint16_t(st_.c1 - ins.value); charge(Unit::Alu, 1); break;
        case Op::RegSet: st_.reg = ins.value & kMask24; charge(Unit::Alu, 1); break;
        case Op::RegFromTmp: st_.reg = st_.tmp; charge(Unit::Alu, 1); break;
        case Op::TmpSet: st_.tmp = ins.value & kMask24; charge(Unit::Alu, 1); break;
        case Op::TmpOp: {
            uint64_t a = st_.tmp, b = st_.reg, r = 0;
            switch (ins.alu) {
                case AluOp::ADD: r = a + b; break;
                case AluOp::SUB: r = a - b; break;
                case AluOp::MUL: r = a * b; break;
                case AluOp::AND: r = a & b; break;
                case AluOp::OR: r = a | b; break;
                case AluOp::XOR: r = a ^ b; break;
                case AluOp::RSHIFT: r = b >= 24 ? 0 : a >> b; break;
                case AluOp::LSHIFT: r = b >= 24 ? 0 : a << b; break;
            }
            st_.tmp = uint32_t(r) & kMask24;
            charge(Unit::Alu, 1);
            break;
        }
        case Op::MaxElems:
        case Op::SumElems: {
            require_config();
            check_slot(ins.poly);
            const uint32_t q = cfg().q;
            auto v = cache.load(ins.poly);
            uint64_t acc = 0;
            for (auto x : v) acc = ins.op == Op::MaxElems ? std::max<uint64_t>(acc, x % q) : (acc + x % q) % q;
            cycles = read_stream(ins.poly);
            st_.reg = uint32_t(acc);
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::RegFromPoly: {
            require_config();
            check_slot(ins.poly);
            cache.begin_cycle(st_.cycles);
            st_.reg = cache.read(ins.poly, index_of(ins));
            charge(Unit::Alu, 1);
            break;
        }
        case Op::PolyFromReg: {
            require_config();
            check_slot(ins.poly);
            cache.begin_cycle(st_.cycles);
            cache.write(ins.poly, index_of(ins), st_.reg % cfg().q);
            charge(Unit::Alu, 1);
            break;
        }
        case Op::Transform: {
            require_config();
            require_ungated(st_.gates.ntt, "ntt");
            if (!st_.consts)
                throw ProgramError("transform needs a prime q with q = 1 mod 2n (q = " + std::to_string(cfg().q) +
                                   ", n = " + std::to_string(cfg().n) + ")");
            check_slot(ins.src);
            check_slot(ins.dst);
            cycles = ntt(cache, ins.src, ins.dst, ins.mode, *st_.consts, cfg().profile, st_.cycles);
            charge(Unit::Ntt, cycles);
            break;
        }
        case Op::MultPsi:
        case Op::MultPsiInv: {
            require_config();
            require_ungated(st_.gates.ntt, "ntt");
            if (!st_.consts) throw ProgramError("psi scaling needs a prime q with q = 1 mod 2n");
            check_slot(ins.poly);
            cycles = ins.op == Op::MultPsi ? mult_psi(cache, ins.poly, *st_.consts, cfg().profile, st_.cycles)
                                           : mult_psi_inv(cache, ins.poly, *st_.consts, cfg().profile, st_.cycles);
            charge(Unit::Psi, cycles);
            break;
        }
        case Op::BinSample: case Op::CdtSample: case Op::RejSample: case Op::UniSample:
        case Op::TriSample1: case Op::TriSample2: case Op::TriSample3: cycles = run_sampler(ins); break;
        case Op::Init: {
            require_config();
            check_slot(ins.poly);
            cycles = stream(ins.poly, {}, std::vector<uint32_t>(cfg().n, 0));
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::PolyCopy: {
            require_config();
            check_slot(ins.src);
            check_slot(ins.dst);
            cycles = stream(ins.dst, {ins.src}, cache.load(ins.src));
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::PolyOp: {
            require_config();
            check_slot(ins.src);
            check_slot(ins.dst);
            const unsigned n = cfg().n;
            const uint32_t q = cfg().q;
            const ModulusProfile& p = cfg().profile;
            auto a = cache.load(ins.src);
            auto b = cache.load(ins.dst);
            for (auto& x : a) x %= q;
            for (auto& x : b) x %= q;
            const uint32_t k = st_.reg;
            const uint32_t kq = k % q;
            std::vector<uint32_t> out(n);
            std::vector<unsigned> reads = {ins.src};
            bool binary = ins.pop == PolyOpKind::ADD || ins.pop == PolyOpKind::SUB || ins.pop == PolyOpKind::MUL;
            if (binary) reads.push_back(ins.dst);
            for (unsigned i = 0; i < n; ++i) {
                const uint32_t x = a[i];
                switch (ins.pop) {
                    case PolyOpKind::ADD: out[i] = mod_add(x, b[i], p); break;
                    case PolyOpKind::SUB: out[i] = mod_sub(x, b[i], p); break;
                    case PolyOpKind::MUL: out[i] = mod_mul(x, b[i], p); break;
                    case PolyOpKind::BITREV: out[i] = a[bit_reverse(i, cfg().lg_n)]; break;
                    case PolyOpKind::CONST_ADD: out[i] = mod_add(x, kq, p); break;
                    case PolyOpKind::CONST_SUB: out[i] = mod_sub(x, kq, p); break;
                    case PolyOpKind::CONST_MUL: out[i] = mod_mul(x, kq, p); break;
                    case PolyOpKind::CONST_AND: out[i] = (x & k) % q; break;
                    case PolyOpKind::CONST_OR: out[i] = (x | k) % q; break;
                    case PolyOpKind::CONST_XOR: out[i] = (x ^ k) % q; break;
                    case PolyOpKind::CONST_RSHIFT: out[i] = k >= 24 ? 0 : (x >> k) % q; break;
                    case PolyOpKind::CONST_LSHIFT: out[i] = k >= 24 ? 0 : uint32_t((uint64_t(x) << k) & kMask24) % q; break;
                }
            }
            if (ins.pop == PolyOpKind::BITREV) {
                // source read in bit-reversed order, destination written in order
                for (unsigned c = 0; c <= n; ++c) {
                    cache.begin_cycle(st_.cycles + c);
                    if (c < n) cache.read(ins.src, bit_reverse(c, cfg().lg_n));
                    if (c >= 1) cache.write(ins.dst, c - 1, out[c - 1]);
                }
                cycles = n + 1;
            } else {
                cycles = stream(ins.dst, reads, out);
            }
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::ShiftPoly: {
            require_config();
            check_slot(ins.src);
            check_slot(ins.dst);
            const unsigned n = cfg().n;
            const uint32_t q = cfg().q;
            auto a = cache.load(ins.src);
            std::vector<uint32_t> out(n);
            for (unsigned i = 1; i < n; ++i) out[i] = a[i - 1] % q;
            const uint32_t top = a[n - 1] % q;
            out[0] = ins.ring == Ring::Cyclic ? top : (top == 0 ? 0 : q - top);
            cycles = stream(ins.dst, {ins.src}, out);
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::EqCheck: {
            require_config();
            check_slot(ins.dst);
            check_slot(ins.src);
            const uint32_t q = cfg().q;
            auto a = cache.load(ins.dst), b = cache.load(ins.src);
            bool eq = true;
            for (unsigned i = 0; i < a.size(); ++i) eq &= (a[i] % q) == (b[i] % q);
            const unsigned n = cfg().n;
            for (unsigned c = 0; c < n; ++c) {
                cache.begin_cycle(st_.cycles + c);
                cache.read(ins.dst, c);
                if (ins.src != ins.dst) cache.read(ins.src, c);
            }
            cycles = n + 1;
            st_.flag = eq ? 1 : 0;
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::InfNormCheck: {
            require_config();
            check_slot(ins.poly);
            const uint32_t q = cfg().q;
            bool ok = true;
            for (auto x : cache.load(ins.poly)) {
                int64_t c = centered(x % q, q);
                ok &= (c < 0 ? -c : c) <= int64_t(ins.value);
            }
            cycles = read_stream(ins.poly);
            st_.flag = ok ? 1 : 0;
            charge(Unit::Alu, cycles);
            break;
        }
        case Op::Compare: {
            uint32_t v = 0;
            switch (ins.scalar) {
                case ScalarReg::Reg: v = st_.reg; break;
                case ScalarReg::Tmp: v = st_.tmp; break;
                case ScalarReg::C0: v = st_.c0; break;
                case ScalarReg::C1: v = st_.c1; break;
            }
            st_.flag = sign_of(int64_t(v) - int64_t(ins.value));
            charge(Unit::Control, 1);
            break;
        }
        case Op::Branch: {
            bool eq = st_.flag == ins.branch_value;
            if (eq != ins.branch_ne) {
                if (ins.target > program_.code.size()) throw ProgramError("branch target outside program");
                next = ins.target;
            }
            charge(Unit::Control, 1);
            break;
        }
        case Op::Sha3Init:
            require_ungated(st_.gates.keccak, "keccak");
            hash_mode_.reset();
            hash_done_ = false;
            charge(Unit::Keccak, 1);
            break;
        case Op::Sha3Absorb256Poly: case Op::Sha3Absorb512Poly:
        case Op::Sha3Absorb256Seed: case Op::Sha3Absorb512Seed: cycles = sha3_absorb(ins); break;
        case Op::Sha3Digest256: case Op::Sha3Digest512: cycles = sha3_digest(ins); break;
    }
    st_.pc = next;
    return cycles;
}

}  // namespace sapphire
