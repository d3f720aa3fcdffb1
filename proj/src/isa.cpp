#include "sapphire/isa.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <optional>
#include <regex>
#include <sstream>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

constexpr std::array<const char*, 8> kAluNames = {"ADD", "SUB", "MUL", "AND", "OR", "XOR", "RSHIFT", "LSHIFT"};
constexpr std::array<const char*, 12> kPolyOpNames = {"ADD",       "SUB",       "MUL",       "BITREV",
                                                      "CONST_ADD", "CONST_SUB", "CONST_MUL", "CONST_AND",
                                                      "CONST_OR",  "CONST_XOR", "CONST_RSHIFT", "CONST_LSHIFT"};
constexpr std::array<const char*, 4> kModeNames = {"DIF_NTT", "DIT_NTT", "DIF_INTT", "DIT_INTT"};

}  // namespace

std::string to_string(AluOp o) { return kAluNames[size_t(o)]; }
std::string to_string(PolyOpKind o) { return kPolyOpNames[size_t(o)]; }

std::string mnemonic(Op op) {
    switch (op) {
        case Op::Config: return "config";
        case Op::ClockConfig: return "clock_config";
        case Op::C0Set: return "c0 = #VAL";
        case Op::C0Add: return "c0 = c0 + #VAL";
        case Op::C0Sub: return "c0 = c0 - #VAL";
        case Op::C1Set: return "c1 = #VAL";
        case Op::C1Add: return "c1 = c1 + #VAL";
        case Op::C1Sub: return "c1 = c1 - #VAL";
        case Op::RegSet: return "reg = #VAL";
        case Op::RegFromTmp: return "reg = tmp";
        case Op::TmpSet: return "tmp = #VAL";
        case Op::TmpOp: return "tmp = tmp (OP) reg";
        case Op::MaxElems: return "reg = max_elems";
        case Op::SumElems: return "reg = sum_elems";
        case Op::RegFromPoly: return "reg = (poly)[i]";
        case Op::PolyFromReg: return "(poly)[i] = reg";
        case Op::Transform: return "transform";
        case Op::MultPsi: return "mult_psi";
        case Op::MultPsiInv: return "mult_psi_inv";
        case Op::BinSample: return "bin_sample";
        case Op::CdtSample: return "cdt_sample";
        case Op::RejSample: return "rej_sample";
        case Op::UniSample: return "uni_sample";
        case Op::TriSample1: return "tri_sample_1";
        case Op::TriSample2: return "tri_sample_2";
        case Op::TriSample3: return "tri_sample_3";
        case Op::Init: return "init";
        case Op::PolyCopy: return "poly_copy";
        case Op::PolyOp: return "poly_op";
        case Op::ShiftPoly: return "shift_poly";
        case Op::EqCheck: return "flag = eq_check";
        case Op::InfNormCheck: return "flag = inf_norm_check";
        case Op::Compare: return "flag = compare";
        case Op::Branch: return "if (flag) goto";
        case Op::Sha3Init: return "sha3_init";
        case Op::Sha3Absorb256Poly: return "sha3_256_absorb (poly)";
        case Op::Sha3Absorb512Poly: return "sha3_512_absorb (poly)";
        case Op::Sha3Absorb256Seed: return "sha3_256_absorb (r0 / r1)";
        case Op::Sha3Absorb512Seed: return "sha3_512_absorb (r0 / r1)";
        case Op::Sha3Digest256: return "r0 / r1 = sha3_256_digest";
        case Op::Sha3Digest512: return "r0 || r1 = sha3_512_digest";
    }
    return "?";
}

bool is_sampler(Op op) { return op >= Op::BinSample && op <= Op::TriSample3; }

unsigned extension_words(Op op) {
    if (is_sampler(op)) return 2;
    if (op == Op::Config || op == Op::InfNormCheck) return 1;
    return 0;
}

size_t Program::words() const {
    size_t w = 0;
    for (const auto& i : code) w += 1 + extension_words(i.op);
    return w;
}

// ---------------------------------------------------------------- assembler

namespace {

struct Line {
    std::string text;          // whitespace removed
    std::vector<size_t> cols;  // 1-based source column of each character in text
    size_t number = 0;
    size_t end_col = 1;

    size_t col(size_t pos) const { return pos < cols.size() ? cols[pos] : end_col; }
    [[noreturn]] void fail(size_t pos, const std::string& msg) const { throw AsmError(number, col(pos), msg); }
};

struct Arg {
    std::string key;  // empty for positional
    std::string value;
    size_t pos = 0;   // offset of value in Line::text
};

std::optional<uint64_t> parse_uint(const std::string& s) {
    if (s.empty()) return std::nullopt;
    size_t i = 0;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        i = 2;
    }
    uint64_t v = 0;
    for (; i < s.size(); ++i) {
        int d;
        char c = char(std::tolower(static_cast<unsigned char>(s[i])));
        if (c >= '0' && c <= '9') d = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else return std::nullopt;
        v = v * base + unsigned(d);
        if (v > 0xFFFFFFFFull) return std::nullopt;
    }
    return v;
}

std::string upper(std::string s) {
    for (auto& c : s) c = char(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

class Assembler {
public:
    Program run(const std::string& source);

private:
    struct Pending {
        size_t index;
        std::string label;
        Line line;
        size_t pos;
    };

    Instruction parse_statement(const Line& ln, size_t start);
    std::vector<Arg> split_args(const Line& ln, size_t begin, size_t end);
    std::map<std::string, Arg> bind(const Line& ln, size_t at, const std::vector<Arg>& args,
                                     const std::vector<std::string>& names);
    uint32_t number(const Line& ln, const Arg& a, uint64_t max, const std::string& what);
    uint8_t slot(const Line& ln, const Arg& a);
    void sampler_common(const Line& ln, const std::map<std::string, Arg>& b, Instruction& ins);

    std::vector<Pending> fixups_;
    size_t current_ = 0;
};

uint32_t Assembler::number(const Line& ln, const Arg& a, uint64_t max, const std::string& what) {
    auto v = parse_uint(a.value);
    if (!v) ln.fail(a.pos, "expected a number for " + what + ", got '" + a.value + "'");
    if (*v > max) ln.fail(a.pos, what + " " + a.value + " out of range (max " + std::to_string(max) + ")");
    return uint32_t(*v);
}

uint8_t Assembler::slot(const Line& ln, const Arg& a) { return uint8_t(number(ln, a, 127, "polynomial slot")); }

std::vector<Arg> Assembler::split_args(const Line& ln, size_t begin, size_t end) {
    std::vector<Arg> out;
    if (begin == end) return out;
    size_t start = begin;
    int depth = 0;
    for (size_t i = begin; i <= end; ++i) {
        char c = i < end ? ln.text[i] : ',';
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == ',' && depth == 0) {
            if (i == start) ln.fail(start, "empty argument");
            std::string item = ln.text.substr(start, i - start);
            Arg a;
            auto eq = item.find('=');
            if (eq != std::string::npos) {
                a.key = item.substr(0, eq);
                a.value = item.substr(eq + 1);
                a.pos = start + eq + 1;
                if (a.key.empty()) ln.fail(start, "missing argument name");
                if (a.value.empty()) ln.fail(start + eq, "missing value for '" + a.key + "'");
            } else {
                a.value = item;
                a.pos = start;
            }
            out.push_back(a);
            start = i + 1;
        }
    }
    return out;
}

std::map<std::string, Arg> Assembler::bind(const Line& ln, size_t at, const std::vector<Arg>& args,
                                           const std::vector<std::string>& names) {
    std::map<std::string, Arg> out;
    size_t next = 0;
    for (const auto& a : args) {
        std::string key = a.key;
        if (key.empty() || (std::find(names.begin(), names.end(), key) == names.end() && key == "poly" &&
                            names.size() == 2 && names[0] == "poly_a")) {
            while (next < names.size() && out.count(names[next])) ++next;
            if (next >= names.size()) ln.fail(a.pos, "too many arguments");
            key = names[next];
        } else if (std::find(names.begin(), names.end(), key) == names.end()) {
            ln.fail(a.pos - a.key.size() - 1, "unknown argument '" + key + "'");
        }
        if (out.count(key)) ln.fail(a.pos, "duplicate argument '" + key + "'");
        Arg b = a;
        b.key = key;
        out[key] = b;
    }
    for (const auto& n : names)
        if (!out.count(n)) ln.fail(at, "missing argument '" + n + "'");
    return out;
}

void Assembler::sampler_common(const Line& ln, const std::map<std::string, Arg>& b, Instruction& ins) {
    const Arg& prng = b.at("prng");
    std::string p = upper(prng.value);
    if (p == "SHAKE-128" || p == "SHAKE128") ins.prng = Prng::Shake128;
    else if (p == "SHAKE-256" || p == "SHAKE256") ins.prng = Prng::Shake256;
    else ln.fail(prng.pos, "prng must be SHAKE-128 or SHAKE-256");
    const Arg& seed = b.at("seed");
    if (seed.value == "r0") ins.seed = 0;
    else if (seed.value == "r1") ins.seed = 1;
    else ln.fail(seed.pos, "seed must be r0 or r1");
    const Arg& c0 = b.at("c0");
    if (c0.value == "c0") ins.c0_reg = true;
    else ins.c0 = uint16_t(number(ln, c0, 0xFFFF, "c0"));
    const Arg& c1 = b.at("c1");
    if (c1.value == "c1") ins.c1_reg = true;
    else ins.c1 = uint16_t(number(ln, c1, 0xFFFF, "c1"));
    ins.poly = slot(ln, b.at("poly"));
}

Instruction Assembler::parse_statement(const Line& ln, size_t start) {
    const std::string st = ln.text.substr(start);
    auto fail = [&](size_t off, const std::string& m) { ln.fail(start + off, m); };
    std::smatch m;
    Instruction ins;

    static const std::regex re_branch(R"(^if\(flag(==|!=)([+-]?\d+)\)goto([A-Za-z_]\w*)$)");
    static const std::regex re_counter(R"(^(c0|c1)=(c0|c1)?([+-])?(\w+)$)");
    static const std::regex re_reg_tmp(R"(^reg=tmp$)");
    static const std::regex re_tmp_op(R"(^tmp=tmp\(?(ADD|SUB|MUL|AND|OR|XOR|RSHIFT|LSHIFT|\+|-|\*|&|\||\^|>>|<<)\)?reg$)");
    static const std::regex re_scalar_set(R"(^(reg|tmp)=(\w+)$)");
    static const std::regex re_reduce(R"(^reg=(max_elems|sum_elems)\((.*)\)$)");
    static const std::regex re_get(R"(^reg=\((.*)\)\[(\w+)\]$)");
    static const std::regex re_put(R"(^\((.*)\)\[(\w+)\]=reg$)");
    static const std::regex re_flag(R"(^flag=(eq_check|inf_norm_check|compare)\((.*)\)$)");
    static const std::regex re_digest256(R"(^(r0|r1)=sha3_256_digest(\(\))?$)");
    static const std::regex re_digest512(R"(^r0\|\|r1=sha3_512_digest(\(\))?$)");
    static const std::regex re_call(R"(^([A-Za-z_]\w*)(\((.*)\))?$)");

    auto group_pos = [&](int g) { return size_t(m.position(g)); };

    if (std::regex_match(st, m, re_branch)) {
        ins.op = Op::Branch;
        ins.branch_ne = m[1] == "!=";
        std::string v = m[2];
        if (v == "-1") ins.branch_value = -1;
        else if (v == "0" || v == "+0" || v == "-0") ins.branch_value = 0;
        else if (v == "1" || v == "+1") ins.branch_value = 1;
        else fail(group_pos(2), "flag can only be compared with -1, 0 or +1");
        fixups_.push_back({current_, m[3], ln, start + group_pos(3)});
        return ins;
    }
    if (std::regex_match(st, m, re_counter)) {
        bool is_c1 = m[1] == "c1";
        Arg a{"", m[4], start + group_pos(4)};
        uint32_t v = number(ln, a, 0xFFFF, "counter value");
        ins.value = v;
        if (m[2].matched) {
            if (m[2] != m[1]) fail(group_pos(2), "counter arithmetic must use the same counter");
            if (!m[3].matched) fail(group_pos(2), "expected + or -");
            ins.op = m[3] == "+" ? (is_c1 ? Op::C1Add : Op::C0Add) : (is_c1 ? Op::C1Sub : Op::C0Sub);
        } else {
            if (m[3].matched) fail(group_pos(3), "unexpected sign");
            ins.op = is_c1 ? Op::C1Set : Op::C0Set;
        }
        return ins;
    }
    if (std::regex_match(st, m, re_reg_tmp)) {
        ins.op = Op::RegFromTmp;
        return ins;
    }
    if (std::regex_match(st, m, re_tmp_op)) {
        static const std::map<std::string, AluOp> sym = {
            {"+", AluOp::ADD}, {"-", AluOp::SUB}, {"*", AluOp::MUL}, {"&", AluOp::AND},
            {"|", AluOp::OR},  {"^", AluOp::XOR}, {">>", AluOp::RSHIFT}, {"<<", AluOp::LSHIFT}};
        ins.op = Op::TmpOp;
        std::string o = m[1];
        if (sym.count(o)) ins.alu = sym.at(o);
        else ins.alu = AluOp(std::find(kAluNames.begin(), kAluNames.end(), o) - kAluNames.begin());
        return ins;
    }
    if (std::regex_match(st, m, re_scalar_set)) {
        ins.op = m[1] == "reg" ? Op::RegSet : Op::TmpSet;
        ins.value = number(ln, Arg{"", m[2], start + group_pos(2)}, 0xFFFFFF, std::string(m[1]) + " value");
        return ins;
    }
    if (std::regex_match(st, m, re_reduce)) {
        ins.op = m[1] == "max_elems" ? Op::MaxElems : Op::SumElems;
        size_t b = start + group_pos(2);
        auto args = bind(ln, b, split_args(ln, b, b + m[2].length()), {"poly"});
        ins.poly = slot(ln, args.at("poly"));
        return ins;
    }
    auto element = [&](Op op, int inner, int idx) {
        ins.op = op;
        size_t b = start + group_pos(inner);
        auto args = bind(ln, b, split_args(ln, b, b + m[inner].length()), {"poly"});
        ins.poly = slot(ln, args.at("poly"));
        std::string i = m[idx];
        if (i == "c0") ins.index = IndexSource::C0;
        else if (i == "c1") ins.index = IndexSource::C1;
        else {
            ins.index = IndexSource::Imm;
            ins.value = number(ln, Arg{"", i, start + group_pos(idx)}, 2047, "element index");
        }
    };
    if (std::regex_match(st, m, re_get)) {
        element(Op::RegFromPoly, 1, 2);
        return ins;
    }
    if (std::regex_match(st, m, re_put)) {
        element(Op::PolyFromReg, 1, 2);
        return ins;
    }
    if (std::regex_match(st, m, re_flag)) {
        size_t b = start + group_pos(2);
        auto raw = split_args(ln, b, b + m[2].length());
        if (m[1] == "eq_check") {
            ins.op = Op::EqCheck;
            auto args = bind(ln, b, raw, {"poly_a", "poly_b"});
            ins.dst = slot(ln, args.at("poly_a"));
            ins.src = slot(ln, args.at("poly_b"));
        } else if (m[1] == "inf_norm_check") {
            ins.op = Op::InfNormCheck;
            auto args = bind(ln, b, raw, {"poly", "bound"});
            ins.poly = slot(ln, args.at("poly"));
            ins.value = number(ln, args.at("bound"), 0xFFFFFF, "bound");
        } else {
            ins.op = Op::Compare;
            auto args = bind(ln, b, raw, {"operand", "value"});
            const Arg& r = args.at("operand");
            static const std::map<std::string, ScalarReg> regs = {
                {"reg", ScalarReg::Reg}, {"tmp", ScalarReg::Tmp}, {"c0", ScalarReg::C0}, {"c1", ScalarReg::C1}};
            if (!regs.count(r.value)) ln.fail(r.pos, "compare operand must be reg, tmp, c0 or c1");
            ins.scalar = regs.at(r.value);
            ins.value = number(ln, args.at("value"), 0xFFFFFF, "compare value");
        }
        return ins;
    }
    if (std::regex_match(st, m, re_digest256)) {
        ins.op = Op::Sha3Digest256;
        ins.seed = m[1] == "r1";
        return ins;
    }
    if (std::regex_match(st, m, re_digest512)) {
        ins.op = Op::Sha3Digest512;
        return ins;
    }
    if (!std::regex_match(st, m, re_call)) fail(0, "unrecognised statement");

    const std::string name = m[1];
    size_t b = m[3].matched ? start + group_pos(3) : ln.text.size();
    std::vector<Arg> raw = m[3].matched ? split_args(ln, b, b + m[3].length()) : std::vector<Arg>{};
    auto args = [&](const std::vector<std::string>& names) { return bind(ln, b, raw, names); };
    static const std::vector<std::string> sampler_head = {"prng", "seed", "c0", "c1"};
    auto sampler_args = [&](std::vector<std::string> extra) {
        std::vector<std::string> all = sampler_head;
        all.insert(all.end(), extra.begin(), extra.end());
        all.push_back("poly");
        auto a = args(all);
        sampler_common(ln, a, ins);
        return a;
    };

    if (name == "config") {
        ins.op = Op::Config;
        auto a = args({"n", "q"});
        uint32_t n = number(ln, a.at("n"), 2048, "n");
        if (!std::has_single_bit(n) || n < 8) ln.fail(a.at("n").pos, "n must be a power of two in [8, 2048]");
        ins.n = n;
        ins.q = number(ln, a.at("q"), 0xFFFFFF, "q");
        if (ins.q < 2) ln.fail(a.at("q").pos, "q must be at least 2");
    } else if (name == "clock_config") {
        ins.op = Op::ClockConfig;
        auto a = args({"keccak", "ntt", "sampler"});
        auto gate = [&](const Arg& g) {
            std::string v = upper(g.value);
            if (v == "GATE") return true;
            if (v == "UNGATE") return false;
            ln.fail(g.pos, "expected GATE or UNGATE");
        };
        ins.gate_keccak = gate(a.at("keccak"));
        ins.gate_ntt = gate(a.at("ntt"));
        ins.gate_sampler = gate(a.at("sampler"));
    } else if (name == "transform") {
        ins.op = Op::Transform;
        auto a = args({"mode", "poly_dst", "poly_src"});
        const Arg& md = a.at("mode");
        auto it = std::find(kModeNames.begin(), kModeNames.end(), upper(md.value));
        if (it == kModeNames.end()) ln.fail(md.pos, "unknown transform mode '" + md.value + "'");
        ins.mode = NttMode(it - kModeNames.begin());
        ins.dst = slot(ln, a.at("poly_dst"));
        ins.src = slot(ln, a.at("poly_src"));
    } else if (name == "mult_psi" || name == "mult_psi_inv" || name == "init") {
        ins.op = name == "init" ? Op::Init : name == "mult_psi" ? Op::MultPsi : Op::MultPsiInv;
        ins.poly = slot(ln, args({"poly"}).at("poly"));
    } else if (name == "bin_sample") {
        ins.op = Op::BinSample;
        auto a = sampler_args({"k"});
        ins.k = number(ln, a.at("k"), 32, "k");
        if (ins.k == 0) ln.fail(a.at("k").pos, "k must be at least 1");
    } else if (name == "cdt_sample") {
        ins.op = Op::CdtSample;
        auto a = sampler_args({"r", "s"});
        ins.r = number(ln, a.at("r"), 32, "r");
        ins.s = number(ln, a.at("s"), 64, "s");
        if (ins.r == 0) ln.fail(a.at("r").pos, "r must be at least 1");
        if (ins.s == 0) ln.fail(a.at("s").pos, "s must be at least 1");
    } else if (name == "rej_sample") {
        ins.op = Op::RejSample;
        sampler_args({});
    } else if (name == "uni_sample") {
        ins.op = Op::UniSample;
        auto a = sampler_args({"eta", "bitlen"});
        ins.eta = number(ln, a.at("eta"), 0xFFFFFF, "eta");
        ins.bitlen = number(ln, a.at("bitlen"), 31, "bitlen");
        if (ins.bitlen == 0) ln.fail(a.at("bitlen").pos, "bitlen must be at least 1");
    } else if (name == "tri_sample_1") {
        ins.op = Op::TriSample1;
        auto a = sampler_args({"m"});
        ins.m = number(ln, a.at("m"), 2047, "m");
    } else if (name == "tri_sample_2") {
        ins.op = Op::TriSample2;
        auto a = sampler_args({"m0", "m1"});
        ins.m0 = number(ln, a.at("m0"), 2047, "m0");
        ins.m1 = number(ln, a.at("m1"), 2047, "m1");
    } else if (name == "tri_sample_3") {
        ins.op = Op::TriSample3;
        auto a = sampler_args({"rho"});
        const Arg& rho = a.at("rho");
        static const std::regex re_pow(R"(^1/2\^(\d+)$)");
        static const std::regex re_frac(R"(^1/(\d+)$)");
        std::smatch rm;
        if (std::regex_match(rho.value, rm, re_pow)) {
            ins.k = number(ln, Arg{"", rm[1], rho.pos + 4}, 31, "rho exponent");
        } else if (std::regex_match(rho.value, rm, re_frac)) {
            uint32_t d = number(ln, Arg{"", rm[1], rho.pos + 2}, 0x80000000u, "rho denominator");
            if (!std::has_single_bit(d)) ln.fail(rho.pos, "rho must be 1/2^k");
            ins.k = unsigned(std::countr_zero(d));
        } else {
            ins.k = number(ln, rho, 31, "rho exponent");
        }
        if (ins.k == 0) ln.fail(rho.pos, "rho exponent must be at least 1");
    } else if (name == "poly_copy") {
        ins.op = Op::PolyCopy;
        auto a = args({"poly_dst", "poly_src"});
        ins.dst = slot(ln, a.at("poly_dst"));
        ins.src = slot(ln, a.at("poly_src"));
    } else if (name == "poly_op") {
        ins.op = Op::PolyOp;
        auto a = args({"op", "poly_dst", "poly_src"});
        const Arg& o = a.at("op");
        auto it = std::find(kPolyOpNames.begin(), kPolyOpNames.end(), upper(o.value));
        if (it == kPolyOpNames.end()) ln.fail(o.pos, "unknown poly_op '" + o.value + "'");
        ins.pop = PolyOpKind(it - kPolyOpNames.begin());
        ins.dst = slot(ln, a.at("poly_dst"));
        ins.src = slot(ln, a.at("poly_src"));
    } else if (name == "shift_poly") {
        ins.op = Op::ShiftPoly;
        auto a = args({"ring", "poly_dst", "poly_src"});
        const Arg& r = a.at("ring");
        std::string v = upper(r.value);
        if (v == "X^N+1") ins.ring = Ring::Negacyclic;
        else if (v == "X^N-1") ins.ring = Ring::Cyclic;
        else ln.fail(r.pos, "ring must be x^N+1 or x^N-1");
        ins.dst = slot(ln, a.at("poly_dst"));
        ins.src = slot(ln, a.at("poly_src"));
    } else if (name == "sha3_init") {
        ins.op = Op::Sha3Init;
        args({});
    } else if (name == "sha3_256_absorb" || name == "sha3_512_absorb") {
        bool wide = name == "sha3_512_absorb";
        if (raw.size() != 1) ln.fail(b, "expected one operand");
        const Arg& a = raw[0];
        if ((a.key.empty() || a.key == "seed") && (a.value == "r0" || a.value == "r1")) {
            ins.op = wide ? Op::Sha3Absorb512Seed : Op::Sha3Absorb256Seed;
            ins.seed = a.value == "r1";
        } else if (a.key.empty() || a.key == "poly") {
            ins.op = wide ? Op::Sha3Absorb512Poly : Op::Sha3Absorb256Poly;
            ins.poly = slot(ln, a);
        } else {
            ln.fail(a.pos, "expected poly or r0 / r1");
        }
    } else {
        fail(0, "unknown instruction '" + name + "'");
    }
    return ins;
}

Program Assembler::run(const std::string& source) {
    Program prog;
    std::vector<std::string> pending_labels;
    std::vector<std::pair<std::string, Line>> label_lines;
    std::istringstream in(source);
    std::string raw;
    size_t lineno = 0;
    static const std::regex re_label(R"(^([A-Za-z_]\w*):)");
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        Line ln;
        ln.number = lineno;
        for (size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '#') break;
            if (!std::isspace(static_cast<unsigned char>(raw[i]))) {
                ln.text.push_back(raw[i]);
                ln.cols.push_back(i + 1);
            }
        }
        ln.end_col = raw.size() + 1;
        if (ln.text.empty()) continue;
        size_t start = 0;
        std::smatch m;
        if (std::regex_search(ln.text, m, re_label)) {
            std::string name = m[1];
            if (prog.labels.count(name) ||
                std::find(pending_labels.begin(), pending_labels.end(), name) != pending_labels.end())
                ln.fail(0, "duplicate label '" + name + "'");
            pending_labels.push_back(name);
            start = size_t(m.length(0));
        }
        if (start == ln.text.size()) continue;
        current_ = prog.code.size();
        Instruction ins = parse_statement(ln, start);
        for (auto& l : pending_labels) prog.labels[l] = prog.code.size();
        pending_labels.clear();
        prog.code.push_back(ins);
        prog.spans.push_back({ln.number, ln.col(start)});
    }
    for (auto& l : pending_labels) prog.labels[l] = prog.code.size();
    for (const auto& f : fixups_) {
        auto it = prog.labels.find(f.label);
        if (it == prog.labels.end()) f.line.fail(f.pos, "undefined label '" + f.label + "'");
        prog.code[f.index].target = uint16_t(it->second);
    }
    size_t words = prog.words();
    if (words > kInstructionMemoryWords)
        throw AsmError(lineno, 1, "program needs " + std::to_string(words) + " words; instruction memory holds " +
                                      std::to_string(kInstructionMemoryWords));
    return prog;
}

}  // namespace

Program assemble(const std::string& source) { return Assembler().run(source); }

// ---------------------------------------------------------------- binary encoding

namespace {

struct Fields {
    uint32_t word = 0;
    uint32_t used = 0;
    void put(uint32_t v, unsigned lo, unsigned width) {
        uint32_t mask = width == 32 ? 0xFFFFFFFFu : ((1u << width) - 1);
        if (v & ~mask) throw ContractViolation("field value " + std::to_string(v) + " does not fit");
        word |= v << lo;
        used |= mask << lo;
    }
    uint32_t get(unsigned lo, unsigned width) {
        uint32_t mask = width == 32 ? 0xFFFFFFFFu : ((1u << width) - 1);
        used |= mask << lo;
        return (word >> lo) & mask;
    }
};

constexpr unsigned kPayloadBits = 26;

void encode_sampler_ext(const Instruction& i, Fields& e1, Fields& e2) {
    e1.put(i.c0_reg ? 0 : i.c0, 0, 16);
    e1.put(i.c1_reg ? 0 : i.c1, 16, 16);
    switch (i.op) {
        case Op::BinSample: e2.put(i.k, 0, 6); break;
        case Op::CdtSample:
            e2.put(i.r, 0, 6);
            e2.put(i.s, 6, 7);
            break;
        case Op::RejSample: break;
        case Op::UniSample:
            e2.put(i.eta, 0, 24);
            e2.put(i.bitlen, 24, 5);
            break;
        case Op::TriSample1: e2.put(i.m, 0, 11); break;
        case Op::TriSample2:
            e2.put(i.m0, 0, 11);
            e2.put(i.m1, 11, 11);
            break;
        case Op::TriSample3: e2.put(i.k, 0, 5); break;
        default: break;
    }
}

}  // namespace

std::vector<uint32_t> encode(const Program& p) {
    // word address of each instruction, for branch targets
    std::vector<size_t> addr(p.code.size() + 1, 0);
    for (size_t i = 0; i < p.code.size(); ++i) addr[i + 1] = addr[i] + 1 + extension_words(p.code[i].op);
    if (addr.back() > kInstructionMemoryWords) throw ContractViolation("program exceeds instruction memory");

    std::vector<uint32_t> out;
    for (const auto& i : p.code) {
        Fields f, e1, e2;
        switch (i.op) {
            case Op::Config:
                f.put(unsigned(std::countr_zero(i.n)), 0, 4);
                e1.put(i.q, 0, 24);
                break;
            case Op::ClockConfig:
                f.put(i.gate_keccak, 0, 1);
                f.put(i.gate_ntt, 1, 1);
                f.put(i.gate_sampler, 2, 1);
                break;
            case Op::C0Set: case Op::C0Add: case Op::C0Sub:
            case Op::C1Set: case Op::C1Add: case Op::C1Sub: f.put(i.value, 0, 16); break;
            case Op::RegSet: case Op::TmpSet: f.put(i.value, 0, 24); break;
            case Op::RegFromTmp: case Op::Sha3Init: case Op::Sha3Digest512: break;
            case Op::TmpOp: f.put(uint32_t(i.alu), 0, 3); break;
            case Op::MaxElems: case Op::SumElems: case Op::MultPsi: case Op::MultPsiInv: case Op::Init:
            case Op::Sha3Absorb256Poly: case Op::Sha3Absorb512Poly: f.put(i.poly, 0, 7); break;
            case Op::RegFromPoly: case Op::PolyFromReg:
                f.put(i.poly, 0, 7);
                f.put(uint32_t(i.index), 7, 2);
                f.put(i.index == IndexSource::Imm ? i.value : 0, 9, 11);
                break;
            case Op::Transform:
                f.put(uint32_t(i.mode), 0, 2);
                f.put(i.dst, 2, 7);
                f.put(i.src, 9, 7);
                break;
            case Op::BinSample: case Op::CdtSample: case Op::RejSample: case Op::UniSample:
            case Op::TriSample1: case Op::TriSample2: case Op::TriSample3:
                f.put(uint32_t(i.prng), 0, 1);
                f.put(i.seed, 1, 1);
                f.put(i.c0_reg, 2, 1);
                f.put(i.c1_reg, 3, 1);
                f.put(i.poly, 4, 7);
                encode_sampler_ext(i, e1, e2);
                break;
            case Op::PolyCopy: case Op::EqCheck:
                f.put(i.dst, 0, 7);
                f.put(i.src, 7, 7);
                break;
            case Op::PolyOp:
                f.put(uint32_t(i.pop), 0, 4);
                f.put(i.dst, 4, 7);
                f.put(i.src, 11, 7);
                break;
            case Op::ShiftPoly:
                f.put(uint32_t(i.ring), 0, 1);
                f.put(i.dst, 1, 7);
                f.put(i.src, 8, 7);
                break;
            case Op::InfNormCheck:
                f.put(i.poly, 0, 7);
                e1.put(i.value, 0, 24);
                break;
            case Op::Compare:
                f.put(uint32_t(i.scalar), 0, 2);
                f.put(i.value, 2, 24);
                break;
            case Op::Branch:
                if (i.target > p.code.size()) throw ContractViolation("branch target out of range");
                f.put(i.branch_ne, 0, 1);
                f.put(uint32_t(i.branch_value + 1), 1, 2);
                f.put(uint32_t(addr[i.target]), 3, 8);
                break;
            case Op::Sha3Absorb256Seed: case Op::Sha3Absorb512Seed: case Op::Sha3Digest256: f.put(i.seed, 0, 1); break;
        }
        out.push_back(uint32_t(i.op) << kPayloadBits | f.word);
        unsigned ext = extension_words(i.op);
        if (ext >= 1) out.push_back(e1.word);
        if (ext >= 2) out.push_back(e2.word);
    }
    return out;
}

Program decode(const std::vector<uint32_t>& words) {
    if (words.size() > kInstructionMemoryWords) throw DecodeError(kInstructionMemoryWords, "program exceeds instruction memory");
    Program p;
    std::vector<size_t> starts;
    std::vector<std::pair<size_t, size_t>> branch_words;  // (instruction, word address)
    size_t w = 0;
    while (w < words.size()) {
        const size_t at = w;
        uint32_t opc = words[w] >> kPayloadBits;
        if (opc == 0 || opc > kOpCount) throw DecodeError(at, "undefined opcode " + std::to_string(opc));
        Instruction i;
        i.op = Op(opc);
        unsigned ext = extension_words(i.op);
        if (w + ext >= words.size()) throw DecodeError(at, "truncated instruction");
        Fields f{words[w] & ((1u << kPayloadBits) - 1), 0}, e1{ext >= 1 ? words[w + 1] : 0, 0},
            e2{ext >= 2 ? words[w + 2] : 0, 0};
        auto bad = [&](const std::string& m) { throw DecodeError(at, m); };
        switch (i.op) {
            case Op::Config: {
                unsigned lg = f.get(0, 4);
                if (lg < 3 || lg > 11) bad("config lg n out of range");
                i.n = 1u << lg;
                i.q = e1.get(0, 24);
                if (i.q < 2) bad("config q out of range");
                break;
            }
            case Op::ClockConfig:
                i.gate_keccak = f.get(0, 1);
                i.gate_ntt = f.get(1, 1);
                i.gate_sampler = f.get(2, 1);
                break;
            case Op::C0Set: case Op::C0Add: case Op::C0Sub:
            case Op::C1Set: case Op::C1Add: case Op::C1Sub: i.value = f.get(0, 16); break;
            case Op::RegSet: case Op::TmpSet: i.value = f.get(0, 24); break;
            case Op::RegFromTmp: case Op::Sha3Init: case Op::Sha3Digest512: break;
            case Op::TmpOp: i.alu = AluOp(f.get(0, 3)); break;
            case Op::MaxElems: case Op::SumElems: case Op::MultPsi: case Op::MultPsiInv: case Op::Init:
            case Op::Sha3Absorb256Poly: case Op::Sha3Absorb512Poly: i.poly = uint8_t(f.get(0, 7)); break;
            case Op::RegFromPoly: case Op::PolyFromReg: {
                i.poly = uint8_t(f.get(0, 7));
                uint32_t src = f.get(7, 2);
                if (src > 2) bad("bad index source");
                i.index = IndexSource(src);
                if (i.index == IndexSource::Imm) i.value = f.get(9, 11);
                break;
            }
            case Op::Transform:
                i.mode = NttMode(f.get(0, 2));
                i.dst = uint8_t(f.get(2, 7));
                i.src = uint8_t(f.get(9, 7));
                break;
            case Op::BinSample: case Op::CdtSample: case Op::RejSample: case Op::UniSample:
            case Op::TriSample1: case Op::TriSample2: case Op::TriSample3: {
                i.prng = Prng(f.get(0, 1));
                i.seed = uint8_t(f.get(1, 1));
                i.c0_reg = f.get(2, 1);
                i.c1_reg = f.get(3, 1);
                i.poly = uint8_t(f.get(4, 7));
                if (!i.c0_reg) i.c0 = uint16_t(e1.get(0, 16));
                if (!i.c1_reg) i.c1 = uint16_t(e1.get(16, 16));
                switch (i.op) {
                    case Op::BinSample:
                        i.k = e2.get(0, 6);
                        if (i.k == 0 || i.k > 32) bad("bin k out of range");
                        break;
                    case Op::CdtSample:
                        i.r = e2.get(0, 6);
                        i.s = e2.get(6, 7);
                        if (i.r == 0 || i.r > 32 || i.s == 0 || i.s > 64) bad("cdt parameters out of range");
                        break;
                    case Op::UniSample:
                        i.eta = e2.get(0, 24);
                        i.bitlen = e2.get(24, 5);
                        if (i.bitlen == 0) bad("bitlen out of range");
                        break;
                    case Op::TriSample1: i.m = e2.get(0, 11); break;
                    case Op::TriSample2:
                        i.m0 = e2.get(0, 11);
                        i.m1 = e2.get(11, 11);
                        break;
                    case Op::TriSample3:
                        i.k = e2.get(0, 5);
                        if (i.k == 0) bad("rho exponent out of range");
                        break;
                    default: break;
                }
                break;
            }
            case Op::PolyCopy: case Op::EqCheck:
                i.dst = uint8_t(f.get(0, 7));
                i.src = uint8_t(f.get(7, 7));
                break;
            case Op::PolyOp: {
                uint32_t k = f.get(0, 4);
                if (k >= kPolyOpNames.size()) bad("undefined poly_op");
                i.pop = PolyOpKind(k);
                i.dst = uint8_t(f.get(4, 7));
                i.src = uint8_t(f.get(11, 7));
                break;
            }
            case Op::ShiftPoly:
                i.ring = Ring(f.get(0, 1));
                i.dst = uint8_t(f.get(1, 7));
                i.src = uint8_t(f.get(8, 7));
                break;
            case Op::InfNormCheck:
                i.poly = uint8_t(f.get(0, 7));
                i.value = e1.get(0, 24);
                break;
            case Op::Compare:
                i.scalar = ScalarReg(f.get(0, 2));
                i.value = f.get(2, 24);
                break;
            case Op::Branch: {
                i.branch_ne = f.get(0, 1);
                uint32_t v = f.get(1, 2);
                if (v > 2) bad("undefined flag value");
                i.branch_value = int8_t(int(v) - 1);
                branch_words.push_back({p.code.size(), f.get(3, 8)});
                break;
            }
            case Op::Sha3Absorb256Seed: case Op::Sha3Absorb512Seed: case Op::Sha3Digest256:
                i.seed = uint8_t(f.get(0, 1));
                break;
        }
        if (f.word & ~f.used) bad("reserved bits set");
        if (ext >= 1 && (e1.word & ~e1.used)) throw DecodeError(at + 1, "reserved bits set");
        if (ext >= 2 && (e2.word & ~e2.used)) throw DecodeError(at + 2, "reserved bits set");
        starts.push_back(at);
        p.code.push_back(i);
        w += 1 + ext;
    }
    starts.push_back(w);
    for (auto [idx, target] : branch_words) {
        auto it = std::lower_bound(starts.begin(), starts.end(), target);
        if (it == starts.end() || *it != target) {
            size_t word_at = 0;
            for (size_t i = 0, a = 0; i < p.code.size(); a += 1 + extension_words(p.code[i].op), ++i)
                if (i == idx) word_at = a;
            throw DecodeError(word_at, "branch target is not an instruction boundary");
        }
        p.code[idx].target = uint16_t(it - starts.begin());
    }
    return p;
}

// ---------------------------------------------------------------- disassembler

std::string disassemble(const Instruction& i, const std::map<size_t, std::string>& names) {
    std::ostringstream os;
    auto prng = [&] { return i.prng == Prng::Shake128 ? "SHAKE-128" : "SHAKE-256"; };
    auto head = [&] {
        os << mnemonic(i.op) << " (prng = " << prng() << ", seed = r" << unsigned(i.seed) << ", c0 = ";
        if (i.c0_reg) os << "c0";
        else os << i.c0;
        os << ", c1 = ";
        if (i.c1_reg) os << "c1";
        else os << i.c1;
    };
    auto index = [&] {
        switch (i.index) {
            case IndexSource::Imm: return std::to_string(i.value);
            case IndexSource::C0: return std::string("c0");
            case IndexSource::C1: return std::string("c1");
        }
        return std::string();
    };
    switch (i.op) {
        case Op::Config: os << "config (n = " << i.n << ", q = " << i.q << ")"; break;
        case Op::ClockConfig:
            os << "clock_config (keccak = " << (i.gate_keccak ? "GATE" : "UNGATE")
               << ", ntt = " << (i.gate_ntt ? "GATE" : "UNGATE") << ", sampler = " << (i.gate_sampler ? "GATE" : "UNGATE")
               << ")";
            break;
        case Op::C0Set: os << "c0 = " << i.value; break;
        case Op::C0Add: os << "c0 = c0 + " << i.value; break;
        case Op::C0Sub: os << "c0 = c0 - " << i.value; break;
        case Op::C1Set: os << "c1 = " << i.value; break;
        case Op::C1Add: os << "c1 = c1 + " << i.value; break;
        case Op::C1Sub: os << "c1 = c1 - " << i.value; break;
        case Op::RegSet: os << "reg = " << i.value; break;
        case Op::RegFromTmp: os << "reg = tmp"; break;
        case Op::TmpSet: os << "tmp = " << i.value; break;
        case Op::TmpOp: os << "tmp = tmp " << to_string(i.alu) << " reg"; break;
        case Op::MaxElems: os << "reg = max_elems (poly = " << unsigned(i.poly) << ")"; break;
        case Op::SumElems: os << "reg = sum_elems (poly = " << unsigned(i.poly) << ")"; break;
        case Op::RegFromPoly: os << "reg = (poly = " << unsigned(i.poly) << ")[" << index() << "]"; break;
        case Op::PolyFromReg: os << "(poly = " << unsigned(i.poly) << ")[" << index() << "] = reg"; break;
        case Op::Transform:
            os << "transform (mode = " << kModeNames[size_t(i.mode)] << ", poly_dst = " << unsigned(i.dst)
               << ", poly_src = " << unsigned(i.src) << ")";
            break;
        case Op::MultPsi: os << "mult_psi (poly = " << unsigned(i.poly) << ")"; break;
        case Op::MultPsiInv: os << "mult_psi_inv (poly = " << unsigned(i.poly) << ")"; break;
        case Op::BinSample: head(); os << ", k = " << i.k; break;
        case Op::CdtSample: head(); os << ", r = " << i.r << ", s = " << i.s; break;
        case Op::RejSample: head(); break;
        case Op::UniSample: head(); os << ", eta = " << i.eta << ", bitlen = " << i.bitlen; break;
        case Op::TriSample1: head(); os << ", m = " << i.m; break;
        case Op::TriSample2: head(); os << ", m0 = " << i.m0 << ", m1 = " << i.m1; break;
        case Op::TriSample3: head(); os << ", rho = 1/2^" << i.k; break;
        case Op::Init: os << "init (poly = " << unsigned(i.poly) << ")"; break;
        case Op::PolyCopy: os << "poly_copy (poly_dst = " << unsigned(i.dst) << ", poly_src = " << unsigned(i.src) << ")"; break;
        case Op::PolyOp:
            os << "poly_op (op = " << to_string(i.pop) << ", poly_dst = " << unsigned(i.dst)
               << ", poly_src = " << unsigned(i.src) << ")";
            break;
        case Op::ShiftPoly:
            os << "shift_poly (ring = " << (i.ring == Ring::Negacyclic ? "x^N+1" : "x^N-1")
               << ", poly_dst = " << unsigned(i.dst) << ", poly_src = " << unsigned(i.src) << ")";
            break;
        case Op::EqCheck: os << "flag = eq_check (" << unsigned(i.dst) << ", " << unsigned(i.src) << ")"; break;
        case Op::InfNormCheck:
            os << "flag = inf_norm_check (poly = " << unsigned(i.poly) << ", bound = " << i.value << ")";
            break;
        case Op::Compare: {
            static const char* regs[] = {"reg", "tmp", "c0", "c1"};
            os << "flag = compare (" << regs[size_t(i.scalar)] << ", " << i.value << ")";
            break;
        }
        case Op::Branch: {
            auto it = names.find(i.target);
            std::string label = it != names.end() ? it->second : "L" + std::to_string(i.target);
            os << "if (flag " << (i.branch_ne ? "!=" : "==") << " "
               << (i.branch_value < 0 ? "-1" : i.branch_value > 0 ? "+1" : "0") << ") goto " << label;
            break;
        }
        case Op::Sha3Init: os << "sha3_init"; break;
        case Op::Sha3Absorb256Poly: os << "sha3_256_absorb (poly = " << unsigned(i.poly) << ")"; break;
        case Op::Sha3Absorb512Poly: os << "sha3_512_absorb (poly = " << unsigned(i.poly) << ")"; break;
        case Op::Sha3Absorb256Seed: os << "sha3_256_absorb (r" << unsigned(i.seed) << ")"; break;
        case Op::Sha3Absorb512Seed: os << "sha3_512_absorb (r" << unsigned(i.seed) << ")"; break;
        case Op::Sha3Digest256: os << "r" << unsigned(i.seed) << " = sha3_256_digest"; break;
        case Op::Sha3Digest512: os << "r0 || r1 = sha3_512_digest"; break;
    }
    if (is_sampler(i.op)) os << ", poly = " << unsigned(i.poly) << ")";
    return os.str();
}

std::string disassemble(const Program& p) {
    std::map<size_t, std::string> names;
    for (const auto& [name, idx] : p.labels) names.emplace(idx, name);
    for (const auto& i : p.code)
        if (i.op == Op::Branch && !names.count(i.target)) names[i.target] = "L" + std::to_string(i.target);
    std::ostringstream os;
    for (size_t k = 0; k <= p.code.size(); ++k) {
        auto it = names.find(k);
        if (it != names.end()) os << it->second << ":\n";
        if (k < p.code.size()) os << "    " << disassemble(p.code[k], names) << '\n';
    }
    return os.str();
}

std::vector<uint8_t> to_binary(const std::vector<uint32_t>& words) {
    std::vector<uint8_t> out = {'S', 'P', 'H', '1'};
    auto put = [&](uint32_t v) {
        for (int b = 0; b < 4; ++b) out.push_back(uint8_t(v >> (8 * b)));
    };
    put(uint32_t(words.size()));
    for (auto w : words) put(w);
    return out;
}

std::vector<uint32_t> from_binary(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 || bytes[0] != 'S' || bytes[1] != 'P' || bytes[2] != 'H' || bytes[3] != '1')
        throw DecodeError(0, "missing SPH1 header");
    auto get = [&](size_t off) {
        return uint32_t(bytes[off]) | uint32_t(bytes[off + 1]) << 8 | uint32_t(bytes[off + 2]) << 16 |
               uint32_t(bytes[off + 3]) << 24;
    };
    uint32_t count = get(4);
    if (bytes.size() != 8 + 4 * size_t(count)) throw DecodeError(0, "binary length does not match word count");
    std::vector<uint32_t> words(count);
    for (uint32_t i = 0; i < count; ++i) words[i] = get(8 + 4 * i);
    return words;
}

}  // namespace sapphire
