#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sapphire/nttcore.hpp"
#include "sapphire/sampler.hpp"

namespace sapphire {

enum class Op : uint8_t {
    Config = 1,
    ClockConfig,
    C0Set,
    C0Add,
    C0Sub,
    C1Set,
    C1Add,
    C1Sub,
    RegSet,
    RegFromTmp,
    TmpSet,
    TmpOp,
    MaxElems,
    SumElems,
    RegFromPoly,
    PolyFromReg,
    Transform,
    MultPsi,
    MultPsiInv,
    BinSample,
    CdtSample,
    RejSample,
    UniSample,
    TriSample1,
    TriSample2,
    TriSample3,
    Init,
    PolyCopy,
    PolyOp,
    ShiftPoly,
    EqCheck,
    InfNormCheck,
    Compare,
    Branch,
    Sha3Init,
    Sha3Absorb256Poly,
    Sha3Absorb512Poly,
    Sha3Absorb256Seed,
    Sha3Absorb512Seed,
    Sha3Digest256,
    Sha3Digest512,
};
constexpr unsigned kOpCount = unsigned(Op::Sha3Digest512);

enum class AluOp : uint8_t { ADD, SUB, MUL, AND, OR, XOR, RSHIFT, LSHIFT };
enum class PolyOpKind : uint8_t {
    ADD,
    SUB,
    MUL,
    BITREV,
    CONST_ADD,
    CONST_SUB,
    CONST_MUL,
    CONST_AND,
    CONST_OR,
    CONST_XOR,
    CONST_RSHIFT,
    CONST_LSHIFT,
};
enum class IndexSource : uint8_t { Imm, C0, C1 };
enum class ScalarReg : uint8_t { Reg, Tmp, C0, C1 };
enum class Ring : uint8_t { Negacyclic, Cyclic };  // x^N+1, x^N-1

std::string to_string(AluOp o);
std::string to_string(PolyOpKind o);

// One decoded instruction. Only the fields used by `op` are meaningful; the rest stay zero.
struct Instruction {
    Op op = Op::Sha3Init;

    unsigned n = 0;    // config
    uint32_t q = 0;    // config
    bool gate_keccak = false, gate_ntt = false, gate_sampler = false;  // clock_config: true = GATE

    uint32_t value = 0;  // immediates, element index, compare operand, inf-norm bound
    AluOp alu = AluOp::ADD;
    IndexSource index = IndexSource::Imm;
    ScalarReg scalar = ScalarReg::Reg;

    uint8_t poly = 0, dst = 0, src = 0;
    NttMode mode = NttMode::DIF_NTT;
    PolyOpKind pop = PolyOpKind::ADD;
    Ring ring = Ring::Negacyclic;

    // samplers
    Prng prng = Prng::Shake128;
    uint8_t seed = 0;  // r0 / r1; also the seed register of sha3 absorb/digest
    bool c0_reg = false, c1_reg = false;
    uint16_t c0 = 0, c1 = 0;
    uint32_t k = 0;       // bin k, tri_sample_3 k (rho = 2^-k)
    uint32_t r = 0, s = 0;  // cdt
    uint32_t eta = 0, bitlen = 0;
    uint32_t m = 0, m0 = 0, m1 = 0;

    // branch
    bool branch_ne = false;
    int8_t branch_value = 0;
    uint16_t target = 0;  // instruction index

    bool operator==(const Instruction&) const = default;
};

std::string mnemonic(Op op);
// Extension words following the base word.
unsigned extension_words(Op op);
bool is_sampler(Op op);

struct SourceSpan {
    size_t line = 0, col = 0;
};

struct Program {
    std::vector<Instruction> code;
    std::map<std::string, size_t> labels;  // label -> instruction index
    std::vector<SourceSpan> spans;         // parallel to code when assembled from text

    size_t words() const;
    bool operator==(const Program& o) const { return code == o.code; }
};

constexpr size_t kInstructionMemoryWords = 256;

Program assemble(const std::string& source);
std::vector<uint32_t> encode(const Program& p);
Program decode(const std::vector<uint32_t>& words);
std::string disassemble(const Program& p);
std::string disassemble(const Instruction& ins, const std::map<size_t, std::string>& target_names = {});

// "SPH1", u32 count, count words (all little-endian).
std::vector<uint8_t> to_binary(const std::vector<uint32_t>& words);
std::vector<uint32_t> from_binary(const std::vector<uint8_t>& bytes);

}  // namespace sapphire
