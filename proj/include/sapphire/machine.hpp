#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sapphire/isa.hpp"
#include "sapphire/keccak.hpp"
#include "sapphire/nttcore.hpp"
#include "sapphire/polycache.hpp"
#include "sapphire/sampler.hpp"

namespace sapphire {

// Cycle buckets. ntt and psi follow the ntt clock gate, keccak and sampler their own gates;
// alu (poly_op, register and reduction ops) and control (config, compare, branch) are never gated.
enum class Unit { Ntt, Psi, Alu, Keccak, Sampler, Control };
constexpr size_t kUnitCount = 6;
std::string to_string(Unit u);

struct GateConfig {
    bool keccak = false, ntt = false, sampler = false;  // true = gated
    bool operator==(const GateConfig&) const = default;
};

struct OpStats {
    uint64_t count = 0;
    uint64_t cycles = 0;
    bool operator==(const OpStats&) const = default;
};

struct CycleReport {
    uint64_t total = 0;
    uint64_t instructions = 0;
    std::array<uint64_t, kUnitCount> per_unit{};
    std::map<Op, OpStats> per_instruction;
    uint64_t hazards = 0;
    bool halted = false;

    uint64_t unit(Unit u) const { return per_unit[size_t(u)]; }
    bool operator==(const CycleReport&) const = default;
};

enum class ReportFormat { Text, KeyValue };
std::string format_report(const CycleReport& r, ReportFormat f);

struct MachineState {
    PolynomialCache cache;
    std::optional<LatticeConfig> config;
    std::optional<NttConstants> consts;  // present when q supports the transform at this n
    Seed r0{}, r1{};
    uint16_t c0 = 0, c1 = 0;
    uint32_t reg = 0, tmp = 0;  // 24-bit
    int8_t flag = 0;
    CdtTable cdt_ram;  // up to 64 x 32-bit entries
    size_t pc = 0;
    uint64_t cycles = 0;
    GateConfig gates;
    bool halted = false;
};

struct ExecutionEvent {
    size_t pc = 0;
    Op op = Op::Sha3Init;
    uint64_t cycles = 0;
    bool halted = false;  // no instruction executed; pc was past the end
};

class Machine {
public:
    Machine();

    // Program memory.
    void load_program(const Program& p);
    const Program& program() const { return program_; }
    // pc, cycles, report and halt state are cleared; registers, seeds and slots are kept.
    void reset();

    ExecutionEvent step();
    // Runs until halt or until the cycle counter reaches max_cycles.
    CycleReport run(uint64_t max_cycles = UINT64_MAX);

    const CycleReport& report() const { return report_; }
    const MachineState& state() const { return st_; }

    // Host interface; none of these advance the cycle counter.
    void configure(unsigned n, uint32_t q);
    void write_slot(unsigned slot, const std::vector<uint32_t>& coeffs);
    std::vector<uint32_t> read_slot(unsigned slot) const;
    void write_seed(unsigned which, const Seed& seed);
    Seed read_seed(unsigned which) const;  // requires debug mode
    void load_cdt(const CdtTable& t);
    void set_counters(uint16_t c0, uint16_t c1);
    void set_reg(uint32_t v);
    void set_tmp(uint32_t v);

    void set_debug(bool on) { debug_ = on; }
    // Strict: invoking a gated unit faults. Permissive: gating only filters statistics.
    void set_strict_gating(bool on) { strict_gating_ = on; }
    bool strict_gating() const { return strict_gating_; }

    void set_trace(bool on);
    const std::vector<AccessEvent>& trace() const { return st_.cache.events(); }
    void clear_trace() { st_.cache.clear_events(); }

private:
    uint64_t execute(const Instruction& ins);
    void charge(Unit u, uint64_t cycles);
    void require_config() const;
    void require_ungated(bool gated, const char* unit) const;
    void check_slot(unsigned slot) const;
    const LatticeConfig& cfg() const { return *st_.config; }

    uint64_t stream(unsigned dst, std::vector<unsigned> reads, const std::vector<uint32_t>& out);
    uint64_t read_stream(unsigned slot);
    uint64_t run_sampler(const Instruction& ins);
    uint64_t sha3_absorb(const Instruction& ins);
    uint64_t sha3_digest(const Instruction& ins);

    MachineState st_;
    Program program_;
    CycleReport report_;
    bool debug_ = false;
    bool strict_gating_ = false;

    KeccakState hash_{SpongeMode::Sha3_256};
    std::optional<SpongeMode> hash_mode_;  // fixed by the first absorb after sha3_init
    bool hash_done_ = false;
};

}  // namespace sapphire
