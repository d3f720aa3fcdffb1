#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sapphire {

enum class Access : uint8_t { Read, Write };

struct AccessEvent {
    uint64_t cycle;
    uint8_t bank;
    uint8_t sram;
    uint16_t row;
    Access kind;

    bool operator==(const AccessEvent&) const = default;
};

// `cycle bank sram row R|W`
std::string format_event(const AccessEvent& e);
std::string format_trace(const std::vector<AccessEvent>& events);

enum class PairKind { Adjacent, Strided };  // (2j, 2j+1) or (j, j+n/2)

enum class HazardMode { Fault, Count };

// Two banks of four single-port SRAMs (1024 x 24-bit each), partitioned into n-coefficient slots.
class PolynomialCache {
public:
    static constexpr unsigned kBanks = 2;
    static constexpr unsigned kSrams = 4;
    static constexpr unsigned kRows = 1024;
    static constexpr unsigned kCapacity = kBanks * kSrams * kRows;
    static constexpr uint32_t kWordMask = (1u << 24) - 1;
    static constexpr unsigned kMinN = 8;
    static constexpr unsigned kMaxN = 2048;

    explicit PolynomialCache(unsigned n = 1024);

    // Changes slot geometry; contents are kept as raw words.
    void configure(unsigned n);
    unsigned n() const { return n_; }
    static constexpr unsigned kMaxSlots = 128;
    // 8192 / n, capped at the 7-bit slot operand range for n < 64.
    unsigned slots() const { return std::min(kCapacity / n_, kMaxSlots); }
    unsigned slots_per_bank() const { return slots() / kBanks; }
    unsigned bank_of(unsigned slot) const;

    struct Location {
        unsigned bank, sram, row;
    };
    Location locate(unsigned slot, unsigned i) const;

    // Untracked access (host interface, tests).
    uint32_t slot_read(unsigned slot, unsigned i) const;
    void slot_write(unsigned slot, unsigned i, uint32_t v);
    void slot_clear(unsigned slot);
    std::vector<uint32_t> load(unsigned slot) const;
    void store(unsigned slot, const std::vector<uint32_t>& v);
    void swap_slots(unsigned a, unsigned b);

    // Tracked access: every call is logged against the current cycle and audited.
    void begin_cycle(uint64_t cycle);
    uint64_t cycle() const { return cycle_; }
    uint32_t read(unsigned slot, unsigned i);
    void write(unsigned slot, unsigned i, uint32_t v);
    std::pair<uint32_t, uint32_t> read_pair(unsigned slot, PairKind kind, unsigned j);
    void write_pair(unsigned slot, PairKind kind, unsigned j, uint32_t a, uint32_t b);
    static std::pair<unsigned, unsigned> pair_indices(PairKind kind, unsigned j, unsigned n);

    void set_hazard_mode(HazardMode m) { hazard_mode_ = m; }
    HazardMode hazard_mode() const { return hazard_mode_; }
    uint64_t hazards() const { return hazards_; }
    void reset_hazards() { hazards_ = 0; }

    void set_recording(bool on) { recording_ = on; }
    bool recording() const { return recording_; }
    const std::vector<AccessEvent>& events() const { return events_; }
    void clear_events() { events_.clear(); }

private:
    uint32_t& word(const Location& l) { return mem_[(l.bank * kSrams + l.sram) * kRows + l.row]; }
    const uint32_t& word(const Location& l) const { return mem_[(l.bank * kSrams + l.sram) * kRows + l.row]; }
    void check(unsigned slot, unsigned i) const;
    void touch(const Location& l, Access kind);

    unsigned n_ = 1024;
    unsigned lg_n_ = 10;
    std::vector<uint32_t> mem_;
    uint64_t cycle_ = 0;
    uint8_t busy_ = 0;  // one bit per (bank, sram) in the current cycle
    HazardMode hazard_mode_ = HazardMode::Fault;
    uint64_t hazards_ = 0;
    bool recording_ = false;
    std::vector<AccessEvent> events_;
};

}  // namespace sapphire
