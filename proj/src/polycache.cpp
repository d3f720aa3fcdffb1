#include "sapphire/polycache.hpp"

#include <bit>
#include <sstream>

#include "sapphire/errors.hpp"

namespace sapphire {

std::string format_event(const AccessEvent& e) {
    std::ostringstream os;
    os << e.cycle << ' ' << unsigned(e.bank) << ' ' << unsigned(e.sram) << ' ' << e.row << ' '
       << (e.kind == Access::Read ? 'R' : 'W');
    return os.str();
}

std::string format_trace(const std::vector<AccessEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        out += format_event(e);
        out += '\n';
    }
    return out;
}

PolynomialCache::PolynomialCache(unsigned n) : mem_(kCapacity, 0) { configure(n); }

void PolynomialCache::configure(unsigned n) {
    if (!std::has_single_bit(n) || n < kMinN || n > kMaxN)
        throw ConfigError("ring dimension " + std::to_string(n) + " not a power of two in [8, 2048]");
    n_ = n;
    lg_n_ = unsigned(std::countr_zero(n));
}

unsigned PolynomialCache::bank_of(unsigned slot) const {
    if (slot >= slots()) throw ProgramError("slot " + std::to_string(slot) + " out of range");
    return slot / slots_per_bank();
}

void PolynomialCache::check(unsigned slot, unsigned i) const {
    if (slot >= slots()) throw ProgramError("slot " + std::to_string(slot) + " out of range");
    if (i >= n_) throw ProgramError("coefficient index " + std::to_string(i) + " out of range");
}

PolynomialCache::Location PolynomialCache::locate(unsigned slot, unsigned i) const {
    check(slot, i);
    unsigned spb = slots_per_bank();
    unsigned quarter = n_ / 4;
    unsigned msb = (i >> (lg_n_ - 1)) & 1;
    unsigned lsb = i & 1;
    return {slot / spb, 2 * msb + lsb, (slot % spb) * quarter + ((i >> 1) & (quarter - 1))};
}

uint32_t PolynomialCache::slot_read(unsigned slot, unsigned i) const { return word(locate(slot, i)); }

void PolynomialCache::slot_write(unsigned slot, unsigned i, uint32_t v) {
    if (v > kWordMask) throw ContractViolation("value exceeds 24 bits");
    word(locate(slot, i)) = v;
}

void PolynomialCache::slot_clear(unsigned slot) {
    for (unsigned i = 0; i < n_; ++i) word(locate(slot, i)) = 0;
}

std::vector<uint32_t> PolynomialCache::load(unsigned slot) const {
    std::vector<uint32_t> v(n_);
    for (unsigned i = 0; i < n_; ++i) v[i] = slot_read(slot, i);
    return v;
}

void PolynomialCache::store(unsigned slot, const std::vector<uint32_t>& v) {
    if (v.size() != n_) throw ContractViolation("polynomial length does not match n");
    for (unsigned i = 0; i < n_; ++i) slot_write(slot, i, v[i]);
}

void PolynomialCache::swap_slots(unsigned a, unsigned b) {
    for (unsigned i = 0; i < n_; ++i) std::swap(word(locate(a, i)), word(locate(b, i)));
}

void PolynomialCache::begin_cycle(uint64_t cycle) {
    cycle_ = cycle;
    busy_ = 0;
}

void PolynomialCache::touch(const Location& l, Access kind) {
    uint8_t bit = uint8_t(1u << (l.bank * kSrams + l.sram));
    if (busy_ & bit) {
        ++hazards_;
        if (hazard_mode_ == HazardMode::Fault)
            throw HazardFault("cycle " + std::to_string(cycle_) + ": bank " + std::to_string(l.bank) + " sram " +
                              std::to_string(l.sram) + " accessed twice");
    }
    busy_ |= bit;
    if (recording_) events_.push_back({cycle_, uint8_t(l.bank), uint8_t(l.sram), uint16_t(l.row), kind});
}

uint32_t PolynomialCache::read(unsigned slot, unsigned i) {
    auto l = locate(slot, i);
    touch(l, Access::Read);
    return word(l);
}

void PolynomialCache::write(unsigned slot, unsigned i, uint32_t v) {
    if (v > kWordMask) throw ContractViolation("value exceeds 24 bits");
    auto l = locate(slot, i);
    touch(l, Access::Write);
    word(l) = v;
}

std::pair<unsigned, unsigned> PolynomialCache::pair_indices(PairKind kind, unsigned j, unsigned n) {
    if (j >= n / 2) throw ContractViolation("pair index out of range");
    return kind == PairKind::Adjacent ? std::pair{2 * j, 2 * j + 1} : std::pair{j, j + n / 2};
}

std::pair<uint32_t, uint32_t> PolynomialCache::read_pair(unsigned slot, PairKind kind, unsigned j) {
    auto [i0, i1] = pair_indices(kind, j, n_);
    uint32_t a = read(slot, i0);
    uint32_t b = read(slot, i1);
    return {a, b};
}

void PolynomialCache::write_pair(unsigned slot, PairKind kind, unsigned j, uint32_t a, uint32_t b) {
    auto [i0, i1] = pair_indices(kind, j, n_);
    write(slot, i0, a);
    write(slot, i1, b);
}

}  // namespace sapphire
