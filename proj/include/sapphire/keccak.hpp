#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sapphire {

using Lanes = std::array<uint64_t, 25>;

// 24 rounds of Keccak-f[1600] in place; lane (x, y) lives at index x + 5y.
void keccak_f1600(Lanes& a);

enum class SpongeMode { Shake128, Shake256, Sha3_256, Sha3_512 };

size_t rate_bytes(SpongeMode m);

class KeccakState {
public:
    explicit KeccakState(SpongeMode mode = SpongeMode::Shake128);

    void absorb(std::span<const uint8_t> data);
    // Applies the domain suffix and final padding; further absorbs are rejected.
    void finalize();

    // Output stream; the first call finalizes implicitly.
    void squeeze(std::span<uint8_t> out);
    std::vector<uint8_t> squeeze_bytes(size_t n);
    // Next nbits of output, packed LSB-first into ceil(nbits/8) bytes.
    std::vector<uint8_t> squeeze_bits(size_t nbits);
    // Next 32 bits as a little-endian word.
    uint32_t squeeze_word();

    SpongeMode mode() const { return mode_; }
    size_t rate() const { return rate_; }
    bool squeezing() const { return squeezing_; }
    size_t absorbed() const { return absorbed_; }
    uint64_t permutations() const { return permutations_; }
    const Lanes& lanes() const { return lanes_; }

private:
    uint8_t byte_at(size_t i) const;
    void xor_byte(size_t i, uint8_t v);
    void permute();
    uint8_t next_byte_bits(unsigned nbits);

    SpongeMode mode_;
    size_t rate_;
    Lanes lanes_{};
    size_t absorbed_ = 0;
    bool squeezing_ = false;
    size_t cursor_bits_ = 0;  // bit offset inside the current output block
    uint64_t permutations_ = 0;
};

std::array<uint8_t, 32> sha3_256(std::span<const uint8_t> data);
std::array<uint8_t, 64> sha3_512(std::span<const uint8_t> data);
std::vector<uint8_t> shake128(std::span<const uint8_t> data, size_t out_bytes);
std::vector<uint8_t> shake256(std::span<const uint8_t> data, size_t out_bytes);

}  // namespace sapphire
