#include "sapphire/keccak.hpp"

#include <bit>

#include "sapphire/errors.hpp"

namespace sapphire {

namespace {

constexpr std::array<uint64_t, 24> kRoundConstants = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808AULL, 0x8000000080008000ULL,
    0x000000000000808BULL, 0x0000000080000001ULL, 0x8000000080008081ULL, 0x8000000000008009ULL,
    0x000000000000008AULL, 0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000AULL,
    0x000000008000808BULL, 0x800000000000008BULL, 0x8000000000008089ULL, 0x8000000000008003ULL,
    0x8000000000008002ULL, 0x8000000000000080ULL, 0x000000000000800AULL, 0x800000008000000AULL,
    0x8000000080008081ULL, 0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

// rho offsets indexed by x + 5y
constexpr std::array<int, 25> kRho = {
    0, 1, 62, 28, 27, 36, 44, 6, 55, 20, 3, 10, 43, 25, 39, 41, 45, 15, 21, 8, 18, 2, 61, 56, 14,
};

uint8_t suffix(SpongeMode m) {
    return (m == SpongeMode::Shake128 || m == SpongeMode::Shake256) ? 0x1F : 0x06;
}

}  // namespace

void keccak_f1600(Lanes& a) {
    for (uint64_t rc : kRoundConstants) {
        uint64_t c[5], d[5];
        for (int x = 0; x < 5; ++x) c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        for (int x = 0; x < 5; ++x) d[x] = c[(x + 4) % 5] ^ std::rotl(c[(x + 1) % 5], 1);
        for (int i = 0; i < 25; ++i) a[i] ^= d[i % 5];

        Lanes b;
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) b[y + 5 * ((2 * x + 3 * y) % 5)] = std::rotl(a[x + 5 * y], kRho[x + 5 * y]);

        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x)
                a[x + 5 * y] = b[x + 5 * y] ^ (~b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y]);

        a[0] ^= rc;
    }
}

size_t rate_bytes(SpongeMode m) {
    switch (m) {
        case SpongeMode::Shake128: return 168;
        case SpongeMode::Shake256: return 136;
        case SpongeMode::Sha3_256: return 136;
        case SpongeMode::Sha3_512: return 72;
    }
    return 0;
}

KeccakState::KeccakState(SpongeMode mode) : mode_(mode), rate_(rate_bytes(mode)) {}

uint8_t KeccakState::byte_at(size_t i) const { return uint8_t(lanes_[i / 8] >> (8 * (i % 8))); }

void KeccakState::xor_byte(size_t i, uint8_t v) { lanes_[i / 8] ^= uint64_t(v) << (8 * (i % 8)); }

void KeccakState::permute() {
    keccak_f1600(lanes_);
    ++permutations_;
}

void KeccakState::absorb(std::span<const uint8_t> data) {
    if (squeezing_) throw ContractViolation("absorb after finalize");
    for (uint8_t v : data) {
        xor_byte(absorbed_++, v);
        if (absorbed_ == rate_) {
            permute();
            absorbed_ = 0;
        }
    }
}

void KeccakState::finalize() {
    if (squeezing_) return;
    xor_byte(absorbed_, suffix(mode_));
    xor_byte(rate_ - 1, 0x80);
    permute();
    absorbed_ = 0;
    squeezing_ = true;
    cursor_bits_ = 0;
}

uint8_t KeccakState::next_byte_bits(unsigned nbits) {
    uint8_t out = 0;
    for (unsigned b = 0; b < nbits; ++b) {
        if (cursor_bits_ == rate_ * 8) {
            permute();
            cursor_bits_ = 0;
        }
        uint8_t bit = (byte_at(cursor_bits_ / 8) >> (cursor_bits_ % 8)) & 1;
        out |= uint8_t(bit << b);
        ++cursor_bits_;
    }
    return out;
}

void KeccakState::squeeze(std::span<uint8_t> out) {
    finalize();
    for (auto& v : out) {
        if (cursor_bits_ % 8 == 0) {
            if (cursor_bits_ == rate_ * 8) {
                permute();
                cursor_bits_ = 0;
            }
            v = byte_at(cursor_bits_ / 8);
            cursor_bits_ += 8;
        } else {
            v = next_byte_bits(8);
        }
    }
}

std::vector<uint8_t> KeccakState::squeeze_bytes(size_t n) {
    std::vector<uint8_t> out(n);
    squeeze(out);
    return out;
}

std::vector<uint8_t> KeccakState::squeeze_bits(size_t nbits) {
    finalize();
    std::vector<uint8_t> out((nbits + 7) / 8);
    for (size_t i = 0; i < out.size(); ++i) {
        unsigned take = unsigned(std::min<size_t>(8, nbits - 8 * i));
        out[i] = next_byte_bits(take);
    }
    return out;
}

uint32_t KeccakState::squeeze_word() {
    uint8_t b[4];
    squeeze(b);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

std::array<uint8_t, 32> sha3_256(std::span<const uint8_t> data) {
    KeccakState s(SpongeMode::Sha3_256);
    s.absorb(data);
    std::array<uint8_t, 32> out;
    s.squeeze(out);
    return out;
}

std::array<uint8_t, 64> sha3_512(std::span<const uint8_t> data) {
    KeccakState s(SpongeMode::Sha3_512);
    s.absorb(data);
    std::array<uint8_t, 64> out;
    s.squeeze(out);
    return out;
}

std::vector<uint8_t> shake128(std::span<const uint8_t> data, size_t out_bytes) {
    KeccakState s(SpongeMode::Shake128);
    s.absorb(data);
    return s.squeeze_bytes(out_bytes);
}

std::vector<uint8_t> shake256(std::span<const uint8_t> data, size_t out_bytes) {
    KeccakState s(SpongeMode::Shake256);
    s.absorb(data);
    return s.squeeze_bytes(out_bytes);
}

}  // namespace sapphire
