#pragma once

#include <array>
#include <cstdint>

namespace seedforge {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A pure function of (key, counter): no state is carried between draws, so
/// work can be split across threads in any order and still reproduce the
/// serial stream exactly.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) noexcept : key_(key) {}
    explicit constexpr Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Counter operator()(Counter ctr) const noexcept {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    /// Uniform double in [0, 1) with 53 random bits, drawn from counter
    /// (index, stream, 0, 0).
    constexpr double uniform(std::uint64_t index, std::uint32_t stream = 0) const noexcept {
        const auto out = (*this)({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  stream, 0u});
        const std::uint64_t bits = (std::uint64_t(out[0]) << 32 | out[1]) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    /// 64 random bits from counter (index, stream, 0, 0).
    constexpr std::uint64_t bits64(std::uint64_t index, std::uint32_t stream = 0) const noexcept {
        const auto out = (*this)({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                  stream, 0u});
        return std::uint64_t(out[0]) << 32 | out[1];
    }

    constexpr Key key() const noexcept { return key_; }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57;
    static constexpr std::uint32_t kW0 = 0x9E3779B9;
    static constexpr std::uint32_t kW1 = 0xBB67AE85;

    Key key_;
};

/// Per-(image, slot) seed: a Philox block keyed by the global seed with the
/// image id and slot as the counter.
constexpr std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t image_id, std::uint64_t slot) noexcept {
    const Philox4x32 rng(global_seed);
    const auto out = rng({static_cast<std::uint32_t>(image_id), static_cast<std::uint32_t>(image_id >> 32),
                          static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(slot >> 32)});
    return std::uint64_t(out[0]) << 32 | out[1];
}

}  // namespace seedforge
