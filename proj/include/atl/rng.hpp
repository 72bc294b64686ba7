#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace atl {

/**
 * Philox4x32-10 counter-based generator.
 *
 * The 128-bit counter is split into a 64-bit stream id (high half) and a
 * 64-bit block index (low half). For a fixed key the block function is a
 * bijection on counters, so two engines with the same key and different
 * stream ids never produce the same block: streams are disjoint by
 * construction, whatever the number of draws (up to 2^64 blocks each).
 *
 * Satisfies UniformRandomBitGenerator with 32-bit output.
 */
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (lane_ == 4) {
            refill();
        }
        return buffer_[lane_++];
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t stream() const noexcept { return stream_; }
    /// Number of 128-bit blocks generated so far.
    std::uint64_t blocks_used() const noexcept { return block_; }

    /// The raw 10-round block function.
    static Block encrypt(Block counter, Key key) noexcept;

private:
    void refill() noexcept;

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int lane_ = 4;
};

/// SplitMix64 finalizer; used to derive child seeds from structured tuples.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a seed from a base seed and a sequence of tags.
template <class... Tags>
std::uint64_t derive_seed(std::uint64_t base, Tags... tags) noexcept {
    std::uint64_t h = mix64(base ^ 0x6a09e667f3bcc909ULL);
    ((h = mix64(h ^ (static_cast<std::uint64_t>(tags) + 0x9e3779b97f4a7c15ULL))), ...);
    return h;
}

} // namespace atl
