#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace lockstep {

/// SplitMix64 (Steele, Lea, Flood 2014). Every random decision in the kernel
/// and the bundled models flows from this generator so that two
/// implementations given the same seed produce identical traces.
class SplitMix64 {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    constexpr explicit SplitMix64(std::uint64_t state = 0) noexcept : state_(state) {}

    /// The splitmix64 output finalizer.
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t next() noexcept {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, bound) by plain modulo. The small bias is accepted in
    /// exchange for a trivially portable definition.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept { return bound == 0 ? 0 : next() % bound; }

    /// True with probability permille/1000.
    constexpr bool chance(std::uint32_t permille) noexcept { return below(1000) < permille; }

    constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Seed of the private stream of one stream index (unit id, worker id, ...)
/// under a global seed: mix(global ^ mix(index + gamma)).
constexpr std::uint64_t stream_seed(std::uint64_t global_seed, std::uint64_t index) noexcept {
    return SplitMix64::mix(global_seed ^ SplitMix64::mix(index + SplitMix64::kGamma));
}

/// Fisher-Yates from the back: for i = n-1 .. 1 swap(v[i], v[below(i+1)]).
template <class T>
void shuffle(std::span<T> values, SplitMix64& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace lockstep
