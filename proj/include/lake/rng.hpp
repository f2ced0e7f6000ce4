#pragma once

#include <cstdint>
#include <limits>

namespace lake {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the k-th output of stream (seed, stream) is a hash
/// of (seed, stream, k), so every path owns an independent, reproducible
/// sequence regardless of which thread runs it. Satisfies
/// UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;

    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(splitmix64(splitmix64(seed) ^ (0xd1b54a32d192ed03ULL * (stream + 1)))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace lake
