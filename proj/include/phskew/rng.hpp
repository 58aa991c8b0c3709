#pragma once

#include <cstdint>
#include <random>

namespace phskew {

std::uint64_t splitmix64(std::uint64_t x);

/// Generator for one (seed, stream) pair; independent of worker scheduling.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }
    /// Uniform integer in [0, n), unbiased and identical across standard libraries.
    std::uint64_t below(std::uint64_t n);
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

private:
    std::mt19937_64 engine_;
};

} // namespace phskew
