#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string_view>

namespace p2emec {

// Deterministic random stream built on xoshiro256++ with splitmix64 seeding.
// The generator algorithm is fixed so that a given (seed, label) pair yields
// the same draw sequence on every platform and in every build.
//
// Streams are single-owner: never share one instance across concurrent tasks.
// Independent substreams are obtained with fork(), which hashes a label into
// a child seed (distinct labels give statistically independent sequences).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    // Child stream derived from (seed, label). Deterministic.
    RngStream fork(std::string_view label) const;

    std::uint64_t next_u64();

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform();
    // Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Box-Muller (one fresh pair per call).
    double normal();
    // Circularly-symmetric complex normal with E[|z|^2] = 1.
    std::complex<double> complex_normal();

private:
    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_ = 0;
};

}  // namespace p2emec
