#pragma once

#include <cstdint>

namespace scc {

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream key from a master seed and up to two
// indices (path, step, particle...). Used so that parallel loops draw the
// same numbers regardless of thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Small explicitly seeded generator: SplitMix64 state stepping, Box-Muller
// normals. Sequences depend only on the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    double uniform();                 // in (0,1)
    double uniform(double lo, double hi);
    double normal();

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace scc
