#pragma once

#include <cstdint>

#include "deva/matrix.hpp"

namespace deva {

/// Counter-based 64-bit generator (splitmix64). Integer draws are bit-identical
/// across platforms for a given seed; floating draws are deterministic given the
/// seed. Single-owner mutable state, cheap to copy.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller with a cached spare.
    double next_gaussian();

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// rows x cols matrix of i.i.d. standard normal entries, filled row-major.
DenseMatrix rng_gaussian(Rng& rng, int rows, int cols);

}  // namespace deva
