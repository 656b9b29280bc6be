#include "deva/rng.hpp"

#include <cmath>
#include <numbers>

namespace deva {

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

DenseMatrix rng_gaussian(Rng& rng, int rows, int cols) {
    DenseMatrix out(rows, cols);
    for (double& x : out.flat()) x = rng.next_gaussian();
    return out;
}

}  // namespace deva
