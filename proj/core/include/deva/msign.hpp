#pragma once

#include <array>
#include <span>

#include "deva/matrix.hpp"

namespace deva {

struct NewtonSchulzCoeffs {
    double a, b, c;
};

// Per-iteration coefficient schedule for the quintic iteration
// X <- a*X + b*(X X^T)X + c*(X X^T)^2 X with X0 = G/||G||_F.
// Tuned so that after 5 iterations every normalized singular value sigma:
//   sigma in [0.2, 0.75]  maps to 1 +/- 2.8e-4  (orthogonal inputs recover
//                          their polar factor to ~1e-3 Frobenius),
//   sigma in [0.04, 1]    maps to 1 +/- 5.1e-4,
//   sigma >= 1.7e-3       maps into [0.6, 1.2],
// and no output singular value exceeds 1.2. Iterations past the fifth reuse
// the last entry, which is contractive toward 1.
inline constexpr std::array<NewtonSchulzCoeffs, 5> kDefaultNsSchedule = {{
    {8.0702908242235392, -23.7517240641574041, 17.5866771326277309},
    {3.6757540200719800, -2.8860170131261191, 0.5821303106145590},
    {3.4223970720527204, -3.0422256504684837, 0.7579384012007577},
    {2.1650967399055769, -1.5398188528837089, 0.4022884086377688},
    {1.8810633745925827, -1.2567203524822834, 0.3756723609275509},
}};

// The classic single-triple schedule used by Muon-style optimizers. Fast but
// non-convergent: output singular values oscillate in roughly [0.68, 1.21].
inline constexpr std::array<NewtonSchulzCoeffs, 1> kMuonNsCoeffs = {{
    {3.4445, -4.7750, 2.0315},
}};

/// Exact matrix sign (polar factor) U V^T from the reduced SVD. Directions
/// with sigma_i <= 1e-12 * sigma_max are dropped. Zero in, zero out.
DenseMatrix msign_exact(const DenseMatrix& g);

/// Approximate polar factor via the quintic Newton-Schulz iteration. The
/// iteration runs on the orientation with fewer rows to keep the Gram matrix
/// small. `sign_trick` is accepted for configuration compatibility but is a
/// no-op (the referenced stabilization has no published definition); enabling
/// it only increments the warning counter below.
DenseMatrix msign_newton_schulz(const DenseMatrix& g, int iters = 5,
                                std::span<const NewtonSchulzCoeffs> schedule = kDefaultNsSchedule,
                                bool sign_trick = false);

/// Number of msign_newton_schulz calls so far that requested the undefined
/// sign trick.
long msign_sign_trick_warning_count();

/// RMS alignment factor 0.2 * sqrt(max(n, m)) applied to orthogonalized
/// updates so their root-mean-square matches Adam-style steps.
double rms_alignment_scale(int n, int m);

}  // namespace deva
