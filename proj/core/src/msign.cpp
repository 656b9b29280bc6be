#include "deva/msign.hpp"

#include <atomic>
#include <cmath>

#include "deva/factorize.hpp"

namespace deva {

namespace {
std::atomic<long> g_sign_trick_warnings{0};
}

DenseMatrix msign_exact(const DenseMatrix& g) {
    if (g.empty()) throw InvalidInput("msign_exact: empty matrix");
    if (!is_finite(g)) throw InvalidInput("msign_exact: non-finite input");
    if (frobenius_norm(g) == 0.0) return DenseMatrix(g.rows(), g.cols());

    const SvdTriple f = svd(g);
    const double cutoff = 1e-12 * f.s[0];
    DenseMatrix out(g.rows(), g.cols());
    for (size_t k = 0; k < f.s.size(); ++k) {
        if (f.s[k] <= cutoff) continue;
        for (int i = 0; i < g.rows(); ++i) {
            const double uik = f.u(i, static_cast<int>(k));
            if (uik == 0.0) continue;
            for (int j = 0; j < g.cols(); ++j) out(i, j) += uik * f.v(j, static_cast<int>(k));
        }
    }
    return out;
}

DenseMatrix msign_newton_schulz(const DenseMatrix& g, int iters,
                                std::span<const NewtonSchulzCoeffs> schedule, bool sign_trick) {
    if (g.empty()) throw InvalidInput("msign_newton_schulz: empty matrix");
    if (!is_finite(g)) throw InvalidInput("msign_newton_schulz: non-finite input");
    if (iters < 1) throw InvalidInput("msign_newton_schulz: iters must be >= 1");
    if (schedule.empty()) throw InvalidInput("msign_newton_schulz: empty coefficient schedule");
    if (sign_trick) g_sign_trick_warnings.fetch_add(1, std::memory_order_relaxed);

    const double fro = frobenius_norm(g);
    if (fro == 0.0) return DenseMatrix(g.rows(), g.cols());

    const bool transposed = g.rows() > g.cols();
    DenseMatrix x = transposed ? transpose(g) : g;
    for (double& v : x.flat()) v /= fro;

    for (int it = 0; it < iters; ++it) {
        const NewtonSchulzCoeffs k = schedule[std::min<size_t>(it, schedule.size() - 1)];
        const DenseMatrix gram = matmul_nt(x, x);
        const DenseMatrix gx = matmul(gram, x);
        const DenseMatrix ggx = matmul(gram, gx);
        for (size_t i = 0; i < x.size(); ++i)
            x.data()[i] = k.a * x.data()[i] + k.b * gx.data()[i] + k.c * ggx.data()[i];
    }
    return transposed ? transpose(x) : x;
}

long msign_sign_trick_warning_count() { return g_sign_trick_warnings.load(std::memory_order_relaxed); }

double rms_alignment_scale(int n, int m) {
    if (n < 1 || m < 1) throw InvalidInput("rms_alignment_scale: dimensions must be >= 1");
    return 0.2 * std::sqrt(static_cast<double>(std::max(n, m)));
}

}  // namespace deva
