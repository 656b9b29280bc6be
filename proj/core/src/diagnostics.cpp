#include "deva/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "deva/factorize.hpp"
#include "deva/msign.hpp"

namespace deva {

double weighted_l1(std::span<const double> s, std::span<const double> gamma) {
    if (s.size() != gamma.size()) throw ShapeMismatch("weighted_l1: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < s.size(); ++i) acc += gamma[i] * std::fabs(s[i]);
    return acc;
}

double weighted_nuclear(const DenseMatrix& s, const DenseMatrix& gamma) {
    require_same_shape(s, gamma, "weighted_nuclear: shape mismatch");
    const SvdTriple f = svd(hadamard(gamma, s));
    double acc = 0.0;
    for (double v : f.s) acc += v;
    return acc;
}

double nuclear_rank(const DenseMatrix& s) {
    if (frobenius_norm(s) == 0.0) throw UndefinedForZero("nuclear_rank: zero matrix");
    const SvdTriple f = svd(s);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : f.s) {
        sum += v;
        sum_sq += v * v;
    }
    return (sum * sum) / sum_sq;
}

NormTrace h_alignment_trace(const DenseMatrix& hessian, const DenseMatrix& gamma, AdaptKind kind,
                            long step, const DenseMatrix* grad) {
    if (hessian.rows() != hessian.cols()) throw ShapeMismatch("h_alignment_trace: hessian not square");
    NormTrace out;
    out.step = step;
    if (kind == AdaptKind::vector) {
        // gamma lives in the parameter's shape; the Hessian diagonal entry for
        // parameter entry (i, j) of the trace quadratic is H_ii
        if (gamma.rows() != hessian.rows())
            throw ShapeMismatch("h_alignment_trace: gamma rows must match hessian");
        double acc = 0.0;
        for (int i = 0; i < gamma.rows(); ++i)
            for (int j = 0; j < gamma.cols(); ++j) acc += gamma(i, j) * gamma(i, j) * hessian(i, i);
        out.h_weighted = acc;
    } else {
        require_same_shape(gamma, hessian, "h_alignment_trace: gamma shape must match hessian");
        out.h_weighted = weighted_nuclear(hessian, gamma);
    }
    double sum = 0.0, sum_sq = 0.0;
    for (double w : gamma.flat()) {
        sum += w;
        sum_sq += w * w;
    }
    out.gamma_mean = sum / static_cast<double>(gamma.size());
    out.gamma_sq_mean = sum_sq / static_cast<double>(gamma.size());
    out.nuclear_rank = std::numeric_limits<double>::quiet_NaN();
    if (grad != nullptr && frobenius_norm(*grad) > 0.0) out.nuclear_rank = nuclear_rank(*grad);
    return out;
}

double spectral_update_oracle(const DenseMatrix& g, const DenseMatrix& expect_sigma) {
    const int n = g.rows(), m = g.cols();
    if (static_cast<long>(n) * m > 64) throw InvalidInput("spectral_update_oracle: matrix too large");
    require_same_shape(g, expect_sigma, "spectral_update_oracle: expectation shape mismatch");
    for (double e : expect_sigma.flat())
        if (!(e > 0.0)) throw InvalidInput("spectral_update_oracle: expectation must be entrywise positive");

    const EigenPair left = sym_eig(matmul_nt(g, g));
    const EigenPair right = sym_eig(matmul_tn(g, g));
    const DenseMatrix& ql = left.vectors;
    const DenseMatrix& qr = right.vectors;

    std::vector<double> sig_l(n), sig_r(m);
    for (int i = 0; i < n; ++i) sig_l[i] = std::sqrt(std::max(left.values[i], 0.0));
    for (int j = 0; j < m; ++j) sig_r[j] = std::sqrt(std::max(right.values[j], 0.0));
    const double sig_max = std::max(sig_l.empty() ? 0.0 : sig_l[0], sig_r.empty() ? 0.0 : sig_r[0]);
    if (sig_max == 0.0) throw InvalidInput("spectral_update_oracle: zero gradient");
    const double rank_tol = 1e-9 * sig_max;
    int rank_l = 0, rank_r = 0;
    while (rank_l < n && sig_l[rank_l] > rank_tol) ++rank_l;
    while (rank_r < m && sig_r[rank_r] > rank_tol) ++rank_r;

    const DenseMatrix sign_exact = msign_exact(g);
    const DenseMatrix rotated_sign = msign_exact(matmul(matmul_tn(ql, g), qr));

    // Route 1: vectorized update through explicit Kronecker matrices. Both
    // E[(L x R)^{1/2}] (expectation eigenvalues) and (L x R)^{1/4} are built
    // eigen-synthetically in the shared basis kron(Q_L, Q_R); the inverse
    // square root of the synthetic expectation goes through a fresh
    // eigendecomposition of the assembled nm x nm matrix.
    const DenseMatrix p = kron(ql, qr);
    const int nm = n * m;
    DenseMatrix esynth(nm, nm);
    for (int a = 0; a < nm; ++a)
        for (int b = 0; b < nm; ++b) {
            double acc = 0.0;
            for (int k = 0; k < nm; ++k)
                acc += p(a, k) * expect_sigma.data()[k] * p(b, k);
            esynth(a, b) = acc;
        }
    const EigenPair ee = sym_eig(esynth);

    std::vector<double> vec_sign(sign_exact.flat().begin(), sign_exact.flat().end());
    // w = (L x R)^{1/4} vec(msign(G)) with quarter-power eigenvalues
    // sqrt(sigma_i sigma_j) synthesized in the kron basis
    std::vector<double> tmp(nm, 0.0), w(nm, 0.0);
    for (int k = 0; k < nm; ++k) {
        double proj = 0.0;
        for (int a = 0; a < nm; ++a) proj += p(a, k) * vec_sign[a];
        tmp[k] = std::sqrt(sig_l[k / m] * sig_r[k % m]) * proj;
    }
    for (int a = 0; a < nm; ++a) {
        double acc = 0.0;
        for (int k = 0; k < nm; ++k) acc += p(a, k) * tmp[k];
        w[a] = acc;
    }
    // brute = Esynth^{-1/2} w
    std::vector<double> brute(nm, 0.0);
    for (int k = 0; k < nm; ++k) {
        double proj = 0.0;
        for (int a = 0; a < nm; ++a) proj += ee.vectors(a, k) * w[a];
        tmp[k] = proj / std::sqrt(ee.values[k]);
    }
    for (int a = 0; a < nm; ++a) {
        double acc = 0.0;
        for (int k = 0; k < nm; ++k) acc += ee.vectors(a, k) * tmp[k];
        brute[a] = acc;
    }
    const DenseMatrix brute_rotated =
        matmul(matmul_tn(ql, DenseMatrix(n, m, std::move(brute))), qr);

    // Route 2: coordinate-wise Hadamard form with
    // Etilde^{-1/2}_ij = sqrt(sigma_i sigma_j / E_ij)
    double dev = 0.0;
    for (int i = 0; i < rank_l; ++i)
        for (int j = 0; j < rank_r; ++j) {
            const double weight = std::sqrt(sig_l[i] * sig_r[j] / expect_sigma(i, j));
            const double coord = weight * rotated_sign(i, j);
            dev = std::max(dev, std::fabs(brute_rotated(i, j) - coord));
        }
    return dev;
}

double rotated_norms_check(const DenseMatrix& g) {
    if (!is_finite(g)) throw InvalidInput("rotated_norms_check: non-finite input");
    const EigenPair left = sym_eig(matmul_nt(g, g));
    const EigenPair right = sym_eig(matmul_tn(g, g));
    const DenseMatrix rotated = matmul(matmul_tn(left.vectors, g), right.vectors);

    double scale = 0.0;
    for (double v : left.values) scale = std::max(scale, std::fabs(v));
    for (double v : right.values) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return 0.0;

    double dev = 0.0;
    for (int i = 0; i < g.rows(); ++i) {
        double row_sq = 0.0;
        for (int j = 0; j < g.cols(); ++j) row_sq += rotated(i, j) * rotated(i, j);
        dev = std::max(dev, std::fabs(row_sq - left.values[i]));
    }
    for (int j = 0; j < g.cols(); ++j) {
        double col_sq = 0.0;
        for (int i = 0; i < g.rows(); ++i) col_sq += rotated(i, j) * rotated(i, j);
        dev = std::max(dev, std::fabs(col_sq - right.values[j]));
    }
    return dev / scale;
}

}  // namespace deva
