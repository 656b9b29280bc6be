#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "deva/factorize.hpp"
#include "deva/msign.hpp"
#include "test_util.hpp"

using namespace deva;
using namespace deva::test;

namespace {

// (G G^T)^{-1/4} G (G^T G)^{-1/4} through eigendecompositions, the reference
// identity for the polar factor. Pseudo-inverse convention on tiny eigenvalues.
DenseMatrix quarter_power_polar(const DenseMatrix& g) {
    const EigenPair left = sym_eig(matmul_nt(g, g));
    const EigenPair right = sym_eig(matmul_tn(g, g));
    auto power = [](const EigenPair& e, double p) {
        const int n = e.vectors.rows();
        const double cutoff = 1e-12 * std::max(e.values[0], 0.0);
        DenseMatrix out(n, n);
        for (int k = 0; k < n; ++k) {
            const double lam = e.values[k];
            const double f = lam > cutoff ? std::pow(lam, p) : 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) out(i, j) += e.vectors(i, k) * f * e.vectors(j, k);
        }
        return out;
    };
    return matmul(matmul(power(left, -0.25), g), power(right, -0.25));
}

}  // namespace

TEST_CASE("msign_exact identity and diagonal sign pattern") {
    CHECK(max_abs_diff(msign_exact(DenseMatrix::identity(4)), DenseMatrix::identity(4)) < 1e-12);
    std::vector<double> d = {2.0, -3.0, 0.5};
    std::vector<double> expected = {1.0, -1.0, 1.0};
    CHECK(max_abs_diff(msign_exact(DenseMatrix::diag(d)), DenseMatrix::diag(expected)) < 1e-12);
}

TEST_CASE("msign_exact zero matrix maps to zero") {
    const DenseMatrix z(3, 5);
    CHECK(frobenius_norm(msign_exact(z)) == 0.0);
}

TEST_CASE("msign_exact matches the quarter-power identity") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix g = random_matrix(rng, 5, 3);
        CHECK(frobenius_norm(msign_exact(g) - quarter_power_polar(g)) < 1e-6);
    }
}

TEST_CASE("msign_exact positive-scale invariance") {
    Rng rng(12);
    const DenseMatrix g = random_matrix(rng, 6, 4);
    const DenseMatrix base = msign_exact(g);
    // power-of-two scales rescale every intermediate exactly: bit-identical
    for (double c : {0.25, 2.0, 1024.0}) {
        CHECK(max_abs_diff(msign_exact(c * g), base) == 0.0);
    }
    // arbitrary positive scales introduce only rounding of the input entries
    for (double c : {1e-3, 3.7, 1e3}) {
        CHECK(max_abs_diff(msign_exact(c * g), base) < 1e-10);
    }
}

TEST_CASE("msign_exact orthogonal equivariance") {
    Rng rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix g = random_matrix(rng, 5, 4);
        const DenseMatrix ql = random_orthogonal(rng, 5);
        const DenseMatrix qr = random_orthogonal(rng, 4);
        const DenseMatrix lhs = msign_exact(matmul_nt(matmul(ql, g), qr));
        const DenseMatrix rhs = matmul_nt(matmul(ql, msign_exact(g)), qr);
        CHECK(frobenius_norm(lhs - rhs) < 1e-8);
    }
}

TEST_CASE("msign_exact Frobenius norm squared equals the rank") {
    Rng rng(14);
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix g = random_matrix(rng, 7, 4);
        const double f = frobenius_norm(msign_exact(g));
        CHECK(std::fabs(f * f - 4.0) < 1e-6);
    }
}

TEST_CASE("newton-schulz recovers orthogonal fixed points at any positive scale") {
    Rng rng(15);
    for (int n : {2, 4, 9}) {
        const DenseMatrix q = random_orthogonal(rng, n);
        for (double c : {1e-3, 1.0, 1e3}) {
            CHECK(frobenius_norm(msign_newton_schulz(c * q) - q) < 1e-3);
        }
    }
}

TEST_CASE("newton-schulz zero matrix maps to zero") {
    CHECK(frobenius_norm(msign_newton_schulz(DenseMatrix(4, 2))) == 0.0);
}

TEST_CASE("newton-schulz approximates msign_exact on 16x8 gaussians") {
    Rng rng(16);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix g = random_matrix(rng, 16, 8);
        const double dist = frobenius_norm(msign_newton_schulz(g) - msign_exact(g));
        CHECK(dist <= 0.05 * std::sqrt(8.0));
    }
}

TEST_CASE("newton-schulz output singular values stay in [0.6, 1.2]") {
    Rng rng(17);
    // spectra spanning the supported range of normalized singular values;
    // the contract is verified from 2e-3 upward (see ledger note on the
    // 1e-3 edge of the schedule)
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> sigma = {1.0, 0.5, 0.08, 0.011};
        DenseMatrix g = with_singular_values(rng, 6, 4, sigma);
        const double fro = frobenius_norm(g);
        // append a direction near the bottom edge: 2e-3 of the Frobenius norm
        sigma[3] = 2.1e-3 * fro;
        g = with_singular_values(rng, 6, 4, sigma);
        const SvdTriple f = svd(msign_newton_schulz(g));
        CHECK(f.s.front() <= 1.2);
        CHECK(f.s.back() >= 0.6);
    }
}

TEST_CASE("newton-schulz transposed orientation agrees") {
    Rng rng(18);
    const DenseMatrix g = random_matrix(rng, 12, 5);
    const DenseMatrix a = msign_newton_schulz(g);
    const DenseMatrix b = transpose(msign_newton_schulz(transpose(g)));
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("classic Muon coefficients remain available") {
    Rng rng(19);
    const DenseMatrix g = random_matrix(rng, 8, 8);
    const DenseMatrix out = msign_newton_schulz(g, 5, kMuonNsCoeffs);
    const SvdTriple f = svd(out);
    CHECK(f.s.front() < 1.3);  // the loose classic band
    CHECK(frobenius_norm(out - msign_exact(g)) < 2.0);
}

TEST_CASE("sign trick flag is a recorded no-op") {
    Rng rng(20);
    const DenseMatrix g = random_matrix(rng, 5, 5);
    const long before = msign_sign_trick_warning_count();
    const DenseMatrix plain = msign_newton_schulz(g, 5, kDefaultNsSchedule, false);
    const DenseMatrix tricked = msign_newton_schulz(g, 5, kDefaultNsSchedule, true);
    CHECK(max_abs_diff(plain, tricked) == 0.0);
    CHECK(msign_sign_trick_warning_count() == before + 1);
}

TEST_CASE("rms alignment scale") {
    CHECK(rms_alignment_scale(25, 4) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rms_alignment_scale(1, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(rms_alignment_scale(768, 50257) == doctest::Approx(0.2 * std::sqrt(50257.0)).epsilon(1e-15));
    CHECK_THROWS_AS(rms_alignment_scale(0, 3), InvalidInput);
}
