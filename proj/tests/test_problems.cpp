#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "deva/factorize.hpp"
#include "deva/problems.hpp"
#include "test_util.hpp"

using namespace deva;
using namespace deva::test;

namespace {

const std::vector<double> kSpectrum = {1, 2, 3, 99, 100, 101, 4998, 4999, 5000};

std::vector<double> sorted_eigenvalues(const DenseMatrix& h) {
    std::vector<double> vals = sym_eig(h).values;
    std::sort(vals.begin(), vals.end());
    return vals;
}

}  // namespace

TEST_CASE("trace quadratic carries the prescribed spectrum") {
    for (TraceKind kind : {TraceKind::homogeneous, TraceKind::heterogeneous}) {
        Rng rng(100);
        const TraceQuadratic p = TraceQuadratic::build(kind, rng);
        const std::vector<double> vals = sorted_eigenvalues(p.hessian());
        REQUIRE(vals.size() == kSpectrum.size());
        for (size_t i = 0; i < vals.size(); ++i)
            CHECK(std::fabs(vals[i] - kSpectrum[i]) <= 1e-6 * kSpectrum[i]);
    }
}

TEST_CASE("hom and het instances from one seed share the sorted spectrum and rotations") {
    Rng rng_a(200), rng_b(200);
    const TraceQuadratic hom = TraceQuadratic::build(TraceKind::homogeneous, rng_a);
    const TraceQuadratic het = TraceQuadratic::build(TraceKind::heterogeneous, rng_b);
    const std::vector<double> va = sorted_eigenvalues(hom.hessian());
    const std::vector<double> vb = sorted_eigenvalues(het.hessian());
    for (size_t i = 0; i < va.size(); ++i) CHECK(std::fabs(va[i] - vb[i]) <= 1e-6 * vb[i]);
    // both consumed the same rng draws
    CHECK(rng_a.next_u64() == rng_b.next_u64());
    // same-kind rebuilds are bit-identical
    Rng rng_c(200);
    const TraceQuadratic hom2 = TraceQuadratic::build(TraceKind::homogeneous, rng_c);
    CHECK(std::memcmp(hom.hessian().data(), hom2.hessian().data(),
                      hom.hessian().size() * sizeof(double)) == 0);
}

TEST_CASE("design matrix factors the hessian") {
    Rng rng(300);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::heterogeneous, rng);
    const DenseMatrix hta = matmul_tn(p.design(), p.design());
    CHECK(frobenius_norm(hta - p.hessian()) / frobenius_norm(p.hessian()) < 1e-9);
}

TEST_CASE("full gradient values") {
    Rng rng(400);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::homogeneous, rng);

    const GradSample at_zero = p.full_gradient(DenseMatrix(9, 9));
    CHECK(at_zero.value == 0.0);
    CHECK(frobenius_norm(at_zero.grad) == 0.0);

    // f(I) = Tr(H)/2 = (1+2+3+99+100+101+4998+4999+5000)/2 = 7651.5
    const double expected = 0.5 * std::accumulate(kSpectrum.begin(), kSpectrum.end(), 0.0);
    const GradSample at_id = p.full_gradient(DenseMatrix::identity(9));
    CHECK(at_id.value == doctest::Approx(expected).epsilon(1e-9));

    CHECK_THROWS_AS(p.full_gradient(DenseMatrix(5, 5)), ShapeMismatch);
}

TEST_CASE("full gradient matches central finite differences") {
    Rng rng(500);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::heterogeneous, rng);
    DenseMatrix x = rng_gaussian(rng, 9, 9);
    const GradSample g = p.full_gradient(x);
    const double h = 1e-5;
    for (int probe = 0; probe < 12; ++probe) {
        const int i = static_cast<int>(rng.next_below(9));
        const int j = static_cast<int>(rng.next_below(9));
        DenseMatrix xp = x, xm = x;
        xp(i, j) += h;
        xm(i, j) -= h;
        const double fd = (p.full_gradient(xp).value - p.full_gradient(xm).value) / (2.0 * h);
        CHECK(std::fabs(fd - g.grad(i, j)) <= 1e-5 * std::max(1.0, std::fabs(g.grad(i, j))));
    }
}

TEST_CASE("kaczmarz gradient: full batch, unbiasedness, zero iterate") {
    Rng rng(600);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::heterogeneous, rng);
    DenseMatrix x = rng_gaussian(rng, 9, 9);
    const GradSample full = p.full_gradient(x);

    std::vector<int> all_rows(9);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    const GradSample batch = p.kaczmarz_gradient(x, all_rows);
    CHECK(frobenius_norm(batch.grad - full.grad) <= 1e-10 * std::max(1.0, frobenius_norm(full.grad)));
    CHECK(std::fabs(batch.value - full.value) <= 1e-10 * std::max(1.0, std::fabs(full.value)));

    DenseMatrix mean(9, 9);
    for (int i = 0; i < 9; ++i) {
        const int row[] = {i};
        scale_add(mean, 1.0, p.kaczmarz_gradient(x, row).grad, 1.0 / 9.0);
    }
    CHECK(frobenius_norm(mean - full.grad) <= 1e-10 * std::max(1.0, frobenius_norm(full.grad)));

    const GradSample at_zero = p.kaczmarz_gradient(DenseMatrix(9, 9), all_rows);
    CHECK(frobenius_norm(at_zero.grad) == 0.0);
    CHECK(at_zero.value == 0.0);
}

TEST_CASE("kaczmarz gradient rejects bad batches") {
    Rng rng(700);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::homogeneous, rng);
    const DenseMatrix x(9, 9);
    const int bad[] = {9};
    CHECK_THROWS_AS(p.kaczmarz_gradient(x, bad), InvalidInput);
    CHECK_THROWS_AS(p.kaczmarz_gradient(x, std::span<const int>{}), InvalidInput);
}

TEST_CASE("sample_rows draws uniformly with replacement") {
    Rng rng(800);
    const TraceQuadratic p = TraceQuadratic::build(TraceKind::homogeneous, rng);
    std::vector<int> counts(9, 0);
    for (int rep = 0; rep < 2000; ++rep)
        for (int idx : p.sample_rows(rng, 3)) ++counts[idx];
    for (int c : counts) {
        CHECK(c > 400);  // expectation ~667
        CHECK(c < 950);
    }
}

TEST_CASE("vector quadratic basics") {
    VectorQuadratic q({1.0, 1.0});
    DenseMatrix x(2, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 1.0;
    const GradSample g = q.full_gradient(x);
    CHECK(g.grad(0, 0) == 1.0);
    CHECK(g.grad(1, 0) == 1.0);
    CHECK(g.value == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(VectorQuadratic({1.0, -2.0}), InvalidInput);
    CHECK_THROWS_AS(q.full_gradient(DenseMatrix(3, 1)), ShapeMismatch);
}

TEST_CASE("vector quadratic: gd converges monotonically below the stability bound") {
    VectorQuadratic q({1.0, 5.0, 9.0});
    Rng rng(900);
    DenseMatrix x = rng_gaussian(rng, 3, 1);
    double prev = q.full_gradient(x).value;
    const double lr = 0.2;  // < 2 / 9
    for (int t = 0; t < 50; ++t) {
        const GradSample g = q.full_gradient(x);
        for (int i = 0; i < 3; ++i) x(i, 0) -= lr * g.grad(i, 0);
        const double cur = q.full_gradient(x).value;
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("vector quadratic finite differences and kaczmarz contract") {
    VectorQuadratic q({2.0, 7.0, 11.0, 0.5});
    Rng rng(1000);
    DenseMatrix x = rng_gaussian(rng, 4, 1);
    const GradSample g = q.full_gradient(x);
    const double h = 1e-6;
    for (int i = 0; i < 4; ++i) {
        DenseMatrix xp = x, xm = x;
        xp(i, 0) += h;
        xm(i, 0) -= h;
        const double fd = (q.full_gradient(xp).value - q.full_gradient(xm).value) / (2.0 * h);
        CHECK(std::fabs(fd - g.grad(i, 0)) <= 1e-6 * std::max(1.0, std::fabs(g.grad(i, 0))));
    }

    DenseMatrix mean(4, 1);
    for (int i = 0; i < 4; ++i) {
        const int row[] = {i};
        scale_add(mean, 1.0, q.kaczmarz_gradient(x, row).grad, 0.25);
    }
    CHECK(frobenius_norm(mean - g.grad) <= 1e-10 * std::max(1.0, frobenius_norm(g.grad)));
}
