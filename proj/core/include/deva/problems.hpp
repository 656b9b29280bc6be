#pragma once

#include <span>
#include <vector>

#include "deva/matrix.hpp"
#include "deva/rng.hpp"

namespace deva {

enum class TraceKind { homogeneous, heterogeneous };

struct GradSample {
    double value = 0.0;
    DenseMatrix grad;
    std::vector<int> batch_rows;  // empty for exact gradients
};

/// f(X) = 1/2 Tr(X^T H X) on 9x9 matrices. H is block-diagonal with three
/// 3x3 blocks sharing the fixed spectrum {1,2,3,99,100,101,4998,4999,5000};
/// the homogeneous kind groups eigenvalues of similar magnitude per block,
/// the heterogeneous kind mixes magnitudes within each block. Per-block
/// rotations are drawn from the rng, so two instances built from the same
/// seed stream share rotations regardless of kind.
class TraceQuadratic {
public:
    static TraceQuadratic build(TraceKind kind, Rng& rng);

    int dim() const { return hessian_.rows(); }
    TraceKind kind() const { return kind_; }
    const DenseMatrix& hessian() const { return hessian_; }
    /// Design matrix with H = A^T A (rows are the Kaczmarz samples).
    const DenseMatrix& design() const { return design_; }

    /// value = 1/2 Tr(X^T H X), grad = H X.
    GradSample full_gradient(const DenseMatrix& x) const;

    /// Unbiased row-sampled gradient (d/|batch|) * sum_i a_i (a_i^T X).
    GradSample kaczmarz_gradient(const DenseMatrix& x, std::span<const int> batch) const;

    /// batch_size rows drawn uniformly with replacement.
    std::vector<int> sample_rows(Rng& rng, int batch_size) const;

private:
    TraceQuadratic(TraceKind kind, DenseMatrix hessian, DenseMatrix design)
        : kind_(kind), hessian_(std::move(hessian)), design_(std::move(design)) {}
    TraceKind kind_;
    DenseMatrix hessian_;
    DenseMatrix design_;
};

/// f(x) = 1/2 x^T H x with diagonal H. Parameters are d x 1 matrices. Shares
/// the Kaczmarz sampling contract with TraceQuadratic via the Cholesky rows
/// (here simply sqrt of the spectrum).
class VectorQuadratic {
public:
    explicit VectorQuadratic(std::vector<double> spectrum);

    int dim() const { return static_cast<int>(spectrum_.size()); }
    const DenseMatrix& hessian() const { return hessian_; }
    const std::vector<double>& spectrum() const { return spectrum_; }

    GradSample full_gradient(const DenseMatrix& x) const;
    GradSample kaczmarz_gradient(const DenseMatrix& x, std::span<const int> batch) const;
    std::vector<int> sample_rows(Rng& rng, int batch_size) const;

private:
    std::vector<double> spectrum_;
    DenseMatrix hessian_;
};

}  // namespace deva
