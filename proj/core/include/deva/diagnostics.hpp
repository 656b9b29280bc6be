#pragma once

#include <span>

#include "deva/matrix.hpp"

namespace deva {

enum class AdaptKind { vector, matrix };

/// One row of theory-tracking quantities logged per step.
struct NormTrace {
    long step = 0;
    double h_weighted = 0.0;     // ||H||_{1,Gamma} (matrix) or weighted_l1 of the lifted diagonal (vector)
    double gamma_mean = 0.0;     // mean of the adaptive weights at this step
    double gamma_sq_mean = 0.0;  // mean of their squares
    double nuclear_rank = 0.0;   // nuclear rank of the supplied gradient, NaN when absent
};

/// sum_i gamma_i * |s_i|. gamma must be entrywise positive.
double weighted_l1(std::span<const double> s, std::span<const double> gamma);

/// Nuclear norm of Gamma .* S (sum of its singular values).
double weighted_nuclear(const DenseMatrix& s, const DenseMatrix& gamma);

/// (sum sigma_i)^2 / (sum sigma_i^2). Throws UndefinedForZero on a zero matrix.
double nuclear_rank(const DenseMatrix& s);

/// Smoothness-alignment trace. For vector-style optimizers the weights gamma
/// live in the parameter's shape and the value is sum_ij gamma_ij^2 * H_ii
/// (the gamma^2-weighted l1 norm of the Hessian diagonal lifted to the
/// parameter shape). For matrix-style optimizers the value is
/// weighted_nuclear(H, gamma), requiring gamma and H to share shape exactly.
/// When grad is given and nonzero its nuclear rank is recorded.
NormTrace h_alignment_trace(const DenseMatrix& hessian, const DenseMatrix& gamma, AdaptKind kind,
                            long step, const DenseMatrix* grad = nullptr);

/// Dual-construction check of the coordinate-wise spectral update: builds the
/// Kronecker-vectorized update with a synthetic positive expectation matrix
/// standing in for E[sigma_i sigma_j], builds the coordinate-wise Hadamard
/// form, and returns their max abs elementwise deviation in the rotated
/// space (restricted to the top-rank block when g is rank deficient).
/// Requires g.rows()*g.cols() <= 64 and expect_sigma entrywise positive.
double spectral_update_oracle(const DenseMatrix& g, const DenseMatrix& expect_sigma);

/// Checks that the eigenvalues of G G^T and G^T G match the squared row and
/// column norms of the rotated gradient Q_L^T G Q_R. Returns the max
/// deviation relative to the largest eigenvalue.
double rotated_norms_check(const DenseMatrix& g);

}  // namespace deva
