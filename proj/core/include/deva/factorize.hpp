#pragma once

#include <vector>

#include "deva/matrix.hpp"

namespace deva {

/// Reduced SVD a = u * diag(s) * v^T with u: n x r, v: m x r, r = min(n, m).
/// Singular values sorted descending; u, v have orthonormal columns and a
/// deterministic column-sign convention (largest-magnitude entry of each u
/// column is nonnegative).
struct SvdTriple {
    DenseMatrix u;
    std::vector<double> s;
    DenseMatrix v;
};

/// Symmetric eigendecomposition a = vectors * diag(values) * vectors^T,
/// values sorted descending, same column-sign convention as SvdTriple.
struct EigenPair {
    DenseMatrix vectors;
    std::vector<double> values;
};

/// One-sided Jacobi SVD. Throws InvalidInput on non-finite or empty input.
SvdTriple svd(const DenseMatrix& a);

/// Cyclic Jacobi eigendecomposition. The input is symmetrized as (a+a^T)/2
/// to absorb round-off; throws ShapeMismatch if a is not square.
EigenPair sym_eig(const DenseMatrix& a);

/// Orthonormal basis for the column space of a (Householder QR), with the
/// column-sign convention applied. Throws DegenerateBasis when a column of R
/// falls below 1e-12 * max(1, ||a||_F).
DenseMatrix qr_orthonormalize(const DenseMatrix& a);

/// Lower-triangular c with c * c^T = a. Throws NotPositiveDefinite when a
/// pivot falls below 1e-12 * ||a||_F.
DenseMatrix cholesky(const DenseMatrix& a);

/// Kronecker product. With row-major vectorization, kron(a, b) * vec(x)
/// equals vec(a * x * b^T).
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace deva
