#include "deva/problems.hpp"

#include <array>
#include <cmath>

#include "deva/factorize.hpp"

namespace deva {

namespace {

// Block spectra: same global eigenvalue set, grouped by
// magnitude (homogeneous) or mixed within each block (heterogeneous).
constexpr std::array<std::array<double, 3>, 3> kHomBlocks = {{
    {1.0, 2.0, 3.0},
    {99.0, 100.0, 101.0},
    {4998.0, 4999.0, 5000.0},
}};
constexpr std::array<std::array<double, 3>, 3> kHetBlocks = {{
    {1.0, 99.0, 4998.0},
    {2.0, 100.0, 4999.0},
    {3.0, 101.0, 5000.0},
}};

void check_batch(std::span<const int> batch, int dim, const char* who) {
    if (batch.empty()) throw InvalidInput(std::string(who) + ": empty batch");
    for (int idx : batch)
        if (idx < 0 || idx >= dim) throw InvalidInput(std::string(who) + ": row index out of range");
}

// (d/|batch|) * sum_i a_i (a_i^T X) for rows a_i^T of the design matrix;
// value is the matching unbiased estimate of 1/2 sum_i ||a_i^T X||^2.
GradSample kaczmarz_impl(const DenseMatrix& design, const DenseMatrix& x,
                         std::span<const int> batch) {
    const int d = design.rows();
    const int m = x.cols();
    GradSample out;
    out.grad = DenseMatrix(x.rows(), x.cols());
    out.batch_rows.assign(batch.begin(), batch.end());
    const double scale = static_cast<double>(d) / static_cast<double>(batch.size());
    std::vector<double> ax(m);
    for (int idx : batch) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < design.cols(); ++i) acc += design(idx, i) * x(i, j);
            ax[j] = acc;
        }
        double row_sq = 0.0;
        for (int j = 0; j < m; ++j) row_sq += ax[j] * ax[j];
        out.value += 0.5 * scale * row_sq;
        for (int i = 0; i < design.cols(); ++i) {
            const double ai = design(idx, i);
            if (ai == 0.0) continue;
            for (int j = 0; j < m; ++j) out.grad(i, j) += scale * ai * ax[j];
        }
    }
    return out;
}

}  // namespace

TraceQuadratic TraceQuadratic::build(TraceKind kind, Rng& rng) {
    const auto& blocks = (kind == TraceKind::homogeneous) ? kHomBlocks : kHetBlocks;
    DenseMatrix h(9, 9);
    for (int b = 0; b < 3; ++b) {
        // rotation = orthogonal eigenvector factor of a random 3x3 PSD matrix;
        // drawn identically for both kinds so same-seed instances pair up
        const DenseMatrix a3 = rng_gaussian(rng, 3, 3);
        const DenseMatrix q = sym_eig(matmul_nt(a3, a3)).vectors;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += q(i, k) * blocks[b][k] * q(j, k);
                h(3 * b + i, 3 * b + j) = acc;
            }
    }
    DenseMatrix design = transpose(cholesky(h));  // H = A^T A
    return TraceQuadratic(kind, std::move(h), std::move(design));
}

GradSample TraceQuadratic::full_gradient(const DenseMatrix& x) const {
    if (x.rows() != dim()) throw ShapeMismatch("full_gradient: parameter rows != dim");
    GradSample out;
    out.grad = matmul(hessian_, x);
    out.value = 0.5 * dot(x, out.grad);
    return out;
}

GradSample TraceQuadratic::kaczmarz_gradient(const DenseMatrix& x, std::span<const int> batch) const {
    if (x.rows() != dim()) throw ShapeMismatch("kaczmarz_gradient: parameter rows != dim");
    check_batch(batch, dim(), "kaczmarz_gradient");
    return kaczmarz_impl(design_, x, batch);
}

std::vector<int> TraceQuadratic::sample_rows(Rng& rng, int batch_size) const {
    if (batch_size < 1) throw InvalidInput("sample_rows: batch_size must be >= 1");
    std::vector<int> rows(batch_size);
    for (int& r : rows) r = static_cast<int>(rng.next_below(static_cast<uint64_t>(dim())));
    return rows;
}

VectorQuadratic::VectorQuadratic(std::vector<double> spectrum) : spectrum_(std::move(spectrum)) {
    if (spectrum_.empty()) throw InvalidInput("VectorQuadratic: empty spectrum");
    for (double s : spectrum_)
        if (!(s > 0.0)) throw InvalidInput("VectorQuadratic: spectrum must be positive");
    hessian_ = DenseMatrix::diag(spectrum_);
}

GradSample VectorQuadratic::full_gradient(const DenseMatrix& x) const {
    if (x.rows() != dim() || x.cols() != 1) throw ShapeMismatch("full_gradient: expected d x 1 parameter");
    GradSample out;
    out.grad = DenseMatrix(dim(), 1);
    for (int i = 0; i < dim(); ++i) {
        out.grad(i, 0) = spectrum_[i] * x(i, 0);
        out.value += 0.5 * spectrum_[i] * x(i, 0) * x(i, 0);
    }
    return out;
}

GradSample VectorQuadratic::kaczmarz_gradient(const DenseMatrix& x, std::span<const int> batch) const {
    if (x.rows() != dim() || x.cols() != 1) throw ShapeMismatch("kaczmarz_gradient: expected d x 1 parameter");
    check_batch(batch, dim(), "kaczmarz_gradient");
    // design rows are sqrt(spectrum) * e_i, so each sampled row touches one coordinate
    GradSample out;
    out.grad = DenseMatrix(dim(), 1);
    out.batch_rows.assign(batch.begin(), batch.end());
    const double scale = static_cast<double>(dim()) / static_cast<double>(batch.size());
    for (int idx : batch) {
        const double axi = std::sqrt(spectrum_[idx]) * x(idx, 0);
        out.value += 0.5 * scale * axi * axi;
        out.grad(idx, 0) += scale * std::sqrt(spectrum_[idx]) * axi;
    }
    return out;
}

std::vector<int> VectorQuadratic::sample_rows(Rng& rng, int batch_size) const {
    if (batch_size < 1) throw InvalidInput("sample_rows: batch_size must be >= 1");
    std::vector<int> rows(batch_size);
    for (int& r : rows) r = static_cast<int>(rng.next_below(static_cast<uint64_t>(dim())));
    return rows;
}

}  // namespace deva
