#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "deva/errors.hpp"

namespace deva {

/// Dense real matrix in row-major order. The single numeric carrier used for
/// parameters, gradients and factor matrices throughout the library.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw InvalidInput("negative matrix dimension");
    }
    DenseMatrix(int rows, int cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != static_cast<size_t>(rows) * cols)
            throw ShapeMismatch("data length does not match rows*cols");
    }

    static DenseMatrix identity(int n);
    static DenseMatrix diag(std::span<const double> values);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int i, int j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

/// a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix outer(std::span<const double> u, std::span<const double> v);

/// axpy-style in-place update: y <- alpha*y + beta*x
void scale_add(DenseMatrix& y, double alpha, const DenseMatrix& x, double beta);

double frobenius_norm(const DenseMatrix& a);
double dot(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
bool is_finite(const DenseMatrix& a);

std::vector<double> row_norms(const DenseMatrix& a);
std::vector<double> col_norms(const DenseMatrix& a);

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeMismatch(what);
}

}  // namespace deva
