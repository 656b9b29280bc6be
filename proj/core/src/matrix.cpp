#include "deva/matrix.hpp"

#include <cmath>

namespace deva {

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix out(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
}

DenseMatrix DenseMatrix::diag(std::span<const double> values) {
    const int n = static_cast<int>(values.size());
    DenseMatrix out(n, n);
    for (int i = 0; i < n; ++i) out(i, i) = values[i];
    return out;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator+: shape mismatch");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "operator-: shape mismatch");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
    DenseMatrix out = a;
    for (double& x : out.flat()) x *= s;
    return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    DenseMatrix out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        double* oi = out.data() + static_cast<size_t>(i) * m;
        const double* ai = a.data() + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double aip = ai[p];
            if (aip == 0.0) continue;
            const double* bp = b.data() + static_cast<size_t>(p) * m;
            for (int j = 0; j < m; ++j) oi[j] += aip * bp[j];
        }
    }
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw ShapeMismatch("matmul_tn: inner dimensions differ");
    DenseMatrix out(a.cols(), b.cols());
    const int n = a.cols(), k = a.rows(), m = b.cols();
    for (int p = 0; p < k; ++p) {
        const double* ap = a.data() + static_cast<size_t>(p) * n;
        const double* bp = b.data() + static_cast<size_t>(p) * m;
        for (int i = 0; i < n; ++i) {
            const double api = ap[i];
            if (api == 0.0) continue;
            double* oi = out.data() + static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) oi[j] += api * bp[j];
        }
    }
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt: inner dimensions differ");
    DenseMatrix out(a.rows(), b.rows());
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i) {
        const double* ai = a.data() + static_cast<size_t>(i) * k;
        double* oi = out.data() + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* bj = b.data() + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
            oi[j] = acc;
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard: shape mismatch");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

DenseMatrix outer(std::span<const double> u, std::span<const double> v) {
    DenseMatrix out(static_cast<int>(u.size()), static_cast<int>(v.size()));
    for (size_t i = 0; i < u.size(); ++i)
        for (size_t j = 0; j < v.size(); ++j) out.data()[i * v.size() + j] = u[i] * v[j];
    return out;
}

void scale_add(DenseMatrix& y, double alpha, const DenseMatrix& x, double beta) {
    require_same_shape(y, x, "scale_add: shape mismatch");
    for (size_t i = 0; i < y.size(); ++i) y.data()[i] = alpha * y.data()[i] + beta * x.data()[i];
}

double frobenius_norm(const DenseMatrix& a) {
    double acc = 0.0;
    for (double x : a.flat()) acc += x * x;
    return std::sqrt(acc);
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "dot: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    return acc;
}

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double x : a.flat()) m = std::max(m, std::fabs(x));
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

bool is_finite(const DenseMatrix& a) {
    for (double x : a.flat())
        if (!std::isfinite(x)) return false;
    return true;
}

std::vector<double> row_norms(const DenseMatrix& a) {
    std::vector<double> out(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
        out[i] = std::sqrt(acc);
    }
    return out;
}

std::vector<double> col_norms(const DenseMatrix& a) {
    std::vector<double> out(a.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out[j] += a(i, j) * a(i, j);
    for (double& x : out) x = std::sqrt(x);
    return out;
}

}  // namespace deva
