#include "deva/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deva {

namespace {

constexpr int kMaxSweeps = 60;

// Largest-magnitude entry of each column made nonnegative; the companion
// matrix (V for SVD) gets the same flips so products are unchanged.
void apply_column_sign_convention(DenseMatrix& q, DenseMatrix* companion) {
    for (int j = 0; j < q.cols(); ++j) {
        int arg = 0;
        double best = -1.0;
        for (int i = 0; i < q.rows(); ++i) {
            const double a = std::fabs(q(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (q(arg, j) < 0.0) {
            for (int i = 0; i < q.rows(); ++i) q(i, j) = -q(i, j);
            if (companion)
                for (int i = 0; i < companion->rows(); ++i) (*companion)(i, j) = -(*companion)(i, j);
        }
    }
}

// Gram-Schmidt completion for (near-)null columns so u stays orthonormal
// even for rank-deficient input. Candidates are standard basis vectors,
// picked deterministically.
void complete_column(DenseMatrix& u, int col) {
    const int n = u.rows();
    for (int cand = 0; cand < n; ++cand) {
        std::vector<double> r(n, 0.0);
        r[cand] = 1.0;
        for (int j = 0; j < u.cols(); ++j) {
            if (j == col) continue;
            double proj = 0.0;
            for (int i = 0; i < n; ++i) proj += u(i, j) * r[i];
            for (int i = 0; i < n; ++i) r[i] -= proj * u(i, j);
        }
        double nrm = 0.0;
        for (double x : r) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm > 0.5) {
            for (int i = 0; i < n; ++i) u(i, col) = r[i] / nrm;
            return;
        }
    }
    // n candidates always contain one with large residual for < n used columns
    throw InvalidInput("svd: basis completion failed");
}

// One-sided Jacobi on w (n x m, n >= m), accumulating rotations into v.
void one_sided_jacobi(DenseMatrix& w, DenseMatrix& v) {
    const int n = w.rows(), m = w.cols();
    double fro_sq = 0.0;
    for (double x : w.flat()) fro_sq += x * x;
    if (fro_sq == 0.0) return;
    const double off_tol = 1e-14 * fro_sq;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < m - 1; ++p) {
            for (int q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    app += wp * wp;
                    aqq += wq * wq;
                    apq += wp * wq;
                }
                if (std::fabs(apq) <= off_tol) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < n; ++i) {
                    const double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (int i = 0; i < m; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
}

SvdTriple svd_tall(const DenseMatrix& a) {
    const int n = a.rows(), m = a.cols();
    DenseMatrix w = a;
    DenseMatrix v = DenseMatrix::identity(m);
    one_sided_jacobi(w, v);

    std::vector<double> sigma(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(acc);
    }

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return sigma[i] > sigma[j]; });

    SvdTriple out;
    out.u = DenseMatrix(n, m);
    out.v = DenseMatrix(m, m);
    out.s.resize(m);
    const double sigma_max = sigma.empty() ? 0.0 : sigma[order[0]];
    const double null_tol = sigma_max * 1e-14 * std::max(n, m);
    for (int k = 0; k < m; ++k) {
        const int j = order[k];
        out.s[k] = sigma[j];
        for (int i = 0; i < m; ++i) out.v(i, k) = v(i, j);
        if (sigma[j] > null_tol && sigma[j] > 0.0) {
            for (int i = 0; i < n; ++i) out.u(i, k) = w(i, j) / sigma[j];
        }
    }
    for (int k = 0; k < m; ++k) {
        const int j = order[k];
        if (!(sigma[j] > null_tol && sigma[j] > 0.0)) complete_column(out.u, k);
    }
    apply_column_sign_convention(out.u, &out.v);
    return out;
}

}  // namespace

SvdTriple svd(const DenseMatrix& a) {
    if (a.empty()) throw InvalidInput("svd: empty matrix");
    if (!is_finite(a)) throw InvalidInput("svd: non-finite input");
    if (a.rows() >= a.cols()) return svd_tall(a);
    SvdTriple t = svd_tall(transpose(a));
    return SvdTriple{std::move(t.v), std::move(t.s), std::move(t.u)};
}

EigenPair sym_eig(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw ShapeMismatch("sym_eig: matrix not square");
    if (!is_finite(a)) throw InvalidInput("sym_eig: non-finite input");
    const int n = a.rows();

    DenseMatrix s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    DenseMatrix v = DenseMatrix::identity(n);

    const double off_tol = 1e-14 * frobenius_norm(s);
    if (off_tol > 0.0) {
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            bool rotated = false;
            for (int p = 0; p < n - 1; ++p) {
                for (int q = p + 1; q < n; ++q) {
                    if (std::fabs(s(p, q)) <= off_tol) continue;
                    rotated = true;
                    const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
                    const double t =
                        (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                    const double c = 1.0 / std::sqrt(1.0 + t * t);
                    const double sn = c * t;
                    for (int i = 0; i < n; ++i) {
                        const double sip = s(i, p), siq = s(i, q);
                        s(i, p) = c * sip - sn * siq;
                        s(i, q) = sn * sip + c * siq;
                    }
                    for (int i = 0; i < n; ++i) {
                        const double spi = s(p, i), sqi = s(q, i);
                        s(p, i) = c * spi - sn * sqi;
                        s(q, i) = sn * spi + c * sqi;
                    }
                    for (int i = 0; i < n; ++i) {
                        const double vip = v(i, p), viq = v(i, q);
                        v(i, p) = c * vip - sn * viq;
                        v(i, q) = sn * vip + c * viq;
                    }
                    s(p, q) = 0.0;
                    s(q, p) = 0.0;
                }
            }
            if (!rotated) break;
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return s(i, i) > s(j, j); });

    EigenPair out;
    out.vectors = DenseMatrix(n, n);
    out.values.resize(n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = s(order[k], order[k]);
        for (int i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
    }
    apply_column_sign_convention(out.vectors, nullptr);
    return out;
}

DenseMatrix qr_orthonormalize(const DenseMatrix& a) {
    if (a.empty()) throw InvalidInput("qr_orthonormalize: empty matrix");
    if (!is_finite(a)) throw InvalidInput("qr_orthonormalize: non-finite input");
    const int n = a.rows(), k = a.cols();
    if (n < k) throw ShapeMismatch("qr_orthonormalize: more columns than rows");

    DenseMatrix r = a;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(k);
    const double rank_tol = 1e-12 * std::max(1.0, frobenius_norm(a));

    for (int j = 0; j < k; ++j) {
        std::vector<double> h(n, 0.0);
        double norm_sq = 0.0;
        for (int i = j; i < n; ++i) norm_sq += r(i, j) * r(i, j);
        const double alpha = std::sqrt(norm_sq);
        if (alpha <= rank_tol) throw DegenerateBasis("qr_orthonormalize: rank-deficient column");
        const double sign = r(j, j) >= 0.0 ? 1.0 : -1.0;
        h[j] = r(j, j) + sign * alpha;
        for (int i = j + 1; i < n; ++i) h[i] = r(i, j);
        double hn = 0.0;
        for (int i = j; i < n; ++i) hn += h[i] * h[i];
        hn = std::sqrt(hn);
        if (hn > 0.0)
            for (int i = j; i < n; ++i) h[i] /= hn;
        // apply reflector to remaining columns
        for (int c = j; c < k; ++c) {
            double proj = 0.0;
            for (int i = j; i < n; ++i) proj += h[i] * r(i, c);
            proj *= 2.0;
            for (int i = j; i < n; ++i) r(i, c) -= proj * h[i];
        }
        if (std::fabs(r(j, j)) <= rank_tol) throw DegenerateBasis("qr_orthonormalize: rank-deficient column");
        reflectors.push_back(std::move(h));
    }

    // q = H_0 ... H_{k-1} applied to the first k columns of the identity
    DenseMatrix q(n, k);
    for (int j = 0; j < k; ++j) q(j, j) = 1.0;
    for (int rj = k - 1; rj >= 0; --rj) {
        const std::vector<double>& h = reflectors[rj];
        for (int c = 0; c < k; ++c) {
            double proj = 0.0;
            for (int i = rj; i < n; ++i) proj += h[i] * q(i, c);
            proj *= 2.0;
            for (int i = rj; i < n; ++i) q(i, c) -= proj * h[i];
        }
    }
    apply_column_sign_convention(q, nullptr);
    return q;
}

DenseMatrix cholesky(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw ShapeMismatch("cholesky: matrix not square");
    if (!is_finite(a)) throw InvalidInput("cholesky: non-finite input");
    const int n = a.rows();
    const double pivot_tol = 1e-12 * frobenius_norm(a);
    DenseMatrix c(n, n);
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int p = 0; p < j; ++p) d -= c(j, p) * c(j, p);
        if (d <= pivot_tol) throw NotPositiveDefinite("cholesky: pivot not positive");
        c(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double x = 0.5 * (a(i, j) + a(j, i));
            for (int p = 0; p < j; ++p) x -= c(i, p) * c(j, p);
            c(i, j) = x / c(j, j);
        }
    }
    return c;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    if (!is_finite(a) || !is_finite(b)) throw InvalidInput("kron: non-finite input");
    DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == 0.0) continue;
            for (int p = 0; p < b.rows(); ++p)
                for (int q = 0; q < b.cols(); ++q)
                    out(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return out;
}

}  // namespace deva
