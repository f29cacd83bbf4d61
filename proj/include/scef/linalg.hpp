#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "scef/errors.hpp"

namespace scef {

/// Small dense row-major matrix. Everything in this project is at most a few
/// thousand entries, so no attempt is made at blocking or vectorization.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
    return t;
}

inline Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows)
        throw dimension_error("matmul: inner dimensions disagree (" + std::to_string(x.cols) +
                              " vs " + std::to_string(y.rows) + ")");
    Matrix z(x.rows, y.cols);
    for (std::size_t r = 0; r < x.rows; ++r)
        for (std::size_t k = 0; k < x.cols; ++k) {
            double v = x(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < y.cols; ++c) z(r, c) += v * y(k, c);
        }
    return z;
}

inline double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

inline bool all_finite(const Matrix& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

/// Column-major vectorization of an h×h filter stored row-major:
/// vec(w)[q*h + p] = w(p, q). Fixed project-wide so that inner products of
/// vectorized filters equal Frobenius inner products of the matrices.
inline std::vector<double> vectorize_filter(const double* w, std::size_t h) {
    std::vector<double> v(h * h);
    for (std::size_t q = 0; q < h; ++q)
        for (std::size_t p = 0; p < h; ++p) v[q * h + p] = w[p * h + q];
    return v;
}

inline std::vector<double> vectorize_filter(const Matrix& w) {
    if (w.rows != w.cols) throw dimension_error("vectorize_filter: filter must be square");
    return vectorize_filter(w.a.data(), w.rows);
}

/// Inverse of vectorize_filter; writes the h×h row-major filter into `w`.
inline void devectorize_filter(const double* v, std::size_t h, double* w) {
    for (std::size_t q = 0; q < h; ++q)
        for (std::size_t p = 0; p < h; ++p) w[p * h + q] = v[q * h + p];
}

/// Truncated SVD factors of a K×c matrix: m = left · diag(singular) · rightᵀ
/// with p = min(K, c) columns kept on both sides.
struct SvdResult {
    Matrix left;                   // K×p, orthonormal columns
    std::vector<double> singular;  // length p, non-negative, descending
    Matrix right;                  // c×p, orthonormal columns
};

namespace detail {

// Gram-Schmidt a standard basis vector against the already-filled columns of
// `u` (those in `done`), writing the result into column k. Used to complete a
// left factor when the input is rank deficient.
inline void fill_orthonormal_column(Matrix& u, const std::vector<std::size_t>& done,
                                    std::size_t k) {
    const std::size_t m = u.rows;
    std::vector<double> cand(m);
    for (std::size_t e = 0; e < m; ++e) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[e] = 1.0;
        for (std::size_t d : done) {
            double proj = 0.0;
            for (std::size_t r = 0; r < m; ++r) proj += cand[r] * u(r, d);
            for (std::size_t r = 0; r < m; ++r) cand[r] -= proj * u(r, d);
        }
        double n2 = 0.0;
        for (double v : cand) n2 += v * v;
        if (n2 > 0.25) {
            double inv = 1.0 / std::sqrt(n2);
            for (std::size_t r = 0; r < m; ++r) u(r, k) = cand[r] * inv;
            return;
        }
    }
    throw numeric_error("small_svd: failed to complete orthonormal basis");
}

// One-sided (Hestenes) Jacobi on b (m×n, m >= n generally not required but
// n is the number of columns being orthogonalized). Returns the rotation
// accumulator v (n×n) with b overwritten by b·v.
inline Matrix jacobi_orthogonalize(Matrix& b) {
    const std::size_t n = b.cols;
    const std::size_t m = b.rows;
    Matrix v = Matrix::identity(n);
    constexpr double kOffTol = 1e-12;  // relative off-diagonal Gram mass
    constexpr int kMaxSweeps = 60;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_off = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    const double bi = b(r, i), bj = b(r, j);
                    alpha += bi * bi;
                    beta += bj * bj;
                    gamma += bi * bj;
                }
                if (alpha == 0.0 || beta == 0.0) continue;
                const double off = std::fabs(gamma) / std::sqrt(alpha * beta);
                if (off > max_off) max_off = off;
                if (off <= kOffTol) continue;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double bi = b(r, i), bj = b(r, j);
                    b(r, i) = cs * bi - sn * bj;
                    b(r, j) = sn * bi + cs * bj;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vi = v(r, i), vj = v(r, j);
                    v(r, i) = cs * vi - sn * vj;
                    v(r, j) = sn * vi + cs * vj;
                }
            }
        }
        if (max_off <= kOffTol) break;
    }
    return v;
}

} // namespace detail

/// Deterministic SVD for small matrices (K ≤ 64 rows) via cyclic one-sided
/// Jacobi. Sign convention: in each left singular vector the entry of largest
/// magnitude (lowest index on ties) is non-negative.
inline SvdResult small_svd(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) throw dimension_error("small_svd: empty matrix");
    if (m.rows > 64)
        throw parameter_error("small_svd: expected at most 64 rows, got " +
                              std::to_string(m.rows));
    if (!all_finite(m)) throw numeric_error("small_svd: non-finite entries");

    const bool transposed = m.cols > m.rows;
    Matrix b = transposed ? transpose(m) : m;  // b has n = min(K, c) columns
    const std::size_t n = b.cols;
    Matrix rot = detail::jacobi_orthogonalize(b);

    // Column norms are the singular values; sort descending, ties by index.
    std::vector<double> norms(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < b.rows; ++r) s += b(r, k) * b(r, k);
        norms[k] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    Matrix u(b.rows, n);  // normalized columns of b
    Matrix v(n, n);       // reordered rotation accumulator
    std::vector<double> singular(n);
    std::vector<std::size_t> filled;
    std::vector<std::size_t> needs_fill;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        singular[k] = norms[src];
        for (std::size_t r = 0; r < n; ++r) v(r, k) = rot(r, src);
        if (norms[src] > 0.0) {
            const double inv = 1.0 / norms[src];
            for (std::size_t r = 0; r < b.rows; ++r) u(r, k) = b(r, src) * inv;
            filled.push_back(k);
        } else {
            needs_fill.push_back(k);
        }
    }
    for (std::size_t k : needs_fill) {
        detail::fill_orthonormal_column(u, filled, k);
        filled.push_back(k);
    }

    SvdResult out;
    if (transposed) {
        out.left = std::move(v);
        out.right = std::move(u);
    } else {
        out.left = std::move(u);
        out.right = std::move(v);
    }
    out.singular = std::move(singular);

    // Sign convention on the left factor; flip the matching right column too.
    for (std::size_t k = 0; k < out.left.cols; ++k) {
        std::size_t pivot = 0;
        double best = -1.0;
        for (std::size_t r = 0; r < out.left.rows; ++r) {
            const double mag = std::fabs(out.left(r, k));
            if (mag > best) {
                best = mag;
                pivot = r;
            }
        }
        if (out.left(pivot, k) < 0.0) {
            for (std::size_t r = 0; r < out.left.rows; ++r) out.left(r, k) = -out.left(r, k);
            for (std::size_t r = 0; r < out.right.rows; ++r) out.right(r, k) = -out.right(r, k);
        }
    }
    return out;
}

/// Largest singular value. Uses small_svd whenever one dimension fits its
/// kernel, power iteration on the Gram matrix otherwise.
inline double spectral_norm(const Matrix& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    if (!all_finite(m)) throw numeric_error("spectral_norm: non-finite entries");
    if (m.rows <= 64) return small_svd(m).singular[0];
    if (m.cols <= 64) return small_svd(transpose(m)).singular[0];

    // Power iteration, deterministic start, 1e-10 relative tolerance.
    std::vector<double> v(m.cols);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
    double vn = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= vn;
    double sigma = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        std::vector<double> w(m.rows, 0.0);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) w[r] += m(r, c) * v[c];
        std::vector<double> z(m.cols, 0.0);
        for (std::size_t r = 0; r < m.rows; ++r)
            for (std::size_t c = 0; c < m.cols; ++c) z[c] += m(r, c) * w[r];
        double zn = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
        if (zn == 0.0) return 0.0;
        for (double& x : z) x /= zn;
        double wn = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (std::fabs(wn - sigma) <= 1e-10 * std::max(wn, 1e-300)) return wn;
        sigma = wn;
        v = std::move(z);
    }
    return sigma;
}

} // namespace scef
