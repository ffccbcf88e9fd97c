#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "gdls/types.hpp"

namespace gdls {

/// Widest matrix the stack-buffered reflector sweeps support.
inline constexpr std::size_t kQrMaxCols = 64;

/// Householder factors of an N×L complex matrix (N >= L): A = Q R with
/// Q = H_0 H_1 ... H_{L-1}. Reflector k lives in v(k..N-1, k) with real
/// scale beta[k] = 2 / ||v_k||²; beta[k] == 0 marks a null reflector.
struct QrFactors {
    CMat v;
    std::vector<double> beta;
    CMat r;
    mutable cvec wbuf;  // reflector-sweep workspace
    std::size_t n = 0;
    std::size_t l = 0;

    void resize(std::size_t rows, std::size_t cols) {
        if (n == rows && l == cols) return;  // buffers are fully rewritten per factorization
        n = rows;
        l = cols;
        v.resize(rows, cols);
        beta.assign(cols, 0.0);
        r.resize(cols, cols);
        wbuf.assign(cols, cplx(0.0, 0.0));
    }
};

/// Factor `a` (N×L, overwritten) into Householder form.
inline void qr_factor(CMat& a, QrFactors& f) {
    const std::size_t n = a.rows(), l = a.cols();
    if (l > kQrMaxCols) throw InvalidArgument("qr_factor: too many columns");
    f.resize(n, l);
    for (std::size_t k = 0; k < l; ++k) {
        // column norm below the diagonal
        double normx2 = 0.0;
        for (std::size_t i = k; i < n; ++i) normx2 += std::norm(a(i, k));
        double normx = std::sqrt(normx2);
        if (normx == 0.0) {
            f.beta[k] = 0.0;
            for (std::size_t j = k; j < l; ++j) f.r(k, j) = a(k, j);
            continue;
        }
        cplx x0 = a(k, k);
        double ax0 = std::abs(x0);
        cplx phase = (ax0 > 0.0) ? x0 / ax0 : cplx(1.0, 0.0);
        cplx alpha = -phase * normx;
        // v = x - alpha e1; v0 = phase (|x0| + normx), no cancellation
        f.v(k, k) = x0 - alpha;
        for (std::size_t i = k + 1; i < n; ++i) f.v(i, k) = a(i, k);
        double vnorm2 = 2.0 * normx * (normx + ax0);
        f.beta[k] = 2.0 / vnorm2;
        a(k, k) = alpha;
        for (std::size_t i = k + 1; i < n; ++i) a(i, k) = cplx(0.0, 0.0);
        // apply H_k to the remaining columns; row-major sweeps keep the inner
        // loop contiguous
        if (k + 1 < l) {
            cplx* w = f.wbuf.data();
            for (std::size_t j = k + 1; j < l; ++j) w[j] = cplx(0.0, 0.0);
            for (std::size_t i = k; i < n; ++i) {
                cplx vc = std::conj(f.v(i, k));
                for (std::size_t j = k + 1; j < l; ++j) w[j] += vc * a(i, j);
            }
            for (std::size_t j = k + 1; j < l; ++j) w[j] *= f.beta[k];
            for (std::size_t i = k; i < n; ++i) {
                cplx vi = f.v(i, k);
                for (std::size_t j = k + 1; j < l; ++j) a(i, j) -= w[j] * vi;
            }
        }
        for (std::size_t j = k; j < l; ++j) f.r(k, j) = a(k, j);
    }
    for (std::size_t k = 0; k < l; ++k)
        for (std::size_t j = 0; j < k; ++j) f.r(k, j) = cplx(0.0, 0.0);
}

/// Build the explicit thin Q (N×L, orthonormal columns) from the factors.
inline void qr_thin_q(const QrFactors& f, CMat& q) {
    const std::size_t n = f.n, l = f.l;
    if (q.rows() != n || q.cols() != l) q.resize(n, l);
    q.set_zero();
    for (std::size_t j = 0; j < l; ++j) q(j, j) = cplx(1.0, 0.0);
    for (std::size_t k = l; k-- > 0;) {
        if (f.beta[k] == 0.0) continue;
        cplx* w = f.wbuf.data();
        for (std::size_t j = 0; j < l; ++j) w[j] = cplx(0.0, 0.0);
        for (std::size_t i = k; i < n; ++i) {
            cplx vc = std::conj(f.v(i, k));
            for (std::size_t j = 0; j < l; ++j) w[j] += vc * q(i, j);
        }
        for (std::size_t j = 0; j < l; ++j) w[j] *= f.beta[k];
        for (std::size_t i = k; i < n; ++i) {
            cplx vi = f.v(i, k);
            for (std::size_t j = 0; j < l; ++j) q(i, j) -= w[j] * vi;
        }
    }
}

/// y <- (H_{L-1} ... H_0) y; afterwards y[0..L-1] holds thin-Qᴴ y.
inline void qr_apply_qh(const QrFactors& f, cvec& y) {
    for (std::size_t k = 0; k < f.l; ++k) {
        if (f.beta[k] == 0.0) continue;
        cplx w(0.0, 0.0);
        for (std::size_t i = k; i < f.n; ++i) w += std::conj(f.v(i, k)) * y[i];
        w *= f.beta[k];
        for (std::size_t i = k; i < f.n; ++i) y[i] -= w * f.v(i, k);
    }
}

/// Back substitution for the upper-triangular system R x = b (length l).
inline void solve_upper(const CMat& r, const cplx* b, cplx* x, std::size_t l) {
    for (std::size_t k = l; k-- > 0;) {
        cplx s = b[k];
        for (std::size_t j = k + 1; j < l; ++j) s -= r(k, j) * x[j];
        cplx d = r(k, k);
        if (std::abs(d) == 0.0) throw IllConditionedManifold("singular triangular factor");
        x[k] = s / d;
    }
}

/// Singular values of a small dense complex matrix via one-sided Jacobi
/// (Hestenes): columns are rotated pairwise until mutually orthogonal, the
/// singular values are the final column norms. Destroys m. Descending order.
inline void singular_values_inplace(CMat& m, std::vector<double>& sv) {
    const std::size_t rows = m.rows(), cols = m.cols();
    const int max_sweeps = 30;
    const double tol = 1e-14;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = i + 1; j < cols; ++j) {
                double aa = 0.0, bb = 0.0;
                cplx g(0.0, 0.0);
                for (std::size_t k = 0; k < rows; ++k) {
                    aa += std::norm(m(k, i));
                    bb += std::norm(m(k, j));
                    g += std::conj(m(k, i)) * m(k, j);
                }
                double mg = std::abs(g);
                if (mg <= tol * std::sqrt(aa * bb) || mg == 0.0) continue;
                off = std::max(off, mg / std::sqrt(std::max(aa * bb, 1e-300)));
                cplx u = g / mg;
                double zeta = (bb - aa) / (2.0 * mg);
                double t = ((zeta >= 0.0) ? 1.0 : -1.0) /
                           (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (std::size_t k = 0; k < rows; ++k) {
                    cplx ci = m(k, i), cj = m(k, j);
                    m(k, i) = c * ci - s * std::conj(u) * cj;
                    m(k, j) = s * u * ci + c * cj;
                }
            }
        }
        if (off <= tol) break;
    }
    sv.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < rows; ++k) s += std::norm(m(k, j));
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
}

inline std::vector<double> singular_values(CMat m) {
    std::vector<double> sv;
    singular_values_inplace(m, sv);
    return sv;
}

/// Invert a small real symmetric positive-definite matrix (row-major, dim×dim)
/// in place via Cholesky. Returns false when the matrix is not numerically SPD.
inline bool spd_invert(std::vector<double>& m, std::size_t dim) {
    std::vector<double> chol(dim * dim, 0.0);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < dim; ++i) max_diag = std::max(max_diag, std::fabs(m[i * dim + i]));
    if (max_diag == 0.0) return false;
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i * dim + j];
            for (std::size_t k = 0; k < j; ++k) s -= chol[i * dim + k] * chol[j * dim + k];
            if (i == j) {
                if (s <= 1e-14 * max_diag) return false;
                chol[i * dim + i] = std::sqrt(s);
            } else {
                chol[i * dim + j] = s / chol[j * dim + j];
            }
        }
    }
    // solve L Lᵀ X = I column by column
    std::vector<double> col(dim), inv(dim * dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t i = 0; i < dim; ++i) {
            double s = (i == c) ? 1.0 : 0.0;
            for (std::size_t k = 0; k < i; ++k) s -= chol[i * dim + k] * col[k];
            col[i] = s / chol[i * dim + i];
        }
        for (std::size_t i = dim; i-- > 0;) {
            double s = col[i];
            for (std::size_t k = i + 1; k < dim; ++k) s -= chol[k * dim + i] * col[k];
            col[i] = s / chol[i * dim + i];
        }
        for (std::size_t i = 0; i < dim; ++i) inv[i * dim + c] = col[i];
    }
    m.swap(inv);
    return true;
}

}  // namespace gdls
