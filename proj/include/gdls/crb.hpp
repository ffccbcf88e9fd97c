#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gdls/linalg.hpp"
#include "gdls/model.hpp"
#include "gdls/types.hpp"

namespace gdls {

/// Cramér-Rao bound on the frequency estimates under the deterministic signal
/// model y ~ CN(A(f)c, σ²I) with σ² set by the requested SNR.
///
/// The Fisher information of the real parameter vector η = [f; Re c; Im c] is
/// F = (2/σ²) Re(Jᴴ J) with Jacobian columns ∂μ/∂f_l = c_l a'(f_l),
/// ∂μ/∂Re c_l = a(f_l) and ∂μ/∂Im c_l = j a(f_l). Returns the first L diagonal
/// entries of F⁻¹, i.e. the variance bounds of the frequencies with the
/// amplitudes treated as jointly unknown.
inline std::vector<double> crb_frequencies(const FrequencyVector& f, const ComplexAmplitudes& c,
                                           std::size_t n, double snr_db) {
    const std::size_t l = f.size();
    if (c.size() != l) throw InvalidArgument("crb_frequencies: length mismatch");
    if (n < 2) throw InvalidArgument("crb_frequencies: need n >= 2");

    Snapshot x = synthesize(f, c, n);
    const double sigma2 = noise_variance(x, snr_db);

    const std::size_t dim = 3 * l;
    CMat jac(n, dim);
    for (std::size_t i = 0; i < l; ++i) {
        cvec a = steering_vector(f[i], n);
        cvec d = steering_derivative(f[i], n);
        for (std::size_t k = 0; k < n; ++k) {
            jac(k, i) = c[i] * d[k];
            jac(k, l + i) = a[k];
            jac(k, 2 * l + i) = cplx(0.0, 1.0) * a[k];
        }
    }

    std::vector<double> fisher(dim * dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            cplx s(0.0, 0.0);
            for (std::size_t k = 0; k < n; ++k) s += std::conj(jac(k, i)) * jac(k, j);
            fisher[i * dim + j] = (2.0 / sigma2) * s.real();
        }
    }

    if (!spd_invert(fisher, dim))
        throw SingularFisher("crb_frequencies: Fisher information matrix is singular");

    std::vector<double> bounds(l);
    for (std::size_t i = 0; i < l; ++i) bounds[i] = fisher[i * dim + i];
    return bounds;
}

/// Mean of the per-frequency CRB diagonal, the scalar the MSE curves compare to.
inline double crb_mean(const FrequencyVector& f, const ComplexAmplitudes& c, std::size_t n,
                       double snr_db) {
    std::vector<double> b = crb_frequencies(f, c, n, snr_db);
    double s = 0.0;
    for (double v : b) s += v;
    return s / static_cast<double>(b.size());
}

}  // namespace gdls
