#pragma once

#include <cmath>
#include <cstdint>

#include "gdls/rng.hpp"
#include "gdls/types.hpp"

namespace gdls {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Steering vector a(f): entry k = exp(j 2π k f), k = 0..n-1. Entry 0 is
/// exactly 1; f is wrapped to [0, 1).
inline cvec steering_vector(double f, std::size_t n) {
    if (n < 1) throw InvalidArgument("steering_vector requires n >= 1");
    f = wrap_unit(f);
    cvec a(n);
    for (std::size_t k = 0; k < n; ++k)
        a[k] = std::polar(1.0, kTwoPi * static_cast<double>(k) * f);
    return a;
}

/// ∂a(f)/∂f: entry k = j 2π k exp(j 2π k f). Entry 0 is exactly 0.
inline cvec steering_derivative(double f, std::size_t n) {
    if (n < 1) throw InvalidArgument("steering_derivative requires n >= 1");
    f = wrap_unit(f);
    cvec d(n);
    for (std::size_t k = 0; k < n; ++k) {
        double kk = static_cast<double>(k);
        d[k] = cplx(0.0, kTwoPi * kk) * std::polar(1.0, kTwoPi * kk * f);
    }
    return d;
}

/// Fill column `col` of `m` with a(f); avoids allocation in hot loops.
inline void fill_steering_column(CMat& m, std::size_t col, double f) {
    f = wrap_unit(f);
    for (std::size_t k = 0; k < m.rows(); ++k)
        m(k, col) = std::polar(1.0, kTwoPi * static_cast<double>(k) * f);
}

/// A = [a(f_1) ... a(f_L)], N×L.
inline Manifold build_manifold(const FrequencyVector& f, std::size_t n) {
    if (n < 1) throw InvalidArgument("build_manifold requires n >= 1");
    Manifold m;
    m.columns.resize(n, f.size());
    for (std::size_t l = 0; l < f.size(); ++l) fill_steering_column(m.columns, l, f[l]);
    m.source_freqs = f;
    return m;
}

/// x = Σ c_l a(f_l) = A c.
inline Snapshot synthesize(const FrequencyVector& f, const ComplexAmplitudes& c, std::size_t n) {
    if (f.size() != c.size())
        throw InvalidArgument("synthesize: frequency and amplitude lengths differ");
    cvec x(n, cplx(0.0, 0.0));
    for (std::size_t l = 0; l < f.size(); ++l) {
        double fl = wrap_unit(f[l]);
        for (std::size_t k = 0; k < n; ++k)
            x[k] += c[l] * std::polar(1.0, kTwoPi * static_cast<double>(k) * fl);
    }
    return Snapshot(std::move(x));
}

/// Per-element complex noise variance for a requested SNR:
/// σ² = ||x||² / (N · 10^(snr/10)).
inline double noise_variance(const Snapshot& x, double snr_db) {
    double p = x.squared_norm();
    if (p == 0.0) throw InvalidArgument("add_noise: SNR is undefined for the zero signal");
    return p / (static_cast<double>(x.size()) * std::pow(10.0, snr_db / 10.0));
}

/// y = x + w with w i.i.d. circularly-symmetric complex Gaussian of per-element
/// variance σ² = ||x||²/(N·10^(snr/10)). Bit-reproducible for a given seed.
inline Snapshot add_noise(const Snapshot& x, double snr_db, std::uint64_t rng_seed) {
    if (!std::isfinite(snr_db)) throw InvalidArgument("add_noise: snr_db must be finite");
    double sigma2 = noise_variance(x, snr_db);
    Rng rng(rng_seed);
    cvec y(x.samples);
    for (cplx& v : y) v += rng.complex_normal(sigma2);
    return Snapshot(std::move(y));
}

/// DOA mapping f = (d/λ) cos θ, reduced mod 1. θ in [0, π].
inline double doa_to_frequency(double theta_rad, const UlaGeometry& g) {
    if (theta_rad < 0.0 || theta_rad > 3.14159265358979323846 + 1e-12)
        throw InvalidArgument("doa_to_frequency: theta must lie in [0, pi]");
    return wrap_unit(g.element_spacing_m / g.wavelength_m * std::cos(theta_rad));
}

/// TomoSAR mapping f = 2 b s / (λ R0), reduced mod 1.
inline double elevation_to_frequency(double s_m, const TomoGeometry& g) {
    return wrap_unit(2.0 * g.baseline_spacing_m * s_m / (g.wavelength_m * g.range_m));
}

/// Inverse mapping onto the unambiguous span [0, λR0/(2b)).
inline double frequency_to_elevation(double f, const TomoGeometry& g) {
    return wrap_unit(f) * g.ambiguity_span_m();
}

}  // namespace gdls
