#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace gdls {

/// splitmix64 finalizer; used to derive independent stream seeds from
/// (master, point, trial) coordinates so results do not depend on scheduling.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(master ^ mix_seed(a ^ mix_seed(b)));
}

/// Deterministic random source. mt19937_64 has a standard-specified output
/// sequence; the uniform/normal mappings are implemented here rather than with
/// std:: distributions (whose sequences are implementation-defined), so the
/// same seed produces the same bytes on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly-symmetric complex Gaussian with total variance sigma2
    /// (real and imaginary parts each N(0, sigma2/2)).
    std::complex<double> complex_normal(double sigma2) {
        double s = std::sqrt(sigma2 / 2.0);
        double re = s * normal();
        double im = s * normal();
        return {re, im};
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gdls
