#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gdls/linalg.hpp"
#include "gdls/model.hpp"
#include "gdls/types.hpp"

namespace gdls {

/// Relative singular-value threshold below which a manifold is rejected.
inline constexpr double kConditionThreshold = 1e-10;

/// One evaluation of the projection-residual objective
///   T(f) = || y - A A⁺ y ||²
/// together with its exact frequency gradient, the least-squares amplitudes
/// ĉ = A⁺ y and the residual y - A ĉ.
struct ObjectiveEval {
    double cost = 0.0;
    std::vector<double> gradient;  // dT/df_l, one real entry per frequency
    ComplexAmplitudes amplitudes;
    Snapshot residual;
};

/// Reusable evaluation workspace for a fixed problem size (N, L). All buffers
/// are allocated once so repeated evaluations inside a descent loop or a
/// Monte-Carlo sweep do not touch the allocator.
///
/// The gradient is computed from the projector form: with P = A A⁺ and
/// G_l = (I - P) (∂A/∂f_l) A⁺, the derivative of T is
///   dT/df_l = -(yᴴ G_l y + yᴴ G_lᴴ y).
/// The two halves of the bracket are evaluated by independent routes (one
/// through the explicit projector, one through the residual) and their sum is
/// checked to be numerically real before the imaginary part is discarded.
class Evaluator {
public:
    Evaluator(std::size_t n, std::size_t l) : n_(n), l_(l) {
        if (n < 2) throw InvalidArgument("Evaluator requires N >= 2");
        if (l < 1) throw InvalidArgument("Evaluator requires L >= 1");
        if (l > n - 1)
            throw InvalidArgument("sparsity bound violated: L must be <= N-1");
        a_.resize(n, l);
        q_.resize(n, l);
        p_.resize(n, n);
        d_.resize(n);
        u_.resize(n);
        w_.resize(n);
        yh_.resize(n);
        py_.resize(n);
        amps_.resize(l);
        rinv_.resize(l);
        out_.gradient.resize(l);
        out_.residual.samples.resize(n);
    }

    std::size_t n() const { return n_; }
    std::size_t l() const { return l_; }

    /// Residual energy only; used for candidate-step screening. The residual
    /// energy is taken from the tail of the orthogonally transformed
    /// measurement, which is free of cancellation even at the noise floor.
    double cost(const Snapshot& y, const FrequencyVector& f) {
        factor(y, f);
        yh_ = y.samples;
        qr_apply_qh(qr_, yh_);
        double c = 0.0;
        for (std::size_t i = l_; i < n_; ++i) c += std::norm(yh_[i]);
        return c;
    }

    /// Full evaluation: cost, gradient, amplitudes, residual.
    const ObjectiveEval& evaluate(const Snapshot& y, const FrequencyVector& f) {
        factor(y, f);
        qr_thin_q(qr_, q_);

        // thin-Qᴴ y by contiguous row sweeps, then the triangular solve
        for (std::size_t j = 0; j < l_; ++j) yh_[j] = cplx(0.0, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            cplx yi = y.samples[i];
            for (std::size_t j = 0; j < l_; ++j) yh_[j] += std::conj(q_(i, j)) * yi;
        }
        solve_upper(qr_.r, yh_.data(), amps_.data(), l_);

        // explicit projector P = Q Qᴴ (Hermitian, build upper half and mirror)
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i; j < n_; ++j) {
                cplx s(0.0, 0.0);
                for (std::size_t k = 0; k < l_; ++k) s += q_(i, k) * std::conj(q_(j, k));
                p_(i, j) = s;
                p_(j, i) = std::conj(s);
            }
        }

        apply_projector(y.samples, py_);
        double yy = 0.0, proj = 0.0, cost = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            out_.residual.samples[i] = y.samples[i] - py_[i];
            yy += std::norm(y.samples[i]);
            proj += (std::conj(y.samples[i]) * py_[i]).real();
            cost += std::norm(out_.residual.samples[i]);
        }
        // the two objective forms ||y - Py||² and ||y||² - yᴴPy must agree
        if (std::fabs(cost + proj - yy) > 1e-10 * yy + 1e-300)
            throw Error("objective identity violated: residual and projection forms disagree");
        out_.cost = cost;

        const double ynorm = std::sqrt(yy);
        for (std::size_t l = 0; l < l_; ++l) {
            fill_derivative(f[l]);
            for (std::size_t i = 0; i < n_; ++i) u_[i] = amps_[l] * d_[i];
            apply_projector(u_, w_);
            cplx qh(0.0, 0.0);  // yᴴ (I-P) (∂A/∂f_l) ĉ  via the projector route
            for (std::size_t i = 0; i < n_; ++i)
                qh += std::conj(y.samples[i]) * (u_[i] - w_[i]);
            cplx ph(0.0, 0.0);  // conj(ĉ_l) · d_lᴴ r        via the residual route
            double d2 = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                ph += std::conj(d_[i]) * out_.residual.samples[i];
                d2 += std::norm(d_[i]);
            }
            ph *= std::conj(amps_[l]);
            cplx s = qh + ph;
            // the two routes must agree up to rounding of the bilinear-form
            // operands (scale y·ĉ·d), even where massive cancellation makes
            // the value itself tiny
            double op_scale = std::max(1.0, ynorm * std::abs(amps_[l]) * std::sqrt(d2));
            if (std::fabs(s.imag()) > 1e-9 * std::fabs(s.real()) + 1e-12 * op_scale)
                throw Error("gradient realness check failed");
            out_.gradient[l] = -s.real();
        }

        out_.amplitudes.values = amps_;
        return out_;
    }

private:
    void factor(const Snapshot& y, const FrequencyVector& f) {
        if (y.size() != n_) throw InvalidArgument("Evaluator: snapshot length mismatch");
        if (f.size() != l_) throw InvalidArgument("Evaluator: frequency count mismatch");
        // steering entries by phase recurrence: one trig call per column, the
        // rest are complex multiplies (drift ~ N·eps, far below the gradient
        // and identity tolerances)
        for (std::size_t l = 0; l < l_; ++l) {
            cplx z = std::polar(1.0, kTwoPi * wrap_unit(f[l]));
            cplx acc(1.0, 0.0);
            for (std::size_t k = 0; k < n_; ++k) {
                a_(k, l) = acc;
                acc *= z;
            }
        }
        qr_factor(a_, qr_);
        // cheap rigorous screen first: kappa_2 <= ||R||_F ||R^-1||_F, so a
        // small Frobenius condition number proves the manifold healthy; only
        // borderline cases pay for exact singular values
        if (!frobenius_condition_ok()) {
            rwork_ = qr_.r;
            singular_values_inplace(rwork_, sv_);
            if (sv_.front() == 0.0 || sv_.back() < kConditionThreshold * sv_.front())
                throw IllConditionedManifold("manifold is numerically rank deficient");
        }
    }

    bool frobenius_condition_ok() {
        const CMat& r = qr_.r;
        double rf = 0.0;
        for (std::size_t i = 0; i < l_; ++i)
            for (std::size_t j = i; j < l_; ++j) rf += std::norm(r(i, j));
        // invert the triangular factor column by column
        double inv_f = 0.0;
        for (std::size_t c = 0; c < l_; ++c) {
            if (std::abs(r(c, c)) == 0.0) return false;
            for (std::size_t i = c + 1; i-- > 0;) {
                cplx s = (i == c) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
                for (std::size_t j = i + 1; j <= c; ++j) s -= r(i, j) * rinv_[j];
                rinv_[i] = s / r(i, i);
            }
            for (std::size_t i = 0; i <= c; ++i) inv_f += std::norm(rinv_[i]);
        }
        return rf * inv_f < 1e18;  // kappa_F < 1e9, an order under the 1e-10 sigma threshold
    }

    void fill_derivative(double f) {
        cplx z = std::polar(1.0, kTwoPi * wrap_unit(f));
        cplx acc(1.0, 0.0);
        for (std::size_t k = 0; k < n_; ++k) {
            d_[k] = cplx(0.0, kTwoPi * static_cast<double>(k)) * acc;
            acc *= z;
        }
    }

    void apply_projector(const cvec& x, cvec& out) {
        for (std::size_t i = 0; i < n_; ++i) {
            cplx s(0.0, 0.0);
            for (std::size_t j = 0; j < n_; ++j) s += p_(i, j) * x[j];
            out[i] = s;
        }
    }

    std::size_t n_, l_;
    CMat a_, q_, p_, rwork_;
    QrFactors qr_;
    std::vector<double> sv_;
    cvec d_, u_, w_, yh_, py_, amps_, rinv_;
    ObjectiveEval out_;
};

/// One-shot evaluation; prefer a persistent Evaluator inside loops.
inline ObjectiveEval evaluate(const Snapshot& y, const FrequencyVector& f) {
    Evaluator ev(y.size(), f.size());
    return ev.evaluate(y, f);
}

/// Least-squares amplitudes ĉ minimizing ||y - A c||².
inline ComplexAmplitudes ls_amplitudes(const Snapshot& y, const Manifold& a) {
    const std::size_t n = a.n(), l = a.l();
    if (y.size() != n) throw InvalidArgument("ls_amplitudes: dimension mismatch");
    if (l > n - 1) throw InvalidArgument("sparsity bound violated: L must be <= N-1");
    CMat work = a.columns;
    QrFactors qr;
    qr_factor(work, qr);
    std::vector<double> sv = singular_values(qr.r);
    if (sv.front() == 0.0 || sv.back() < kConditionThreshold * sv.front())
        throw IllConditionedManifold("manifold is numerically rank deficient");
    cvec yh = y.samples;
    qr_apply_qh(qr, yh);
    cvec c(l);
    solve_upper(qr.r, yh.data(), c.data(), l);
    return ComplexAmplitudes(std::move(c));
}

/// sin(n x) / sin(x) with the removable singularity at x ≡ 0 (mod π) filled
/// by its limit value ±n.
inline double sad(double x, int n) {
    if (n < 1) throw InvalidArgument("sad requires n >= 1");
    double s = std::sin(x);
    if (std::fabs(s) < 1e-6) return n * std::cos(n * x) / std::cos(x);
    return std::sin(n * x) / s;
}

/// Radius of the convex region around each true frequency: 1/(n-1). Equals the
/// Rayleigh resolution of an n-sample aperture.
inline double basin_radius(std::size_t n) {
    if (n < 2) throw InvalidArgument("basin_radius requires n >= 2");
    return 1.0 / static_cast<double>(n - 1);
}

}  // namespace gdls
