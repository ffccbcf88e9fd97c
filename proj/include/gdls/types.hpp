#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gdls {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Precondition / argument violations (length mismatch, zero signal, bad config).
struct InvalidArgument : Error {
    using Error::Error;
};

/// The manifold A is numerically rank deficient (near-duplicate frequencies).
struct IllConditionedManifold : Error {
    using Error::Error;
};

/// OMP cannot select another atom because the residual is numerically zero.
struct DegenerateResidual : Error {
    using Error::Error;
};

/// The Fisher information matrix is singular.
struct SingularFisher : Error {
    using Error::Error;
};

/// Bad run configuration (CLI / config file level).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed input file; message names the offending line/field.
struct ParseError : Error {
    using Error::Error;
};

/// Reduce a frequency to the unit torus [0, 1).
inline double wrap_unit(double f) {
    double w = f - std::floor(f);
    if (w >= 1.0) w -= 1.0;  // guards the f == -eps rounding case
    if (w < 0.0) w += 1.0;
    return w;
}

/// Circular distance on [0, 1): min(|a-b|, 1-|a-b|).
inline double circ_dist(double a, double b) {
    double d = std::fabs(wrap_unit(a) - wrap_unit(b));
    return std::min(d, 1.0 - d);
}

/// L normalized frequencies on the unit circle, wrapped to [0, 1) on construction.
class FrequencyVector {
public:
    FrequencyVector() = default;

    explicit FrequencyVector(std::vector<double> vals) : values_(std::move(vals)) {
        if (values_.empty())
            throw InvalidArgument("FrequencyVector requires at least one frequency");
        for (double& f : values_) f = wrap_unit(f);
    }

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    /// Smallest pairwise circular distance; +inf for a single frequency.
    double min_separation() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < values_.size(); ++i)
            for (std::size_t j = i + 1; j < values_.size(); ++j)
                m = std::min(m, circ_dist(values_[i], values_[j]));
        return m;
    }

private:
    std::vector<double> values_;
};

/// L complex amplitudes paired with a FrequencyVector of the same length.
struct ComplexAmplitudes {
    cvec values;

    ComplexAmplitudes() = default;
    explicit ComplexAmplitudes(cvec v) : values(std::move(v)) {}

    std::size_t size() const { return values.size(); }
    cplx operator[](std::size_t i) const { return values[i]; }
};

/// One N-sample complex measurement vector (N >= 2).
struct Snapshot {
    cvec samples;

    Snapshot() = default;
    explicit Snapshot(cvec s) : samples(std::move(s)) {
        if (samples.size() < 2)
            throw InvalidArgument("Snapshot requires at least 2 samples");
    }

    std::size_t size() const { return samples.size(); }
    cplx operator[](std::size_t i) const { return samples[i]; }

    double squared_norm() const {
        double s = 0.0;
        for (const cplx& v : samples) s += std::norm(v);
        return s;
    }
};

/// Dense complex matrix, row major. Sized once, then indexed.
class CMat {
public:
    CMat() = default;
    CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        data_.assign(rows * cols, cplx(0.0, 0.0));
    }

    void set_zero() { std::fill(data_.begin(), data_.end(), cplx(0.0, 0.0)); }

    cvec column(std::size_t j) const {
        cvec c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    cvec data_;
};

/// N×L matrix of steering vectors a(f_l), plus the frequencies it was built from.
struct Manifold {
    CMat columns;            // N×L
    FrequencyVector source_freqs;

    std::size_t n() const { return columns.rows(); }
    std::size_t l() const { return columns.cols(); }
};

/// Uniform linear array geometry for the DOA frequency mapping.
struct UlaGeometry {
    double element_spacing_m = 0.0;
    double wavelength_m = 0.0;
    int num_elements = 0;

    UlaGeometry(double spacing_m, double wavelength, int n_elems)
        : element_spacing_m(spacing_m), wavelength_m(wavelength), num_elements(n_elems) {
        if (element_spacing_m <= 0.0 || wavelength_m <= 0.0)
            throw InvalidArgument("UlaGeometry lengths must be positive");
    }
};

/// Multi-baseline TomoSAR acquisition geometry.
struct TomoGeometry {
    double wavelength_m = 0.0;
    double baseline_spacing_m = 0.0;  // b
    double range_m = 0.0;             // R0
    int num_baselines = 0;            // N
    double incident_angle_rad = 0.0;

    TomoGeometry() = default;
    TomoGeometry(double wavelength, double baseline_m, double range, int n_baselines,
                 double incident_rad)
        : wavelength_m(wavelength),
          baseline_spacing_m(baseline_m),
          range_m(range),
          num_baselines(n_baselines),
          incident_angle_rad(incident_rad) {
        if (wavelength_m <= 0.0 || baseline_spacing_m <= 0.0 || range_m <= 0.0)
            throw InvalidArgument("TomoGeometry lengths must be positive");
        if (num_baselines < 2) throw InvalidArgument("TomoGeometry requires num_baselines >= 2");
    }

    /// Unambiguous elevation extent before frequency wrap-around.
    double ambiguity_span_m() const {
        return wavelength_m * range_m / (2.0 * baseline_spacing_m);
    }
};

inline double squared_norm(const cvec& v) {
    double s = 0.0;
    for (const cplx& x : v) s += std::norm(x);
    return s;
}

/// Inner product conj(a)·b, conjugating the first argument.
inline cplx cdot(const cvec& a, const cvec& b) {
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

}  // namespace gdls
