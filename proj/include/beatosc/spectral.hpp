#pragma once

// =============================================================================
// Multi-frequency algebra on a common base-frequency grid
// =============================================================================
// Every periodic signal is represented by its complex Fourier coefficients
// on harmonics of f_base = gcd(f1, f2). Vectors and matrices share one fixed
// ordering: position p holds harmonic k = K - p, i.e. k runs +K ... 0 ... -K.
// =============================================================================

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace beatosc {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CDiagonal = Eigen::DiagonalMatrix<cplx, Eigen::Dynamic>;

struct FrequencyGrid {
    double f_base = 0.0;  // Hz
    int m1 = 0;           // f1 = m1 * f_base
    int m2 = 0;           // f2 = m2 * f_base
    int k_max = 0;        // state truncation order
    int beat_index = 0;   // |m1 - m2|

    double f1() const { return m1 * f_base; }
    double f2() const { return m2 * f_base; }
    double beat_frequency() const { return beat_index * f_base; }
    double base_period() const { return 1.0 / f_base; }
    int size() const { return 2 * k_max + 1; }
};

inline constexpr int default_m_max = 4000;

/// Finds the coarsest grid on which both frequencies are integer harmonics.
/// Frequencies are rounded to integer Hz; a rounding error above
/// `rationalization_tolerance` (relative) or a multiplier above `m_max`
/// raises RationalizationFailure.
FrequencyGrid build_frequency_grid(double f1, double f2,
                                   double rationalization_tolerance = 1e-9,
                                   int m_max = default_m_max);

class HarmonicVector {
public:
    HarmonicVector() = default;
    HarmonicVector(int k_max, double f_base);
    HarmonicVector(int k_max, double f_base, CVector coeffs);

    static HarmonicVector zeros(const FrequencyGrid& grid) { return {grid.k_max, grid.f_base}; }

    int k_max() const { return k_max_; }
    double f_base() const { return f_base_; }
    int size() const { return static_cast<int>(coeffs_.size()); }

    bool contains(int k) const { return k >= -k_max_ && k <= k_max_; }
    int position(int k) const { return k_max_ - k; }

    /// Coefficient of e^{i 2 pi k f_base t}; zero outside the stored range.
    cplx at(int k) const { return contains(k) ? coeffs_[position(k)] : cplx{}; }
    void set(int k, cplx value);

    const CVector& coeffs() const { return coeffs_; }
    CVector& coeffs() { return coeffs_; }

    /// Same signal truncated or zero-padded to another order.
    HarmonicVector resized(int k_max) const;

    double max_magnitude() const;
    /// Largest |c[-k] - conj(c[k])| relative to the largest coefficient.
    double symmetry_defect() const;

private:
    int k_max_ = 0;
    double f_base_ = 0.0;
    CVector coeffs_;
};

/// Diagonal Omega with i 2 pi k f_base at the position of harmonic k.
CDiagonal differentiation_matrix(const FrequencyGrid& grid, int k_max);

/// Toeplitz matrix T with T(r, c) = spectrum<k_r - k_c>, so that T * x is
/// the truncated harmonic vector of the time-domain product. The spectrum
/// should carry harmonics up to 2 * k_max; missing ones count as zero.
CMatrix convolution_matrix(const HarmonicVector& spectrum, int k_max);

inline constexpr double non_real_tolerance = 1e-9;

/// Reconstructs the real waveform at time t. Throws NonRealResult when the
/// imaginary residue exceeds 1e-9 of the largest coefficient.
double evaluate_waveform(const HarmonicVector& h, double t);

}  // namespace beatosc
