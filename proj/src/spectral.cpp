#include "beatosc/spectral.hpp"

#include "beatosc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace beatosc {

namespace {

std::int64_t to_integer_hz(double f, double tolerance, const char* name) {
    if (!(f > 0.0) || !std::isfinite(f)) {
        throw ValidationError(std::string(name) + " must be a positive finite frequency");
    }
    const double rounded = std::round(f);
    if (std::abs(rounded - f) > tolerance * f) {
        throw RationalizationFailure(std::string(name) + " = " + std::to_string(f) +
                                     " Hz is not an integer frequency within tolerance");
    }
    return static_cast<std::int64_t>(rounded);
}

}  // namespace

FrequencyGrid build_frequency_grid(double f1, double f2, double rationalization_tolerance,
                                   int m_max) {
    const std::int64_t n1 = to_integer_hz(f1, rationalization_tolerance, "f1");
    const std::int64_t n2 = to_integer_hz(f2, rationalization_tolerance, "f2");
    const std::int64_t g = std::gcd(n1, n2);

    FrequencyGrid grid;
    grid.f_base = static_cast<double>(g);
    const std::int64_t m1 = n1 / g;
    const std::int64_t m2 = n2 / g;
    if (std::max(m1, m2) > m_max) {
        throw RationalizationFailure("f1 = " + std::to_string(n1) + " Hz and f2 = " +
                                     std::to_string(n2) + " Hz need a multiplier of " +
                                     std::to_string(std::max(m1, m2)) + " > " +
                                     std::to_string(m_max));
    }
    grid.m1 = static_cast<int>(m1);
    grid.m2 = static_cast<int>(m2);
    grid.k_max = 2 * std::max(grid.m1, grid.m2);
    grid.beat_index = std::abs(grid.m1 - grid.m2);
    return grid;
}

HarmonicVector::HarmonicVector(int k_max, double f_base)
    : k_max_(k_max), f_base_(f_base), coeffs_(CVector::Zero(2 * k_max + 1)) {}

HarmonicVector::HarmonicVector(int k_max, double f_base, CVector coeffs)
    : k_max_(k_max), f_base_(f_base), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != 2 * k_max + 1) {
        throw ValidationError("harmonic vector of order " + std::to_string(k_max) +
                              " needs " + std::to_string(2 * k_max + 1) + " coefficients");
    }
}

void HarmonicVector::set(int k, cplx value) {
    if (!contains(k)) {
        throw IndexOutOfGrid("harmonic " + std::to_string(k) + " outside |k| <= " +
                             std::to_string(k_max_));
    }
    coeffs_[position(k)] = value;
}

HarmonicVector HarmonicVector::resized(int k_max) const {
    HarmonicVector out(k_max, f_base_);
    const int common = std::min(k_max, k_max_);
    for (int k = -common; k <= common; ++k) {
        out.coeffs_[out.position(k)] = at(k);
    }
    return out;
}

double HarmonicVector::max_magnitude() const {
    return coeffs_.size() == 0 ? 0.0 : coeffs_.cwiseAbs().maxCoeff();
}

double HarmonicVector::symmetry_defect() const {
    const double scale = max_magnitude();
    if (scale == 0.0) {
        return 0.0;
    }
    double worst = 0.0;
    for (int k = 0; k <= k_max_; ++k) {
        worst = std::max(worst, std::abs(at(-k) - std::conj(at(k))));
    }
    return worst / scale;
}

CDiagonal differentiation_matrix(const FrequencyGrid& grid, int k_max) {
    CDiagonal omega(2 * k_max + 1);
    const double w_base = 2.0 * std::numbers::pi * grid.f_base;
    for (int p = 0; p < 2 * k_max + 1; ++p) {
        const int k = k_max - p;
        omega.diagonal()[p] = cplx(0.0, w_base * k);
    }
    return omega;
}

CMatrix convolution_matrix(const HarmonicVector& spectrum, int k_max) {
    const int n = 2 * k_max + 1;
    CMatrix t(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            // k_r - k_c = (K - r) - (K - c) = c - r
            t(r, c) = spectrum.at(c - r);
        }
    }
    return t;
}

double evaluate_waveform(const HarmonicVector& h, double t) {
    cplx sum{};
    for (int k = -h.k_max(); k <= h.k_max(); ++k) {
        const cplx c = h.at(k);
        if (c == cplx{}) {
            continue;
        }
        // Reduce the phase in cycles first so large k * f * t stays accurate.
        const double cycles = k * h.f_base() * t;
        const double phase = 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
        sum += c * std::polar(1.0, phase);
    }
    const double scale = h.max_magnitude();
    if (std::abs(sum.imag()) > non_real_tolerance * scale) {
        throw NonRealResult("imaginary residue " + std::to_string(sum.imag()) +
                            " exceeds tolerance; coefficients are not conjugate-symmetric");
    }
    return sum.real();
}

}  // namespace beatosc
