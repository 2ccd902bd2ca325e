#include "beatosc/excitation.hpp"

#include "beatosc/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace beatosc {

namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ValidationError(std::string("circuit.") + field + " must be positive, got " +
                              std::to_string(value));
    }
}

// Turn-on delay of phase * T2 multiplies harmonic k by exp(-i 2 pi k phase / M2).
cplx phase_factor(int k, int m2, double switch_phase) {
    return std::polar(1.0, -2.0 * std::numbers::pi * switch_phase * k / m2);
}

}  // namespace

void CircuitParams::validate() const {
    if (!(i_ls_amplitude >= 0.0) || !std::isfinite(i_ls_amplitude)) {
        throw ValidationError("circuit.i_ls_amplitude must be non-negative");
    }
    require_positive(f1, "f1");
    require_positive(f2, "f2");
    require_positive(c_dc, "c_dc");
    require_positive(l, "l");
    require_positive(c_o, "c_o");
    require_positive(r_load, "r_load");
    if (!(duty > 0.0 && duty < 1.0)) {
        throw ValidationError("circuit.duty must lie in (0, 1), got " + std::to_string(duty));
    }
    if (!(switch_phase >= 0.0 && switch_phase < 1.0)) {
        throw ValidationError("circuit.switch_phase must lie in [0, 1)");
    }
}

HarmonicVector coil_current_spectrum(const CircuitParams& params, const FrequencyGrid& grid) {
    HarmonicVector h = HarmonicVector::zeros(grid);
    const double i = params.i_ls_amplitude;
    h.set(grid.m1, cplx(0.0, -0.5 * i));
    h.set(-grid.m1, cplx(0.0, 0.5 * i));
    return h;
}

HarmonicVector rectified_current_spectrum(const CircuitParams& params,
                                          const FrequencyGrid& grid) {
    HarmonicVector h = HarmonicVector::zeros(grid);
    const double i = params.i_ls_amplitude;
    const double pi = std::numbers::pi;
    h.set(0, i / pi);
    h.set(grid.m1, cplx(0.0, -0.25 * i));
    h.set(-grid.m1, cplx(0.0, 0.25 * i));
    h.set(2 * grid.m1, -i / (3.0 * pi));
    h.set(-2 * grid.m1, -i / (3.0 * pi));
    return h;
}

HarmonicVector switching_spectrum(double duty, const FrequencyGrid& grid, double switch_phase) {
    const int order = 2 * grid.k_max;
    HarmonicVector h(order, grid.f_base);
    h.set(0, duty);
    const double pi = std::numbers::pi;
    for (int k = grid.m2; k <= order; k += grid.m2) {
        const int n = k / grid.m2;
        // M2 / (2 k pi i) = 1 / (2 n pi i)
        const cplx line = (1.0 - std::polar(1.0, -2.0 * pi * n * duty)) /
                          cplx(0.0, 2.0 * pi * n) * phase_factor(k, grid.m2, switch_phase);
        h.set(k, line);
        h.set(-k, std::conj(line));
    }
    return h;
}

HarmonicVector switching_spectrum_derivative(double duty, const FrequencyGrid& grid,
                                             double switch_phase) {
    const int order = 2 * grid.k_max;
    HarmonicVector h(order, grid.f_base);
    h.set(0, 1.0);
    const double pi = std::numbers::pi;
    for (int k = grid.m2; k <= order; k += grid.m2) {
        const int n = k / grid.m2;
        const cplx line = std::polar(1.0, -2.0 * pi * n * duty) *
                          phase_factor(k, grid.m2, switch_phase);
        h.set(k, line);
        h.set(-k, std::conj(line));
    }
    return h;
}

}  // namespace beatosc
