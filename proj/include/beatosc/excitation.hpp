#pragma once

#include "beatosc/spectral.hpp"

namespace beatosc {

/// Physical parameters of the two-stage receiver: an ideal sinusoidal coil
/// current feeding a half-wave rectifier, the DC-link capacitor, and a buck
/// converter with LC output filter and resistive load.
struct CircuitParams {
    double i_ls_amplitude = 1.4;  // A
    double f1 = 200e3;            // Hz, rectifier (coil current) frequency
    double f2 = 185e3;            // Hz, buck switching frequency
    double duty = 0.5;
    double c_dc = 1e-6;   // F
    double l = 33e-6;     // H
    double c_o = 50e-6;   // F
    double r_load = 6.0;  // ohm
    // Delay of the switch turn-on edge as a fraction of the switching period.
    // Zero aligns the first turn-on with the start of a conduction half-cycle.
    double switch_phase = 0.0;

    /// Throws ValidationError naming the first offending field.
    void validate() const;
    FrequencyGrid grid() const { return build_frequency_grid(f1, f2); }
};

/// I_Ls sin(2 pi f1 t): +/- i I_Ls / 2 at k = -/+ M1.
HarmonicVector coil_current_spectrum(const CircuitParams& params, const FrequencyGrid& grid);

/// Half-wave rectified coil current, kept to |k| <= 2 M1: DC I_Ls/pi,
/// -/+ i I_Ls/4 at +/-M1 and -I_Ls/(3 pi) at +/-2 M1.
HarmonicVector rectified_current_spectrum(const CircuitParams& params,
                                          const FrequencyGrid& grid);

/// Switching function of duty `duty`, returned to |k| <= 2 * grid.k_max so
/// that the convolution matrix of the state order is fully populated.
HarmonicVector switching_spectrum(double duty, const FrequencyGrid& grid,
                                  double switch_phase = 0.0);

/// Entrywise d/dD of switching_spectrum.
HarmonicVector switching_spectrum_derivative(double duty, const FrequencyGrid& grid,
                                             double switch_phase = 0.0);

}  // namespace beatosc
