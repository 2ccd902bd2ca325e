#pragma once

#include "beatosc/excitation.hpp"
#include "beatosc/spectral.hpp"

#include <string_view>

namespace beatosc {

enum class Signal { v_dc, i_l, v_o };

std::string_view signal_name(Signal s);
std::string_view signal_unit(Signal s);

/// State-space form dx/dt = A x + b of the harmonic model, with the state
/// stacked as [V_DC; I_L; V_o], each block of order grid.k_max.
struct HarmonicSystem {
    CMatrix a;
    CVector b;
    int block = 0;  // 2 K + 1
};

struct SteadyStateSolution {
    FrequencyGrid grid;
    HarmonicVector v_dc;
    HarmonicVector i_l;
    HarmonicVector v_o;
    double residual_norm = 0.0;  // ||A x + b|| / ||b||
    double condition_estimate = 0.0;

    const HarmonicVector& signal(Signal s) const;
};

HarmonicSystem assemble_system(const CircuitParams& params, const FrequencyGrid& grid);

inline constexpr double singular_condition_limit = 1e12;

/// x = -A^{-1} b by dense LU with partial pivoting. Throws SingularSystem when
/// the condition estimate exceeds 1e12.
SteadyStateSolution solve_steady_state(const CircuitParams& params, const FrequencyGrid& grid);
SteadyStateSolution solve_steady_state(const CircuitParams& params);

/// Real-signal amplitude of one line: |c0| at DC, 2|ck| otherwise.
double line_amplitude(const SteadyStateSolution& sol, Signal signal, int k);
double line_amplitude(const HarmonicVector& h, int k);

}  // namespace beatosc
