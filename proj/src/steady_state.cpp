#include "beatosc/steady_state.hpp"

#include "beatosc/errors.hpp"

#include <cmath>
#include <string>

namespace beatosc {

std::string_view signal_name(Signal s) {
    switch (s) {
        case Signal::v_dc: return "v_dc";
        case Signal::i_l: return "i_l";
        case Signal::v_o: return "v_o";
    }
    return "?";
}

std::string_view signal_unit(Signal s) { return s == Signal::i_l ? "A" : "V"; }

const HarmonicVector& SteadyStateSolution::signal(Signal s) const {
    switch (s) {
        case Signal::v_dc: return v_dc;
        case Signal::i_l: return i_l;
        case Signal::v_o: return v_o;
    }
    return v_o;
}

HarmonicSystem assemble_system(const CircuitParams& params, const FrequencyGrid& grid) {
    const int order = grid.k_max;
    const int n = 2 * order + 1;

    const CMatrix s_sw =
        convolution_matrix(switching_spectrum(params.duty, grid, params.switch_phase), order);
    const CDiagonal omega = differentiation_matrix(grid, order);
    const CMatrix identity = CMatrix::Identity(n, n);

    HarmonicSystem sys;
    sys.block = n;
    sys.a = CMatrix::Zero(3 * n, 3 * n);
    // Row blocks follow the three capacitor/inductor balances:
    //   C_DC dV/dt = I_r - S I_L,  L dI/dt = S V - V_o,  C_o dV_o/dt = I_L - V_o/R
    sys.a.block(0, 0, n, n).diagonal() = -omega.diagonal();
    sys.a.block(0, n, n, n) = -s_sw / params.c_dc;

    sys.a.block(n, 0, n, n) = s_sw / params.l;
    sys.a.block(n, n, n, n).diagonal() = -omega.diagonal();
    sys.a.block(n, 2 * n, n, n) = -identity / params.l;

    sys.a.block(2 * n, n, n, n) = identity / params.c_o;
    sys.a.block(2 * n, 2 * n, n, n).diagonal() =
        -omega.diagonal().array() - 1.0 / (params.r_load * params.c_o);

    sys.b = CVector::Zero(3 * n);
    sys.b.head(n) = rectified_current_spectrum(params, grid).coeffs() / params.c_dc;
    return sys;
}

SteadyStateSolution solve_steady_state(const CircuitParams& params, const FrequencyGrid& grid) {
    const HarmonicSystem sys = assemble_system(params, grid);
    const Eigen::PartialPivLU<CMatrix> lu(sys.a);
    const double rcond = lu.rcond();
    if (!(rcond * singular_condition_limit > 1.0)) {
        throw SingularSystem("harmonic system is numerically singular (condition estimate " +
                             std::to_string(1.0 / rcond) + "); check circuit.duty");
    }
    const CVector x = -lu.solve(sys.b);

    SteadyStateSolution sol;
    sol.grid = grid;
    sol.condition_estimate = 1.0 / rcond;
    const int n = sys.block;
    sol.v_dc = HarmonicVector(grid.k_max, grid.f_base, x.segment(0, n));
    sol.i_l = HarmonicVector(grid.k_max, grid.f_base, x.segment(n, n));
    sol.v_o = HarmonicVector(grid.k_max, grid.f_base, x.segment(2 * n, n));
    const double b_norm = sys.b.norm();
    sol.residual_norm = b_norm > 0.0 ? (sys.a * x + sys.b).norm() / b_norm : 0.0;
    return sol;
}

SteadyStateSolution solve_steady_state(const CircuitParams& params) {
    params.validate();
    return solve_steady_state(params, params.grid());
}

double line_amplitude(const HarmonicVector& h, int k) {
    if (!h.contains(k)) {
        throw IndexOutOfGrid("harmonic " + std::to_string(k) + " outside |k| <= " +
                             std::to_string(h.k_max()));
    }
    const double magnitude = std::abs(h.at(k));
    return k == 0 ? magnitude : 2.0 * magnitude;
}

double line_amplitude(const SteadyStateSolution& sol, Signal signal, int k) {
    return line_amplitude(sol.signal(signal), k);
}

}  // namespace beatosc
