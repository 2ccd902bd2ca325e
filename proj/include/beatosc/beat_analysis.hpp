#pragma once

#include "beatosc/excitation.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace beatosc {

struct BeatComponents {
    cplx v_dc;  // V_DC<M1 - M2>
    cplx v_o;   // V_o<M1 - M2>
    cplx num_v_dc;
    cplx num_v_o;
    cplx den;
    bool near_singular = false;  // |Den| below 1e-9 of the sum of its term magnitudes
};

/// Reduced-order closed form of the beat line, evaluated at beat frequency f_b
/// with f1, D, I_Ls, C_DC, L, C_o and R taken from `params` (f2 is ignored).
BeatComponents beat_component_closed_form(const CircuitParams& params, double f_b);

/// Beat frequency minimizing |Den(f_b)|: logarithmic scan over [10 Hz, f1/2]
/// refined by golden-section search. Throws NoResonance when the scan minimum
/// sits on the band edge.
double critical_frequency(const CircuitParams& params);

inline constexpr int critical_scan_points_per_decade = 200;

/// Averaged DC output I_Ls R / (pi D), used to normalize the closed form.
double averaged_output_voltage(const CircuitParams& params);

/// Sets a circuit field by its config name (i_ls_amplitude, f1, f2, duty, c_dc,
/// l, c_o, r_load, switch_phase). Throws ValidationError for unknown names.
void set_circuit_parameter(CircuitParams& params, const std::string& name, double value);

struct SweepOptions {
    std::vector<double> f_b_hz;
    // Each (name, values) pair adds one configuration per value; with no
    // overrides a single baseline configuration is swept.
    std::vector<std::pair<std::string, std::vector<double>>> overrides;
    bool full_solve = false;  // also solve the harmonic model with f2 = f1 - f_b
    int full_solve_m_max = 100;
};

struct SweepPoint {
    double f_b_hz = 0.0;
    std::string param_name;
    double param_value = 0.0;
    double v_dc_beat = 0.0;  // |V_DC<beat>| from the closed form, V
    double v_o_beat = 0.0;   // |V_o<beat>| from the closed form, V
    double v_o_beat_norm_db = 0.0;
    bool near_singular = false;
    // Full harmonic solve, when requested: line amplitudes at the beat index.
    std::optional<double> full_v_dc_beat;
    std::optional<double> full_v_o_beat;
    std::string full_solve_note;  // why the full solve was skipped or failed
};

struct SweepConfiguration {
    std::string param_name;
    double param_value = 0.0;
    std::optional<double> f_cr_hz;
    std::string f_cr_note;
};

struct SweepResult {
    std::vector<double> axis;  // f_b values, Hz
    std::vector<SweepConfiguration> configurations;
    std::vector<SweepPoint> points;  // configuration-major, then axis order
};

SweepResult sweep_beat(const CircuitParams& params, const SweepOptions& options);

/// CSV: f_b_hz,param_name,param_value,v_dc_beat_V,v_o_beat_V,v_o_beat_norm_db
/// (plus the full-solve columns when they were computed).
void write_sweep_csv(std::ostream& out, const SweepResult& result);

struct DesignSpec {
    double x_dc = 0.05;   // allowed beat amplitude as a fraction of V_DC<0>
    double v_dc0 = 10.56; // V

    void validate() const;
};

struct CapacitorDesign {
    double c_dc_min = 0.0;
    double c_dc_charge_term = 0.0;     // I_Ls / (2 x_DC V_DC<0> pi f1)
    double c_dc_switching_term = 0.0;  // D / (2 x_DC R f2)
    double c_o_min = 0.0;              // 1 / (4 pi^2 f_b^2 L)
    bool zero_beat_frequency = false;  // f1 == f2; c_o_min is then 0
};

CapacitorDesign design_capacitors(const CircuitParams& params, const DesignSpec& spec);

enum class FrequencyPlanClass { synchronized, separated, at_risk };

std::string_view plan_class_name(FrequencyPlanClass c);

struct FrequencyPlan {
    FrequencyPlanClass classification = FrequencyPlanClass::at_risk;
    double f_b_hz = 0.0;
    double f2_below_hz = 0.0;  // f1 / 5
    double f2_above_hz = 0.0;  // 5 f1
    std::vector<std::string> remedies;
};

FrequencyPlan recommend_frequency_plan(double f1, double f2);

}  // namespace beatosc
