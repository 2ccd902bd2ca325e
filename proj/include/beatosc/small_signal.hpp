#pragma once

#include "beatosc/compensator.hpp"
#include "beatosc/steady_state.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace beatosc {

/// d(dx)/dt = A dx + B dd around the harmonic steady state. A is the steady
/// state system matrix; B holds the duty sensitivity of the switched products.
struct LinearizedModel {
    CMatrix a;
    CVector b;
    SteadyStateSolution operating_point;
    int output_index = 0;  // row of V_o<0> in the stacked state
};

LinearizedModel linearize(const CircuitParams& params, const FrequencyGrid& grid);

struct FrequencyResponse {
    std::vector<double> f_hz;
    std::vector<cplx> gain;
    std::string reference;
};

/// Evaluates G(jw) = C (jw I - A)^{-1} B at O(n^2) per frequency after a
/// single Hessenberg reduction A = Q H Q^H.
class ResponseEvaluator {
public:
    explicit ResponseEvaluator(const LinearizedModel& model);

    cplx operator()(double f_hz) const;

private:
    CMatrix h_;
    CVector qb_;
    Eigen::RowVectorXcd cq_;
};

/// Delta d -> Delta V_o<0>, in volts per unit duty.
FrequencyResponse duty_to_output_response(const CircuitParams& params, const FrequencyGrid& grid,
                                          const std::vector<double>& freqs);

/// Logarithmic grid with `points_per_decade` points per decade, both ends included.
std::vector<double> log_frequency_grid(double f_min, double f_max, int points_per_decade);

/// Default Bode scan: 200 points per decade over [1 Hz, 100 kHz].
std::vector<double> default_bode_scan();

struct LoopMetrics {
    std::optional<double> crossover_hz;
    std::optional<double> phase_margin_deg;
    std::vector<double> unity_crossings_hz;  // every |T| = 1 crossing in the scan
    std::vector<std::pair<double, double>> gain_db_at;
};

/// T(jw) = compensator(jw) G(jw). Scan points within 1e-9 relative of the
/// resonant pole are dropped.
FrequencyResponse loop_response(const ResponseEvaluator& plant, const CompensatorParams& comp,
                                const std::vector<double>& scan);

/// Crossover is the lowest-frequency downward unity crossing; phase margin is
/// 180 + arg T there. |T| is reported in dB at each frequency in `report_at`;
/// a frequency sitting on the resonant pole reports +inf. Throws NoCrossover.
LoopMetrics loop_metrics(const CircuitParams& params, const FrequencyGrid& grid,
                         const CompensatorParams& comp, const std::vector<double>& scan,
                         const std::vector<double>& report_at = {});
LoopMetrics loop_metrics(const ResponseEvaluator& plant, const CompensatorParams& comp,
                         const std::vector<double>& scan,
                         const std::vector<double>& report_at = {});

double gain_db(cplx g);
double phase_deg(cplx g);

/// Bode CSV: header f_hz,gain_db,phase_deg.
void write_bode_csv(std::ostream& out, const FrequencyResponse& response);

}  // namespace beatosc
