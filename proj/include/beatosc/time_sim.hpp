#pragma once

// =============================================================================
// Switched time-domain simulator
// =============================================================================
// Integrates the three receiver balances
//   C_DC dv_DC/dt = i_r - s_sw i_L
//   L    di_L/dt  = s_sw v_DC - v_o
//   C_o  dv_o/dt  = i_L - v_o / R
// with classical RK4 between events. Rectifier commutations and switch edges
// are known in advance, so every step is split exactly at them; samples land
// on a uniform grid of N = steps_per_switch_period * M2 points per base period.
// =============================================================================

#include "beatosc/compensator.hpp"
#include "beatosc/excitation.hpp"
#include "beatosc/spectral.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace beatosc {

struct SimConfig {
    int steps_per_switch_period = 200;
    int settle_base_periods = 0;  // minimum warm-up before settle checks
    int capture_base_periods = 1;
    bool ccm_assumption = true;
    double relative_settle_tolerance = 1e-6;
    double max_settle_time_s = 0.5;

    void validate() const;
};

enum class EventKind { switch_on, switch_off, rectifier_commutation, dcm_clamp };

struct SimEvent {
    double t = 0.0;
    EventKind kind = EventKind::switch_on;
};

enum class TraceSignal { v_dc, i_l, v_o, i_r, s_sw };

struct Trace {
    double t_start = 0.0;
    double dt = 0.0;
    std::vector<double> v_dc;
    std::vector<double> i_l;
    std::vector<double> v_o;
    std::vector<double> i_r;
    std::vector<double> s_sw;
    std::vector<double> duty;  // duty of the switching period each sample falls in
    std::vector<SimEvent> events;

    std::size_t size() const { return v_o.size(); }
    double window() const { return static_cast<double>(size()) * dt; }
    double time(std::size_t j) const { return t_start + static_cast<double>(j) * dt; }
    const std::vector<double>& samples(TraceSignal s) const;
};

struct ReceiverState {
    double v_dc = 0.0;
    double i_l = 0.0;
    double v_o = 0.0;
};

struct Sample {
    double t = 0.0;
    ReceiverState x;
    double i_r = 0.0;
    double s_sw = 0.0;
    double duty = 0.0;
};

/// Duty for the switching period that starts at t_on, given the state there.
using DutyLaw = std::function<double(double t_on, const ReceiverState& x)>;
using SampleSink = std::function<void(const Sample&)>;

/// Averaged lossless operating point, used only as the initial condition:
/// V_DC = I_Ls R / (pi D^2), v_o = D V_DC, i_L = v_o / R.
ReceiverState averaged_operating_point(const CircuitParams& params);

class SwitchedSimulator {
public:
    SwitchedSimulator(const CircuitParams& params, const SimConfig& cfg);

    void set_duty_law(DutyLaw law) { duty_law_ = std::move(law); }
    void set_state(const ReceiverState& x) { x_ = x; }

    /// Integrates exactly `count` base periods, feeding every sample to `sink`.
    void run_base_periods(std::int64_t count, const SampleSink& sink = {});

    /// Runs whole base periods until two consecutive periods differ by less
    /// than the settle tolerance (RMS of the sample-wise difference relative
    /// to the RMS of the state), for every state. Returns the periods run.
    std::int64_t settle();

    /// Records `base_periods` periods into a Trace, with the event log.
    Trace capture(int base_periods);

    const FrequencyGrid& grid() const { return grid_; }
    const CircuitParams& params() const { return params_; }
    double time() const { return static_cast<double>(sample_index_) * dt_; }
    double dt() const { return dt_; }
    int samples_per_base_period() const { return samples_per_base_; }
    const ReceiverState& state() const { return x_; }

private:
    struct Derivative {
        double v_dc, i_l, v_o;
    };

    Derivative derivative(const ReceiverState& x, double t) const;
    void rk4(double h);
    void advance_to(double t_target);
    double next_event_time() const;
    void process_next_event();
    double rectified_current(double t) const;
    void log(double t, EventKind kind);

    CircuitParams params_;
    SimConfig cfg_;
    FrequencyGrid grid_;
    DutyLaw duty_law_;

    int samples_per_base_ = 0;
    double dt_ = 0.0;
    double half_period_ = 0.0;   // 1 / (2 f1)
    double switch_period_ = 0.0; // 1 / f2

    ReceiverState x_;
    double t_ = 0.0;
    std::int64_t sample_index_ = 0;

    std::int64_t half_index_ = 0;   // rectifier half-cycle in progress
    std::int64_t next_on_index_ = 0;
    bool switch_on_ = false;
    double off_time_ = 0.0;         // pending turn-off while the switch is on
    double duty_ = 0.0;
    bool clamped_ = false;

    bool logging_ = false;
    std::vector<SimEvent> events_;
};

/// Open-loop run at the configured duty: settle, then capture.
Trace simulate(const CircuitParams& params, const SimConfig& cfg);

struct ClosedLoopTrace {
    Trace trace;
    std::int64_t settle_base_periods = 0;
};

inline constexpr double min_closed_loop_duty = 0.02;
inline constexpr double max_closed_loop_duty = 0.98;
inline constexpr int max_saturated_periods = 50;

/// Duty updated once per switching period by the discretized compensators
/// acting on v_ref - v_o sampled at turn-on; params.duty is the offset the
/// compensator output is added to. Throws UnstableLoop when the duty sits on
/// a clamp for more than 50 consecutive periods.
ClosedLoopTrace simulate_closed_loop(const CircuitParams& params, const CompensatorParams& comp,
                                     const SimConfig& cfg);

/// Duty law of the closed loop, usable with SwitchedSimulator directly.
DutyLaw make_closed_loop_law(const CircuitParams& params, const CompensatorParams& comp,
                             const std::function<double()>& v_ref = {});

/// DFT of the trace window re-indexed to harmonics of grid.f_base, scaled so
/// that A sin(2 pi k f_base t) gives |<k>| = A / 2.
HarmonicVector spectrum_of(const Trace& trace, const FrequencyGrid& grid, TraceSignal signal,
                           int k_max = -1);

/// Streaming single-line DFT with the same scaling as spectrum_of.
class ToneAccumulator {
public:
    explicit ToneAccumulator(double frequency) : frequency_(frequency) {}
    void add(double t, double x);
    cplx coefficient() const;
    std::int64_t count() const { return count_; }

private:
    double frequency_;
    cplx sum_{};
    std::int64_t count_ = 0;
};

/// Trace CSV: header t_s,v_dc_V,i_l_A,v_o_V,i_r_A,s_sw and one row per sample.
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace beatosc
