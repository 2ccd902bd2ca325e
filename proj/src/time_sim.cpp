#include "beatosc/time_sim.hpp"

#include "beatosc/errors.hpp"
#include "beatosc/format.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>

namespace beatosc {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double rms(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return v.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(v.size()));
}

double rms_difference(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return a.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace

void SimConfig::validate() const {
    if (steps_per_switch_period < 8) {
        throw ValidationError("sim.steps_per_switch_period must be at least 8");
    }
    if (settle_base_periods < 0) {
        throw ValidationError("sim.settle_base_periods must be non-negative");
    }
    if (capture_base_periods < 1) {
        throw ValidationError("sim.capture_base_periods must be at least 1");
    }
    if (!(relative_settle_tolerance > 0.0)) {
        throw ValidationError("sim.relative_settle_tolerance must be positive");
    }
    if (!(max_settle_time_s > 0.0)) {
        throw ValidationError("sim.max_settle_time_s must be positive");
    }
}

const std::vector<double>& Trace::samples(TraceSignal s) const {
    switch (s) {
        case TraceSignal::v_dc: return v_dc;
        case TraceSignal::i_l: return i_l;
        case TraceSignal::v_o: return v_o;
        case TraceSignal::i_r: return i_r;
        case TraceSignal::s_sw: return s_sw;
    }
    return v_o;
}

ReceiverState averaged_operating_point(const CircuitParams& params) {
    const double d = params.duty;
    const double v_dc = params.i_ls_amplitude * params.r_load / (std::numbers::pi * d * d);
    const double v_o = d * v_dc;
    return {v_dc, v_o / params.r_load, v_o};
}

SwitchedSimulator::SwitchedSimulator(const CircuitParams& params, const SimConfig& cfg)
    : params_(params), cfg_(cfg) {
    params_.validate();
    cfg_.validate();
    grid_ = params_.grid();
    samples_per_base_ = cfg_.steps_per_switch_period * grid_.m2;
    dt_ = 1.0 / (grid_.f_base * samples_per_base_);
    half_period_ = 0.5 / params_.f1;
    switch_period_ = 1.0 / params_.f2;
    x_ = averaged_operating_point(params_);
    duty_ = params_.duty;
    const double duty = params_.duty;
    duty_law_ = [duty](double, const ReceiverState&) { return duty; };

    // The period that began before t = 0 may still be conducting.
    const double previous_off = (params_.switch_phase - 1.0 + duty) * switch_period_;
    if (previous_off > 0.0) {
        switch_on_ = true;
        off_time_ = previous_off;
    }
}

double SwitchedSimulator::rectified_current(double t) const {
    if (half_index_ % 2 != 0) {
        return 0.0;
    }
    const double local = t - static_cast<double>(half_index_) * half_period_;
    return params_.i_ls_amplitude * std::sin(two_pi * params_.f1 * local);
}

SwitchedSimulator::Derivative SwitchedSimulator::derivative(const ReceiverState& x,
                                                            double t) const {
    const double s = switch_on_ ? 1.0 : 0.0;
    const double i_r = rectified_current(t);
    Derivative d{};
    d.v_dc = (i_r - s * x.i_l) / params_.c_dc;
    d.i_l = clamped_ ? 0.0 : (s * x.v_dc - x.v_o) / params_.l;
    d.v_o = (x.i_l - x.v_o / params_.r_load) / params_.c_o;
    return d;
}

void SwitchedSimulator::rk4(double h) {
    auto shifted = [](const ReceiverState& x, const Derivative& k, double scale) {
        return ReceiverState{x.v_dc + scale * k.v_dc, x.i_l + scale * k.i_l,
                             x.v_o + scale * k.v_o};
    };
    const Derivative k1 = derivative(x_, t_);
    const Derivative k2 = derivative(shifted(x_, k1, 0.5 * h), t_ + 0.5 * h);
    const Derivative k3 = derivative(shifted(x_, k2, 0.5 * h), t_ + 0.5 * h);
    const Derivative k4 = derivative(shifted(x_, k3, h), t_ + h);
    x_.v_dc += h / 6.0 * (k1.v_dc + 2.0 * k2.v_dc + 2.0 * k3.v_dc + k4.v_dc);
    x_.i_l += h / 6.0 * (k1.i_l + 2.0 * k2.i_l + 2.0 * k3.i_l + k4.i_l);
    x_.v_o += h / 6.0 * (k1.v_o + 2.0 * k2.v_o + 2.0 * k3.v_o + k4.v_o);
    t_ += h;

    if (!cfg_.ccm_assumption && !switch_on_ && x_.i_l < 0.0) {
        // Freewheel diode blocks: the inductor current stays at zero until turn-on.
        x_.i_l = 0.0;
        if (!clamped_) {
            clamped_ = true;
            log(t_, EventKind::dcm_clamp);
        }
    }
}

double SwitchedSimulator::next_event_time() const {
    const double commutation = static_cast<double>(half_index_ + 1) * half_period_;
    const double edge =
        switch_on_ ? off_time_
                   : (static_cast<double>(next_on_index_) + params_.switch_phase) * switch_period_;
    return std::min(commutation, edge);
}

void SwitchedSimulator::process_next_event() {
    const double commutation = static_cast<double>(half_index_ + 1) * half_period_;
    const double on_time =
        (static_cast<double>(next_on_index_) + params_.switch_phase) * switch_period_;
    const double edge = switch_on_ ? off_time_ : on_time;

    if (commutation <= edge) {
        ++half_index_;
        log(commutation, EventKind::rectifier_commutation);
        return;
    }
    if (switch_on_) {
        switch_on_ = false;
        log(off_time_, EventKind::switch_off);
        return;
    }
    const double duty = std::clamp(duty_law_(on_time, x_), 0.0, 1.0 - 1e-12);
    duty_ = duty;
    ++next_on_index_;
    if (duty > 0.0) {
        switch_on_ = true;
        clamped_ = false;
        off_time_ = on_time + duty * switch_period_;
        log(on_time, EventKind::switch_on);
    }
}

void SwitchedSimulator::advance_to(double t_target) {
    const double eps = 1e-9 * dt_;
    for (;;) {
        const double t_event = next_event_time();
        if (t_event > t_target + eps) {
            break;
        }
        if (t_event > t_) {
            rk4(t_event - t_);
            t_ = t_event;
        }
        process_next_event();
    }
    if (t_target > t_) {
        rk4(t_target - t_);
    }
    t_ = t_target;
}

void SwitchedSimulator::log(double t, EventKind kind) {
    if (logging_) {
        events_.push_back({t, kind});
    }
}

void SwitchedSimulator::run_base_periods(std::int64_t count, const SampleSink& sink) {
    const std::int64_t samples = count * samples_per_base_;
    for (std::int64_t j = 0; j < samples; ++j) {
        const double t = static_cast<double>(sample_index_) * dt_;
        advance_to(t);
        if (sink) {
            sink(Sample{t, x_, rectified_current(t), switch_on_ ? 1.0 : 0.0, duty_});
        }
        ++sample_index_;
    }
}

std::int64_t SwitchedSimulator::settle() {
    const auto n = static_cast<std::size_t>(samples_per_base_);
    std::array<std::vector<double>, 3> previous;
    std::array<std::vector<double>, 3> current;
    for (auto& v : current) {
        v.reserve(n);
    }

    const std::int64_t minimum = std::max<std::int64_t>(cfg_.settle_base_periods, 2);
    std::int64_t periods = 0;
    int passes = 0;
    double worst = 0.0;
    for (;;) {
        for (auto& v : current) {
            v.clear();
        }
        run_base_periods(1, [&current](const Sample& s) {
            current[0].push_back(s.x.v_dc);
            current[1].push_back(s.x.i_l);
            current[2].push_back(s.x.v_o);
        });
        ++periods;

        if (!previous[0].empty()) {
            worst = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double scale = std::max(rms(current[i]), 1e-12);
                worst = std::max(worst, rms_difference(current[i], previous[i]) / scale);
            }
            passes = worst < cfg_.relative_settle_tolerance ? passes + 1 : 0;
            if (passes >= 2 && periods >= minimum) {
                return periods;
            }
        }
        std::swap(previous, current);

        if (time() > cfg_.max_settle_time_s) {
            throw NoConvergence("time-domain run did not settle within " +
                                format_double(cfg_.max_settle_time_s) +
                                " s (last relative period-to-period change " +
                                format_double(worst) + ")");
        }
    }
}

Trace SwitchedSimulator::capture(int base_periods) {
    Trace trace;
    trace.t_start = time();
    trace.dt = dt_;
    const auto n = static_cast<std::size_t>(base_periods) * samples_per_base_;
    for (auto* v : {&trace.v_dc, &trace.i_l, &trace.v_o, &trace.i_r, &trace.s_sw, &trace.duty}) {
        v->reserve(n);
    }
    events_.clear();
    logging_ = true;
    run_base_periods(base_periods, [&trace](const Sample& s) {
        trace.v_dc.push_back(s.x.v_dc);
        trace.i_l.push_back(s.x.i_l);
        trace.v_o.push_back(s.x.v_o);
        trace.i_r.push_back(s.i_r);
        trace.s_sw.push_back(s.s_sw);
        trace.duty.push_back(s.duty);
    });
    logging_ = false;
    // Events at the closing boundary belong to the next window.
    const double t_end = trace.t_start + trace.window();
    std::erase_if(events_, [t_end, this](const SimEvent& e) { return e.t >= t_end - 1e-9 * dt_; });
    trace.events = std::move(events_);
    events_.clear();
    return trace;
}

Trace simulate(const CircuitParams& params, const SimConfig& cfg) {
    SwitchedSimulator sim(params, cfg);
    sim.settle();
    return sim.capture(cfg.capture_base_periods);
}

DutyLaw make_closed_loop_law(const CircuitParams& params, const CompensatorParams& comp,
                             const std::function<double()>& v_ref) {
    struct LoopState {
        DiscreteCompensator controller;
        int saturated = 0;
    };
    auto state = std::make_shared<LoopState>(LoopState{DiscreteCompensator(comp, params.f2), 0});
    const double offset = params.duty;
    const double fixed_ref = comp.v_ref;
    return [state, offset, fixed_ref, v_ref](double t_on, const ReceiverState& x) {
        const double reference = v_ref ? v_ref() : fixed_ref;
        const double raw = offset + state->controller.step(reference - x.v_o);
        const double duty = std::clamp(raw, min_closed_loop_duty, max_closed_loop_duty);
        state->saturated = duty != raw ? state->saturated + 1 : 0;
        if (state->saturated > max_saturated_periods) {
            throw UnstableLoop("duty held at a clamp for more than " +
                               std::to_string(max_saturated_periods) +
                               " switching periods (t = " + format_double(t_on) + " s)");
        }
        return duty;
    };
}

ClosedLoopTrace simulate_closed_loop(const CircuitParams& params, const CompensatorParams& comp,
                                     const SimConfig& cfg) {
    comp.validate();
    SwitchedSimulator sim(params, cfg);
    sim.set_duty_law(make_closed_loop_law(params, comp));
    ClosedLoopTrace out;
    out.settle_base_periods = sim.settle();
    out.trace = sim.capture(cfg.capture_base_periods);
    return out;
}

HarmonicVector spectrum_of(const Trace& trace, const FrequencyGrid& grid, TraceSignal signal,
                           int k_max) {
    if (k_max < 0) {
        k_max = grid.k_max;
    }
    const std::size_t n = trace.size();
    if (n == 0) {
        throw WindowMismatch("empty trace");
    }
    const double periods = trace.window() * grid.f_base;
    if (std::round(periods) < 1.0 || std::abs(periods - std::round(periods)) > 1e-6) {
        throw WindowMismatch("capture window of " + format_double(trace.window()) +
                             " s is not a whole number of base periods (1/" +
                             format_double(grid.f_base) + " s)");
    }

    const std::vector<double>& x = trace.samples(signal);
    std::vector<cplx> acc(static_cast<std::size_t>(k_max) + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const double cycles = grid.f_base * trace.time(j);
        const cplx w = std::polar(1.0, -two_pi * (cycles - std::floor(cycles)));
        cplx p = x[j];
        for (int k = 0; k <= k_max; ++k) {
            acc[static_cast<std::size_t>(k)] += p;
            p *= w;
        }
    }

    HarmonicVector h(k_max, grid.f_base);
    const double scale = 1.0 / static_cast<double>(n);
    h.set(0, acc[0].real() * scale);
    for (int k = 1; k <= k_max; ++k) {
        const cplx c = acc[static_cast<std::size_t>(k)] * scale;
        h.set(k, c);
        h.set(-k, std::conj(c));
    }
    return h;
}

void ToneAccumulator::add(double t, double x) {
    const double cycles = frequency_ * t;
    sum_ += x * std::polar(1.0, -two_pi * (cycles - std::floor(cycles)));
    ++count_;
}

cplx ToneAccumulator::coefficient() const {
    return count_ == 0 ? cplx{} : sum_ / static_cast<double>(count_);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "t_s,v_dc_V,i_l_A,v_o_V,i_r_A,s_sw\n";
    for (std::size_t j = 0; j < trace.size(); ++j) {
        out << format_double(trace.time(j)) << ',' << format_double(trace.v_dc[j]) << ','
            << format_double(trace.i_l[j]) << ',' << format_double(trace.v_o[j]) << ','
            << format_double(trace.i_r[j]) << ',' << format_double(trace.s_sw[j]) << '\n';
    }
}

}  // namespace beatosc
