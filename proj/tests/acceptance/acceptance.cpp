// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exits non-zero when any criterion fails.

#include "beatosc/beat_analysis.hpp"
#include "beatosc/excitation.hpp"
#include "beatosc/small_signal.hpp"
#include "beatosc/spectral.hpp"
#include "beatosc/steady_state.hpp"
#include "beatosc/time_sim.hpp"

#include "../support/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace beatosc;

namespace {

constexpr double pi = std::numbers::pi;

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    // Records one sub-check and its detail line.
    bool check(bool ok, const std::string& detail) {
        ok_ = ok_ && ok;
        details_.push_back(std::string(ok ? "ok   " : "MISS ") + detail);
        return ok;
    }
    void note(const std::string& detail) { details_.push_back("     " + detail); }
    bool passed() const { return ok_; }

    void print() const {
        std::printf("%s %s\n", ok_ ? "PASS" : "FAIL", title_.c_str());
        for (const auto& d : details_) {
            std::printf("    %s\n", d.c_str());
        }
        std::fflush(stdout);
    }

private:
    std::string title_;
    bool ok_ = true;
    std::vector<std::string> details_;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool within(double value, double target, double rel) {
    return std::abs(value - target) <= rel * std::abs(target);
}

const char* name_of(Signal s) {
    switch (s) {
    case Signal::v_dc:
        return "v_dc";
    case Signal::i_l:
        return "i_l";
    case Signal::v_o:
        return "v_o";
    }
    return "?";
}

TraceSignal trace_signal(Signal s) {
    switch (s) {
    case Signal::v_dc:
        return TraceSignal::v_dc;
    case Signal::i_l:
        return TraceSignal::i_l;
    case Signal::v_o:
        return TraceSignal::v_o;
    }
    return TraceSignal::v_o;
}

constexpr Signal signals[] = {Signal::v_dc, Signal::i_l, Signal::v_o};

double peak_to_peak(const std::vector<double>& x, std::size_t from, std::size_t to) {
    const auto [lo, hi] = std::minmax_element(x.begin() + from, x.begin() + to);
    return *hi - *lo;
}

// Shared nominal-case results.
struct NominalCase {
    CircuitParams params;
    SteadyStateSolution solution;
    Trace trace;
    double solve_s = 0.0;
    double simulate_s = 0.0;
};

NominalCase make_nominal_case() {
    using clock = std::chrono::steady_clock;
    NominalCase pc;
    const auto t0 = clock::now();
    pc.solution = solve_steady_state(pc.params);
    const auto t1 = clock::now();
    pc.trace = simulate(pc.params, SimConfig{});
    const auto t2 = clock::now();
    pc.solve_s = std::chrono::duration<double>(t1 - t0).count();
    pc.simulate_s = std::chrono::duration<double>(t2 - t1).count();
    return pc;
}

void criterion_1(Criterion& c, const NominalCase& pc) {
    const FrequencyGrid& g = pc.solution.grid;
    int lines = 0;
    double worst = 0.0;
    for (Signal s : signals) {
        const HarmonicVector sim = spectrum_of(pc.trace, g, trace_signal(s));
        const HarmonicVector& model = pc.solution.signal(s);
        const double dc = std::abs(model.at(0));
        for (int k = 0; k <= g.k_max; ++k) {
            const double a = line_amplitude(model, k);
            if (a < 0.01 * dc) {
                continue;
            }
            ++lines;
            const double b = line_amplitude(sim, k);
            const double err = std::abs(b - a) / a;
            worst = std::max(worst, err);
            c.check(err <= 0.05, fmt("%-4s k=%-3d f=%8.0f Hz  model %.6g  sim %.6g  rel %.2e",
                                     name_of(s), k, k * g.f_base, a, b, err));
        }
    }
    c.check(lines > 0, fmt("%d lines compared, worst relative error %.2e", lines, worst));
    const double total = pc.solve_s + pc.simulate_s;
    c.check(total < 30.0,
            fmt("runtime %.2f s (solve %.2f s, simulate %.2f s)", total, pc.solve_s, pc.simulate_s));
}

void criterion_2(Criterion& c, const NominalCase& pc) {
    const FrequencyGrid& g = pc.solution.grid;
    const int kb = g.beat_index;
    const int k1 = g.m1;
    const int k2 = g.m2;
    const HarmonicVector sim_vo = spectrum_of(pc.trace, g, TraceSignal::v_o);
    const HarmonicVector sim_vdc = spectrum_of(pc.trace, g, TraceSignal::v_dc);
    struct Source {
        const char* name;
        const HarmonicVector& v_o;
        const HarmonicVector& v_dc;
    };
    for (const Source& src : {Source{"model", pc.solution.v_o, pc.solution.v_dc},
                              Source{"sim", sim_vo, sim_vdc}}) {
        const double o_b = line_amplitude(src.v_o, kb);
        const double o_1 = line_amplitude(src.v_o, k1);
        const double d_b = line_amplitude(src.v_dc, kb);
        const double d_1 = line_amplitude(src.v_dc, k1);
        const double d_2 = line_amplitude(src.v_dc, k2);
        c.check(o_b > o_1, fmt("%-5s v_o:  15 kHz %.4g V > 200 kHz %.4g V", src.name, o_b, o_1));
        c.check(d_b > d_2 && d_b > d_1,
                fmt("%-5s v_dc: 15 kHz %.4g V > 185 kHz %.4g V, 200 kHz %.4g V", src.name, d_b,
                    d_2, d_1));
    }
}

void criterion_3(Criterion& c, const NominalCase& pc) {
    const double v_dc = pc.solution.v_dc.at(0).real();
    const double v_o = pc.solution.v_o.at(0).real();
    c.check(within(v_dc, 10.56, 0.10), fmt("v_dc<0> = %.4f V (10.56 V +/- 10%%)", v_dc));
    c.check(within(v_o, 5.25, 0.10), fmt("v_o<0>  = %.4f V (5.25 V +/- 10%%)", v_o));
    const FrequencyGrid& g = pc.solution.grid;
    c.note(fmt("simulated: v_dc<0> = %.4f V, v_o<0> = %.4f V",
               spectrum_of(pc.trace, g, TraceSignal::v_dc).at(0).real(),
               spectrum_of(pc.trace, g, TraceSignal::v_o).at(0).real()));
}

void criterion_4(Criterion& c, const CircuitParams& p, const ResponseEvaluator& plant) {
    SwitchedSimulator sim(p, SimConfig{});
    sim.settle();
    for (double f : log_frequency_grid(10.0, 10e3, 3)) {
        const bench::PerturbationPoint pt = bench::measure_duty_response(sim, f);
        const cplx model = plant(pt.f_hz);
        const double d_db = gain_db(pt.measured) - gain_db(model);
        double d_deg = phase_deg(pt.measured / model);
        c.check(std::abs(d_db) <= 1.0 && std::abs(d_deg) <= 5.0,
                fmt("f=%8.2f Hz  model %7.2f dB %7.1f deg  measured %7.2f dB %7.1f deg  "
                    "diff %+.2f dB %+.1f deg",
                    pt.f_hz, gain_db(model), phase_deg(model), gain_db(pt.measured),
                    phase_deg(pt.measured), d_db, d_deg));
    }
}

void criterion_5(Criterion& c, const ResponseEvaluator& plant) {
    const CompensatorParams comp;
    const LoopMetrics m = loop_metrics(plant, comp, default_bode_scan(), {1.0, 15e3});
    c.check(m.crossover_hz && within(*m.crossover_hz, 1000.0, 0.10),
            fmt("crossover %.1f Hz (1000 Hz +/- 10%%)", m.crossover_hz.value_or(0.0)));
    c.check(m.phase_margin_deg && std::abs(*m.phase_margin_deg - 96.0) <= 5.0,
            fmt("phase margin %.2f deg (96 +/- 5)", m.phase_margin_deg.value_or(0.0)));
    const double at_1 = m.gain_db_at.at(0).second;
    const double at_15k = m.gain_db_at.at(1).second;
    c.check(std::abs(at_1 - 47.0) <= 2.0, fmt("|T|(1 Hz) = %.2f dB (47 +/- 2)", at_1));
    c.check(std::abs(at_15k - 45.0) <= 2.0,
            fmt("|T|(15 kHz) = %.2f dB (45 +/- 2); the resonant term has its pole here", at_15k));
    std::string crossings;
    for (double f : m.unity_crossings_hz) {
        crossings += fmt(" %.1f", f);
    }
    c.note("unity crossings (Hz):" + crossings);
}

void criterion_6(Criterion& c) {
    CircuitParams sep;
    sep.f2 = 182e3;
    const FrequencyGrid g = sep.grid();
    const Trace ts = simulate(sep, SimConfig{});
    const double f_b = g.beat_frequency();

    CircuitParams sync;
    sync.f2 = sync.f1;
    SimConfig cfg;
    // 100 periods of 200 kHz hold a whole number of 18 kHz cycles.
    cfg.capture_base_periods = 100;
    const Trace tq = simulate(sync, cfg);

    for (TraceSignal s : {TraceSignal::v_dc, TraceSignal::v_o}) {
        const double sep_line = line_amplitude(spectrum_of(ts, g, s), g.beat_index);
        ToneAccumulator acc(f_b);
        const std::vector<double>& x = tq.samples(s);
        for (std::size_t j = 0; j < x.size(); ++j) {
            acc.add(tq.time(j), x[j]);
        }
        const double sync_line = 2.0 * std::abs(acc.coefficient());
        const double db = 20.0 * std::log10(sep_line / sync_line);
        c.check(db >= 40.0,
                fmt("%-4s %.0f Hz line: f2=182 kHz %.4g, f2=f1 %.3g, reduction %.1f dB (>= 40)",
                    s == TraceSignal::v_dc ? "v_dc" : "v_o", f_b, sep_line, sync_line, db));
    }
    const std::size_t per = static_cast<std::size_t>(cfg.steps_per_switch_period);
    const double window = peak_to_peak(tq.v_o, 0, tq.size());
    const double single = peak_to_peak(tq.v_o, 0, per);
    c.check(within(window, single, 0.05),
            fmt("v_o peak-to-peak: window %.5g V, single period %.5g V", window, single));
}

void criterion_7(Criterion& c) {
    const CircuitParams p;
    const std::vector<double> axis = log_frequency_grid(1e3, 9e4, 200);
    const double cell = std::log10(axis[1] / axis[0]);

    std::vector<double> curve;
    for (double f : axis) {
        curve.push_back(std::abs(beat_component_closed_form(p, f).v_o));
    }
    int maxima = 0;
    std::size_t peak = 0;
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        if (curve[i] > curve[i - 1] && curve[i] > curve[i + 1]) {
            ++maxima;
            peak = i;
        }
    }
    const double f_cr = critical_frequency(p);
    c.check(maxima == 1 && std::abs(std::log10(axis[peak] / f_cr)) <= cell,
            fmt("%d interior maximum at %.1f Hz, f_cr %.1f Hz, cell %.4f decade", maxima,
                axis[peak], f_cr, cell));

    for (const char* name : {"c_dc", "c_o"}) {
        std::vector<double> values{1.0, 2.0, 4.0};
        const double base = std::string(name) == "c_dc" ? p.c_dc : p.c_o;
        for (double& v : values) {
            v *= base;
        }
        SweepOptions opt;
        opt.f_b_hz = axis;
        opt.overrides = {{name, values}};
        const SweepResult r = sweep_beat(p, opt);
        std::vector<double> f_crs;
        for (const auto& cfg : r.configurations) {
            f_crs.push_back(cfg.f_cr_hz.value_or(0.0));
        }
        c.check(f_crs[1] < f_crs[0] && f_crs[2] < f_crs[1],
                fmt("%-4s x1, x2, x4: f_cr %.1f, %.1f, %.1f Hz", name, f_crs[0], f_crs[1],
                    f_crs[2]));
        const double above = *std::max_element(f_crs.begin(), f_crs.end());
        const std::size_t n = axis.size();
        int checked = 0;
        int bad = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (axis[i] <= above) {
                continue;
            }
            ++checked;
            for (std::size_t k = 1; k < 3; ++k) {
                const SweepPoint& lo = r.points[(k - 1) * n + i];
                const SweepPoint& hi = r.points[k * n + i];
                if (!(hi.v_o_beat < lo.v_o_beat && hi.v_dc_beat < lo.v_dc_beat)) {
                    ++bad;
                }
            }
        }
        c.check(bad == 0, fmt("%-4s monotone decrease above f_cr at %d frequencies, %d violations",
                              name, checked, bad));
    }
}

void criterion_8(Criterion& c) {
    CircuitParams p;
    const DesignSpec spec;
    const CapacitorDesign d = design_capacitors(p, spec);
    c.check(within(d.c_dc_min, 4.50e-6, 0.005), fmt("c_dc_min = %.4e F (4.50e-6 +/- 0.5%%)", d.c_dc_min));
    c.check(within(d.c_o_min, 3.41e-6, 0.005), fmt("c_o_min  = %.4e F (3.41e-6 +/- 0.5%%)", d.c_o_min));

    p.c_dc = d.c_dc_min;
    const Trace tr = simulate(p, SimConfig{});
    const double swing = 0.5 * peak_to_peak(tr.v_dc, 0, tr.size());
    const double limit = 1.5 * spec.x_dc * spec.v_dc0;
    c.check(swing <= limit, fmt("C_DC = c_dc_min: v_dc beat+ripple %.4f V <= %.4f V (margin %.1f%%)",
                                swing, limit, 100.0 * (1.0 - swing / limit)));
}

void criterion_9(Criterion& c, const NominalCase& pc) {
    const CircuitParams& p = pc.params;
    const FrequencyGrid& g = pc.solution.grid;

    double sym = 0.0;
    for (const HarmonicVector* h :
         {&pc.solution.v_dc, &pc.solution.i_l, &pc.solution.v_o}) {
        sym = std::max(sym, h->symmetry_defect());
    }
    const HarmonicVector ex[] = {coil_current_spectrum(p, g), rectified_current_spectrum(p, g),
                                 switching_spectrum(p.duty, g),
                                 switching_spectrum_derivative(p.duty, g)};
    for (const auto& h : ex) {
        sym = std::max(sym, h.symmetry_defect());
    }
    c.check(sym <= 1e-10, fmt("conjugate symmetry defect %.2e", sym));

    // Parseval on a grid that holds > 100 switching harmonics.
    const FrequencyGrid fine = build_frequency_grid(200e3, 5e3);
    double worst_parseval = 0.0;
    bool bounded = true;
    for (double d = 0.2; d <= 0.8 + 1e-12; d += 0.1) {
        const double e = switching_spectrum(d, fine).coeffs().squaredNorm();
        bounded = bounded && e <= d;
        worst_parseval = std::max(worst_parseval, (d - e) / d);
    }
    c.check(bounded && worst_parseval <= 0.02,
            fmt("Parseval: sum |s<k>|^2 <= D, worst shortfall %.2f%%", 100.0 * worst_parseval));

    const HarmonicVector ir = rectified_current_spectrum(p, g);
    double p_in = 0.0;
    double p_out = 0.0;
    for (int k = -g.k_max; k <= g.k_max; ++k) {
        p_in += (ir.at(k) * std::conj(pc.solution.v_dc.at(k))).real();
        p_out += std::norm(pc.solution.v_o.at(k)) / p.r_load;
    }
    c.check(within(p_in, p_out, 0.01),
            fmt("power balance: in %.5f W, out %.5f W", p_in, p_out));

    SwitchedSimulator sim(p, SimConfig{});
    sim.settle();
    auto stored = [&](const ReceiverState& x) {
        return 0.5 * p.c_dc * x.v_dc * x.v_dc + 0.5 * p.l * x.i_l * x.i_l +
               0.5 * p.c_o * x.v_o * x.v_o;
    };
    const double e0 = stored(sim.state());
    const Trace tr = sim.capture(4);
    const double e1 = stored(sim.state());
    double in = 0.0;
    double out = 0.0;
    for (std::size_t j = 0; j < tr.size(); ++j) {
        in += tr.v_dc[j] * tr.i_r[j] * tr.dt;
        out += tr.v_o[j] * tr.v_o[j] / p.r_load * tr.dt;
    }
    const double rhs = out + (e1 - e0);
    const double audit = std::abs(in - rhs) / std::max(std::abs(in), std::abs(rhs));
    c.check(audit <= 0.005, fmt("energy audit: in %.6e J, out+stored %.6e J, rel %.2e", in, rhs, audit));

    const double h = 1e-6;
    const HarmonicVector up = switching_spectrum(0.4 + h, g);
    const HarmonicVector dn = switching_spectrum(0.4 - h, g);
    const HarmonicVector an = switching_spectrum_derivative(0.4, g);
    double fd_worst = 0.0;
    for (int k = -g.k_max; k <= g.k_max; ++k) {
        if (an.at(k) != cplx{}) {
            fd_worst = std::max(fd_worst,
                                std::abs((up.at(k) - dn.at(k)) / (2.0 * h) - an.at(k)) /
                                    std::abs(an.at(k)));
        }
    }
    c.check(fd_worst <= 1e-6, fmt("switching derivative vs finite difference: %.2e", fd_worst));

    SimConfig fine_cfg;
    fine_cfg.steps_per_switch_period = 400;
    const Trace tf = simulate(p, fine_cfg);
    double halving = 0.0;
    for (Signal s : signals) {
        const HarmonicVector a = spectrum_of(pc.trace, g, trace_signal(s));
        const HarmonicVector b = spectrum_of(tf, g, trace_signal(s));
        const double dc = std::abs(a.at(0));
        for (int k = 0; k <= g.k_max; ++k) {
            const double la = line_amplitude(a, k);
            if (la >= 0.01 * dc) {
                halving = std::max(halving, std::abs(line_amplitude(b, k) - la) / la);
            }
        }
    }
    c.check(halving < 0.005, fmt("step halving: worst line change %.2e", halving));
}

bool run(const std::string& title, const std::function<void(Criterion&)>& body) {
    Criterion c(title);
    try {
        body(c);
    } catch (const std::exception& e) {
        c.check(false, std::string("exception: ") + e.what());
    }
    c.print();
    return c.passed();
}

}  // namespace

int main() {
    const NominalCase pc = make_nominal_case();
    const LinearizedModel model = linearize(pc.params, pc.solution.grid);
    const ResponseEvaluator plant(model);

    int failed = 0;
    auto tally = [&](bool ok) { failed += ok ? 0 : 1; };
    tally(run("1 cross-oracle equivalence", [&](Criterion& c) { criterion_1(c, pc); }));
    tally(run("2 beat dominance", [&](Criterion& c) { criterion_2(c, pc); }));
    tally(run("3 DC operating point", [&](Criterion& c) { criterion_3(c, pc); }));
    tally(run("4 small-signal consistency",
              [&](Criterion& c) { criterion_4(c, pc.params, plant); }));
    tally(run("5 loop metrics", [&](Criterion& c) { criterion_5(c, plant); }));
    tally(run("6 synchronization suppression", [&](Criterion& c) { criterion_6(c); }));
    tally(run("7 critical-frequency behavior", [&](Criterion& c) { criterion_7(c); }));
    tally(run("8 design rules", [&](Criterion& c) { criterion_8(c); }));
    tally(run("9 property suites", [&](Criterion& c) { criterion_9(c, pc); }));
    std::printf("%d of 9 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
