#include "beatosc/beat_analysis.hpp"

#include "beatosc/errors.hpp"
#include "beatosc/format.hpp"
#include "beatosc/steady_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

namespace beatosc {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx j{0.0, 1.0};

double abs_den(const CircuitParams& p, double f_b) {
    return std::abs(beat_component_closed_form(p, f_b).den);
}

}  // namespace

BeatComponents beat_component_closed_form(const CircuitParams& p, double f_b) {
    if (!(f_b > 0.0)) {
        throw ValidationError("beat frequency must be positive");
    }
    if (!(p.duty > 0.0 && p.duty < 1.0)) {
        throw ValidationError("circuit.duty must lie in (0, 1)");
    }
    for (double v : {p.i_ls_amplitude, p.f1, p.c_dc, p.l, p.c_o, p.r_load}) {
        if (!(v > 0.0)) {
            throw ValidationError("closed form needs positive circuit parameters");
        }
    }
    const double d = p.duty;
    const double i_ls = p.i_ls_amplitude;
    const double r = p.r_load;
    const double f1 = p.f1;
    const cplx e1 = std::exp(j * (2.0 * pi * d));
    const cplx e2 = std::exp(j * (4.0 * pi * d));

    BeatComponents out;
    out.num_v_dc = d * i_ls * e1 * (1.0 + j * (2.0 * pi * p.c_o * r * f_b)) * (e1 - 1.0) * j /
                   (4.0 * p.c_dc);
    out.num_v_o = pi * i_ls * r * f_b * e1 * (e1 - 1.0);

    const double fb2 = f_b * f_b;
    const std::array<cplx, 11> terms{
        cplx(f_b),
        -2.0 * f_b * e1,
        f_b * e2,
        j * (2.0 * pi * p.c_o * r * fb2),
        -4.0 * d * d * f1 * pi * pi * e1,
        -j * (4.0 * pi * p.c_o * r * fb2) * e1,
        j * (2.0 * pi * p.c_o * r * fb2) * e2,
        16.0 * p.c_dc * p.l * f1 * fb2 * std::pow(pi, 4) * e1,
        -j * (8.0 * p.c_dc * r * f1 * f_b * std::pow(pi, 3)) * e1,
        -j * (8.0 * p.c_o * d * d * r * f1 * f_b * std::pow(pi, 3)) * e1,
        j * (32.0 * p.c_dc * p.c_o * p.l * r * f1 * fb2 * f_b * std::pow(pi, 5)) * e1,
    };
    double scale = 0.0;
    for (const cplx& t : terms) {
        out.den += t;
        scale += std::abs(t);
    }
    out.near_singular = std::abs(out.den) < 1e-9 * scale;
    out.v_dc = out.num_v_dc / out.den;
    out.v_o = out.num_v_o / out.den;
    return out;
}

double critical_frequency(const CircuitParams& params) {
    const double lo = 10.0;
    const double hi = 0.5 * params.f1;
    if (!(hi > lo)) {
        throw ValidationError("circuit.f1 too low for the critical-frequency scan");
    }
    const double decades = std::log10(hi / lo);
    const int n = static_cast<int>(std::ceil(decades * critical_scan_points_per_decade));
    auto at = [&](int i) { return lo * std::pow(10.0, decades * i / n); };

    int best = 0;
    double best_val = abs_den(params, lo);
    for (int i = 1; i <= n; ++i) {
        const double v = abs_den(params, at(i));
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best == 0 || best == n) {
        throw NoResonance("|Den| has no interior minimum in [" + format_double(lo) + ", " +
                          format_double(hi) + "] Hz");
    }

    // Golden-section on log f between the neighbouring scan points.
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(at(best - 1));
    double b = std::log(at(best + 1));
    double c = b - g * (b - a);
    double e = a + g * (b - a);
    double fc = abs_den(params, std::exp(c));
    double fe = abs_den(params, std::exp(e));
    while (b - a > 1e-12) {
        if (fc < fe) {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = abs_den(params, std::exp(c));
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = abs_den(params, std::exp(e));
        }
    }
    return std::exp(0.5 * (a + b));
}

double averaged_output_voltage(const CircuitParams& p) {
    return p.i_ls_amplitude * p.r_load / (pi * p.duty);
}

void set_circuit_parameter(CircuitParams& p, const std::string& name, double value) {
    if (name == "i_ls_amplitude") {
        p.i_ls_amplitude = value;
    } else if (name == "f1") {
        p.f1 = value;
    } else if (name == "f2") {
        p.f2 = value;
    } else if (name == "duty") {
        p.duty = value;
    } else if (name == "c_dc") {
        p.c_dc = value;
    } else if (name == "l") {
        p.l = value;
    } else if (name == "c_o") {
        p.c_o = value;
    } else if (name == "r_load") {
        p.r_load = value;
    } else if (name == "switch_phase") {
        p.switch_phase = value;
    } else {
        throw ValidationError("unknown circuit parameter '" + name + "'");
    }
}

SweepResult sweep_beat(const CircuitParams& params, const SweepOptions& options) {
    if (options.f_b_hz.empty()) {
        throw ValidationError("sweep.f_b_hz must not be empty");
    }
    for (double f : options.f_b_hz) {
        if (!(f > 0.0)) {
            throw ValidationError("sweep.f_b_hz values must be positive");
        }
    }

    std::vector<std::pair<SweepConfiguration, CircuitParams>> configs;
    if (options.overrides.empty()) {
        configs.push_back({SweepConfiguration{"baseline", 0.0, {}, {}}, params});
    }
    for (const auto& [name, values] : options.overrides) {
        if (values.empty()) {
            throw ValidationError("sweep override '" + name + "' has no values");
        }
        for (double v : values) {
            if (!(v > 0.0)) {
                throw ValidationError("sweep override '" + name + "' values must be positive");
            }
            CircuitParams p = params;
            set_circuit_parameter(p, name, v);
            configs.push_back({SweepConfiguration{name, v, {}, {}}, p});
        }
    }

    SweepResult out;
    out.axis = options.f_b_hz;
    for (auto& [cfg, p] : configs) {
        try {
            cfg.f_cr_hz = critical_frequency(p);
        } catch (const Error& e) {
            cfg.f_cr_note = e.what();
        }
        const double v_o0 = averaged_output_voltage(p);
        for (double f_b : options.f_b_hz) {
            SweepPoint pt;
            pt.f_b_hz = f_b;
            pt.param_name = cfg.param_name;
            pt.param_value = cfg.param_value;
            const BeatComponents bc = beat_component_closed_form(p, f_b);
            pt.v_dc_beat = std::abs(bc.v_dc);
            pt.v_o_beat = std::abs(bc.v_o);
            pt.v_o_beat_norm_db = 20.0 * std::log10(pt.v_o_beat / v_o0);
            pt.near_singular = bc.near_singular;
            if (options.full_solve) {
                try {
                    CircuitParams q = p;
                    q.f2 = p.f1 - f_b;
                    if (!(q.f2 > 0.0)) {
                        throw ValidationError("f_b >= f1 leaves no switching frequency");
                    }
                    const FrequencyGrid grid = build_frequency_grid(q.f1, q.f2, 1e-9,
                                                                    options.full_solve_m_max);
                    const SteadyStateSolution sol = solve_steady_state(q, grid);
                    pt.full_v_dc_beat = line_amplitude(sol, Signal::v_dc, grid.beat_index);
                    pt.full_v_o_beat = line_amplitude(sol, Signal::v_o, grid.beat_index);
                } catch (const Error& e) {
                    pt.full_solve_note = e.what();
                }
            }
            out.points.push_back(std::move(pt));
        }
        out.configurations.push_back(cfg);
    }
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    bool full = false;
    for (const auto& pt : result.points) {
        full = full || pt.full_v_o_beat.has_value() || !pt.full_solve_note.empty();
    }
    out << "f_b_hz,param_name,param_value,v_dc_beat_V,v_o_beat_V,v_o_beat_norm_db";
    if (full) {
        out << ",full_v_dc_beat_V,full_v_o_beat_V";
    }
    out << '\n';
    auto opt = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string("nan");
    };
    for (const auto& pt : result.points) {
        out << format_double(pt.f_b_hz) << ',' << pt.param_name << ','
            << format_double(pt.param_value) << ',' << format_double(pt.v_dc_beat) << ','
            << format_double(pt.v_o_beat) << ',' << format_double(pt.v_o_beat_norm_db);
        if (full) {
            out << ',' << opt(pt.full_v_dc_beat) << ',' << opt(pt.full_v_o_beat);
        }
        out << '\n';
    }
}

void DesignSpec::validate() const {
    if (!(x_dc > 0.0 && x_dc < 1.0)) {
        throw ValidationError("design.x_dc must lie in (0, 1)");
    }
    if (!(v_dc0 > 0.0)) {
        throw ValidationError("design.v_dc0 must be positive");
    }
}

CapacitorDesign design_capacitors(const CircuitParams& params, const DesignSpec& spec) {
    spec.validate();
    params.validate();
    CapacitorDesign out;
    out.c_dc_charge_term = params.i_ls_amplitude / (2.0 * spec.x_dc * spec.v_dc0 * pi * params.f1);
    out.c_dc_switching_term = params.duty / (2.0 * spec.x_dc * params.r_load * params.f2);
    out.c_dc_min = std::max(out.c_dc_charge_term, out.c_dc_switching_term);
    const double f_b = std::abs(params.f1 - params.f2);
    if (f_b <= 1e-9 * params.f1) {
        out.zero_beat_frequency = true;
        out.c_o_min = 0.0;
    } else {
        out.c_o_min = 1.0 / (4.0 * pi * pi * f_b * f_b * params.l);
    }
    return out;
}

std::string_view plan_class_name(FrequencyPlanClass c) {
    switch (c) {
    case FrequencyPlanClass::synchronized:
        return "SYNCHRONIZED";
    case FrequencyPlanClass::separated:
        return "SEPARATED";
    case FrequencyPlanClass::at_risk:
        return "AT_RISK";
    }
    return "AT_RISK";
}

FrequencyPlan recommend_frequency_plan(double f1, double f2) {
    if (!(f1 > 0.0 && f2 > 0.0)) {
        throw ValidationError("frequency plan needs positive f1 and f2");
    }
    FrequencyPlan plan;
    plan.f_b_hz = std::abs(f1 - f2);
    plan.f2_below_hz = f1 / 5.0;
    plan.f2_above_hz = 5.0 * f1;
    if (plan.f_b_hz <= 1e-9 * f1) {
        plan.f_b_hz = 0.0;
        plan.classification = FrequencyPlanClass::synchronized;
    } else if (f1 > 5.0 * f2 || f2 > 5.0 * f1) {
        plan.classification = FrequencyPlanClass::separated;
    } else {
        plan.classification = FrequencyPlanClass::at_risk;
        plan.remedies = {
            "lower f2 below f1/5 = " + format_fixed(plan.f2_below_hz) + " Hz",
            "raise f2 above 5*f1 = " + format_fixed(plan.f2_above_hz) + " Hz",
            "synchronize f2 to f1 = " + format_fixed(f1) + " Hz so that f_b = 0",
        };
    }
    return plan;
}

}  // namespace beatosc
