#include "beatosc/cli.hpp"

#include "beatosc/errors.hpp"
#include "beatosc/format.hpp"
#include "beatosc/small_signal.hpp"
#include "beatosc/steady_state.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace beatosc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config reading
// ---------------------------------------------------------------------------

class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (!doc.is_object()) {
            throw ValidationError(name_ + " must be an object");
        }
        doc_ = &doc;
    }

    void number(const char* key, double& dst) {
        if (const json* v = take(key)) {
            if (!v->is_number()) {
                throw ValidationError(path(key) + " must be a number");
            }
            dst = v->get<double>();
        }
    }

    void integer(const char* key, int& dst) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) {
                throw ValidationError(path(key) + " must be an integer");
            }
            dst = v->get<int>();
        }
    }

    void boolean(const char* key, bool& dst) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) {
                throw ValidationError(path(key) + " must be true or false");
            }
            dst = v->get<bool>();
        }
    }

    void string(const char* key, std::string& dst) {
        if (const json* v = take(key)) {
            if (!v->is_string()) {
                throw ValidationError(path(key) + " must be a string");
            }
            dst = v->get<std::string>();
        }
    }

    void numbers(const char* key, std::vector<double>& dst) {
        if (const json* v = take(key)) {
            dst = number_list(*v, path(key));
        }
    }

    const json* take(const char* key) {
        seen_.emplace_back(key);
        const auto it = doc_->find(key);
        return it == doc_->end() ? nullptr : &*it;
    }

    bool has(const char* key) const { return doc_->contains(key); }

    /// Rejects keys that no reader asked for.
    void finish() const {
        for (const auto& [key, value] : doc_->items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ValidationError("unknown field '" + path(key) + "'");
            }
        }
    }

    std::string path(const std::string& key) const {
        return name_.empty() ? key : name_ + "." + key;
    }

    static std::vector<double> number_list(const json& v, const std::string& where) {
        std::vector<double> out;
        if (v.is_number()) {
            out.push_back(v.get<double>());
            return out;
        }
        if (!v.is_array()) {
            throw ValidationError(where + " must be a number or a list of numbers");
        }
        for (const auto& x : v) {
            if (!x.is_number()) {
                throw ValidationError(where + " must contain only numbers");
            }
            out.push_back(x.get<double>());
        }
        return out;
    }

private:
    const json* doc_ = nullptr;
    std::string name_;
    std::vector<std::string> seen_;
};

void read_circuit(const json& doc, CircuitParams& c) {
    Section s(doc, "circuit");
    s.number("i_ls_amplitude", c.i_ls_amplitude);
    s.number("f1", c.f1);
    s.number("f2", c.f2);
    s.number("duty", c.duty);
    s.number("c_dc", c.c_dc);
    s.number("l", c.l);
    s.number("c_o", c.c_o);
    s.number("r_load", c.r_load);
    s.number("switch_phase", c.switch_phase);
    s.finish();
}

void read_sim(const json& doc, SimConfig& c) {
    Section s(doc, "sim");
    s.integer("steps_per_switch_period", c.steps_per_switch_period);
    s.integer("settle_base_periods", c.settle_base_periods);
    s.integer("capture_base_periods", c.capture_base_periods);
    s.boolean("ccm_assumption", c.ccm_assumption);
    s.number("relative_settle_tolerance", c.relative_settle_tolerance);
    s.number("max_settle_time_s", c.max_settle_time_s);
    s.finish();
}

CompensatorParams read_compensators(const json& doc) {
    CompensatorParams c;
    Section s(doc, "compensators");
    s.number("k_c", c.k_c);
    s.number("f_z", c.f_z);
    s.number("f_p", c.f_p);
    s.number("k_b", c.k_b);
    s.number("f_b_target", c.f_b_target);
    s.number("v_ref", c.v_ref);
    s.number("polarity", c.polarity);
    std::string topology = "parallel";
    s.string("topology", topology);
    if (topology == "parallel") {
        c.topology = CompensatorTopology::parallel;
    } else if (topology == "cascade") {
        c.topology = CompensatorTopology::cascade;
    } else {
        throw ValidationError("compensators.topology must be \"parallel\" or \"cascade\"");
    }
    s.finish();
    return c;
}

void read_sweep(const json& doc, SweepSettings& c) {
    Section s(doc, "sweep");
    s.number("f_b_min_hz", c.f_b_min_hz);
    s.number("f_b_max_hz", c.f_b_max_hz);
    s.integer("points_per_decade", c.points_per_decade);
    s.boolean("full_solve", c.full_solve);
    s.integer("full_solve_m_max", c.full_solve_m_max);
    if (const json* o = s.take("overrides")) {
        if (!o->is_object()) {
            throw ValidationError("sweep.overrides must map parameter names to value lists");
        }
        c.overrides.clear();
        for (const auto& [name, values] : o->items()) {
            c.overrides.emplace_back(name,
                                     Section::number_list(values, "sweep.overrides." + name));
        }
    }
    s.finish();
}

void read_bode(const json& doc, BodeSettings& c) {
    Section s(doc, "bode");
    s.number("f_min_hz", c.f_min_hz);
    s.number("f_max_hz", c.f_max_hz);
    s.integer("points_per_decade", c.points_per_decade);
    s.numbers("report_at_hz", c.report_at_hz);
    s.finish();
}

void read_verify(const json& doc, VerifySettings& c) {
    Section s(doc, "verify");
    s.number("tolerance", c.tolerance);
    s.number("line_threshold", c.line_threshold);
    s.finish();
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

json num(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

std::string cell_text(const json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<long long>());
    }
    if (v.is_number()) {
        return format_double(v.get<double>());
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    return "";
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

class Reporter {
public:
    Reporter(fs::path dir, OutputFormat format) : dir_(std::move(dir)), format_(format) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw ValidationError("output_dir '" + dir_.string() + "' cannot be created: " +
                                  ec.message());
        }
    }

    void table(const std::string& stem, const Table& t) {
        if (format_ != OutputFormat::json) {
            std::ostringstream s;
            for (std::size_t i = 0; i < t.columns.size(); ++i) {
                s << (i ? "," : "") << t.columns[i];
            }
            s << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    s << (i ? "," : "") << cell_text(row[i]);
                }
                s << '\n';
            }
            write(stem + ".csv", s.str());
        }
        if (format_ != OutputFormat::csv) {
            json rows = json::array();
            for (const auto& row : t.rows) {
                json obj = json::object();
                for (std::size_t i = 0; i < row.size(); ++i) {
                    obj[t.columns[i]] = row[i];
                }
                rows.push_back(std::move(obj));
            }
            document(stem + ".json", json{{"columns", t.columns}, {"rows", rows}});
        }
    }

    void document(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n"); }

    const fs::path& dir() const { return dir_; }

private:
    void write(const std::string& name, const std::string& text) {
        const fs::path p = dir_ / name;
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw ValidationError("cannot write '" + p.string() + "'");
        }
        f << text;
        if (!f) {
            throw ValidationError("failed writing '" + p.string() + "'");
        }
        written_.push_back(p.string());
    }

    fs::path dir_;
    OutputFormat format_;
    std::vector<std::string> written_;
};

constexpr Signal all_signals[] = {Signal::v_dc, Signal::i_l, Signal::v_o};

TraceSignal trace_signal(Signal s) {
    switch (s) {
        case Signal::v_dc: return TraceSignal::v_dc;
        case Signal::i_l: return TraceSignal::i_l;
        case Signal::v_o: return TraceSignal::v_o;
    }
    return TraceSignal::v_o;
}

json grid_json(const FrequencyGrid& g) {
    return json{{"f_base_hz", num(g.f_base)},
                {"m1", g.m1},
                {"m2", g.m2},
                {"k_max", g.k_max},
                {"beat_index", g.beat_index},
                {"beat_frequency_hz", num(g.beat_frequency())}};
}

json circuit_json(const CircuitParams& c) {
    return json{{"i_ls_amplitude", num(c.i_ls_amplitude)},
                {"f1", num(c.f1)},
                {"f2", num(c.f2)},
                {"duty", num(c.duty)},
                {"c_dc", num(c.c_dc)},
                {"l", num(c.l)},
                {"c_o", num(c.c_o)},
                {"r_load", num(c.r_load)},
                {"switch_phase", num(c.switch_phase)}};
}

const CompensatorParams& require_compensators(const RunConfig& cfg, const char* what) {
    if (!cfg.compensators) {
        throw ValidationError(std::string(what) + " needs a 'compensators' section");
    }
    cfg.compensators->validate();
    return *cfg.compensators;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_solve(const RunConfig& cfg, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    const FrequencyGrid grid = cfg.circuit.grid();
    const SteadyStateSolution sol = solve_steady_state(cfg.circuit, grid);

    json summary{{"command", "solve"},
                 {"circuit", circuit_json(cfg.circuit)},
                 {"grid", grid_json(grid)},
                 {"residual_norm", num(sol.residual_norm)},
                 {"condition_estimate", num(sol.condition_estimate)}};
    for (Signal s : all_signals) {
        const std::string unit(signal_unit(s));
        const HarmonicVector& h = sol.signal(s);
        const double dc = std::abs(h.at(0));
        Table t{{"k", "f_hz", "re_" + unit, "im_" + unit, "amplitude_" + unit,
                 "amplitude_db_norm_dB"},
                {}};
        for (int k = 0; k <= grid.k_max; ++k) {
            const cplx c = h.at(k);
            const double amp = line_amplitude(h, k);
            t.rows.push_back({k, num(k * grid.f_base), num(c.real()), num(c.imag()), num(amp),
                              num(20.0 * std::log10(amp / dc))});
        }
        const std::string name(signal_name(s));
        rep.table("solve_" + name, t);
        summary["dc"][name + "_" + unit] = num(h.at(0).real());
        if (grid.beat_index > 0) {
            summary["beat"][name + "_" + unit] = num(line_amplitude(h, grid.beat_index));
        }
    }
    if (grid.beat_index == 0) {
        summary["beat"] = nullptr;
    }
    rep.document("solve_summary.json", summary);

    out << "grid: f_base = " << format_double(grid.f_base) << " Hz, K = " << grid.k_max
        << ", beat index = " << grid.beat_index << '\n';
    out << "dc: v_dc = " << format_double(sol.v_dc.at(0).real())
        << " V, i_l = " << format_double(sol.i_l.at(0).real())
        << " A, v_o = " << format_double(sol.v_o.at(0).real()) << " V\n";
    if (grid.beat_index > 0) {
        out << "beat (" << format_double(grid.beat_frequency()) << " Hz): v_dc = "
            << format_double(line_amplitude(sol, Signal::v_dc, grid.beat_index))
            << " V, v_o = " << format_double(line_amplitude(sol, Signal::v_o, grid.beat_index))
            << " V\n";
    }
    return exit_ok;
}

int cmd_simulate(const RunConfig& cfg, bool closed_loop, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    cfg.sim.validate();
    SwitchedSimulator sim(cfg.circuit, cfg.sim);
    if (closed_loop) {
        sim.set_duty_law(make_closed_loop_law(cfg.circuit, require_compensators(cfg, "--closed-loop")));
    }
    const std::int64_t settled = sim.settle();
    const Trace trace = sim.capture(cfg.sim.capture_base_periods);
    const FrequencyGrid& grid = sim.grid();

    Table tt{{"t_s", "v_dc_V", "i_l_A", "v_o_V", "i_r_A", "s_sw", "duty"}, {}};
    tt.rows.reserve(trace.size());
    for (std::size_t j = 0; j < trace.size(); ++j) {
        tt.rows.push_back({num(trace.time(j)), num(trace.v_dc[j]), num(trace.i_l[j]),
                           num(trace.v_o[j]), num(trace.i_r[j]), num(trace.s_sw[j]),
                           num(trace.duty[j])});
    }
    rep.table("trace", tt);

    std::vector<HarmonicVector> spectra;
    for (Signal s : all_signals) {
        spectra.push_back(spectrum_of(trace, grid, trace_signal(s)));
    }
    Table st{{"k", "f_hz", "v_dc_V", "i_l_A", "v_o_V"}, {}};
    for (int k = 0; k <= grid.k_max; ++k) {
        st.rows.push_back({k, num(k * grid.f_base), num(line_amplitude(spectra[0], k)),
                           num(line_amplitude(spectra[1], k)), num(line_amplitude(spectra[2], k))});
    }
    rep.table("spectrum", st);

    json summary{{"command", "simulate"},
                 {"closed_loop", closed_loop},
                 {"circuit", circuit_json(cfg.circuit)},
                 {"grid", grid_json(grid)},
                 {"settle_base_periods", settled},
                 {"capture_base_periods", cfg.sim.capture_base_periods},
                 {"samples", trace.size()},
                 {"events", trace.events.size()}};
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string key =
            std::string(signal_name(all_signals[i])) + "_" + std::string(signal_unit(all_signals[i]));
        summary["dc"][key] = num(spectra[i].at(0).real());
        summary["beat"][key] =
            grid.beat_index > 0 ? num(line_amplitude(spectra[i], grid.beat_index)) : json(nullptr);
    }
    rep.document("simulate_summary.json", summary);

    out << "settled after " << settled << " base periods; captured " << trace.size()
        << " samples\n";
    out << "dc: v_dc = " << format_double(spectra[0].at(0).real())
        << " V, v_o = " << format_double(spectra[2].at(0).real()) << " V\n";
    return exit_ok;
}

int cmd_verify(const RunConfig& cfg, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    cfg.sim.validate();
    if (!(cfg.verify.tolerance > 0.0)) {
        throw ValidationError("verify.tolerance must be positive");
    }
    const FrequencyGrid grid = cfg.circuit.grid();
    const SteadyStateSolution sol = solve_steady_state(cfg.circuit, grid);
    const Trace trace = simulate(cfg.circuit, cfg.sim);

    Table t{{"signal", "unit", "k", "f_hz", "model_amplitude", "sim_amplitude",
             "rel_error", "status"},
            {}};
    bool pass = true;
    for (Signal s : all_signals) {
        const HarmonicVector& model = sol.signal(s);
        const HarmonicVector measured = spectrum_of(trace, grid, trace_signal(s));
        const double dc = std::abs(model.at(0));
        for (int k = 0; k <= grid.k_max; ++k) {
            const double a = line_amplitude(model, k);
            if (a < cfg.verify.line_threshold * dc) {
                continue;
            }
            const double b = line_amplitude(measured, k);
            const double err = std::abs(b - a) / a;
            const bool ok = err <= cfg.verify.tolerance;
            pass = pass && ok;
            t.rows.push_back({std::string(signal_name(s)), std::string(signal_unit(s)), k,
                              num(k * grid.f_base), num(a), num(b), num(err),
                              ok ? "PASS" : "FAIL"});
        }
    }
    rep.table("verify", t);

    out << std::left << std::setw(8) << "signal" << std::setw(6) << "k" << std::setw(12)
        << "f_hz" << std::setw(14) << "model" << std::setw(14) << "sim" << std::setw(12)
        << "rel_err" << "status\n";
    for (const auto& row : t.rows) {
        out << std::setw(8) << cell_text(row[0]) << std::setw(6) << cell_text(row[2])
            << std::setw(12) << cell_text(row[3]) << std::setw(14)
            << format_double(std::round(row[4].get<double>() * 1e6) / 1e6) << std::setw(14)
            << format_double(std::round(row[5].get<double>() * 1e6) / 1e6) << std::setw(12)
            << format_double(std::round(row[6].get<double>() * 1e6) / 1e6) << cell_text(row[7])
            << '\n';
    }
    out << (pass ? "PASS" : "FAIL") << ": " << t.rows.size() << " lines at tolerance "
        << format_double(cfg.verify.tolerance) << '\n';
    return pass ? exit_ok : exit_verify_failed;
}

int cmd_bode(const RunConfig& cfg, bool loop, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    std::vector<double> scan;
    const double limit = 0.5 * cfg.circuit.f2;
    for (double f : log_frequency_grid(cfg.bode.f_min_hz, cfg.bode.f_max_hz,
                                       cfg.bode.points_per_decade)) {
        if (f < limit) {
            scan.push_back(f);
        }
    }
    if (scan.size() < 2) {
        throw ValidationError("bode scan has fewer than two points below f2/2");
    }
    const FrequencyGrid grid = cfg.circuit.grid();
    const LinearizedModel model = linearize(cfg.circuit, grid);
    const ResponseEvaluator plant(model);

    json summary{{"command", "bode"},
                 {"circuit", circuit_json(cfg.circuit)},
                 {"scan_f_min_hz", num(scan.front())},
                 {"scan_f_max_hz", num(scan.back())},
                 {"points", scan.size()}};

    if (!loop) {
        FrequencyResponse g;
        g.f_hz = scan;
        for (double f : scan) {
            g.gain.push_back(plant(f));
        }
        Table t{{"f_hz", "gain_db", "phase_deg"}, {}};
        for (std::size_t i = 0; i < g.f_hz.size(); ++i) {
            t.rows.push_back({num(g.f_hz[i]), num(gain_db(g.gain[i])), num(phase_deg(g.gain[i]))});
        }
        rep.table("bode_plant", t);
        summary["response"] = "duty -> v_o<0>, V per unit duty";
        summary["dc_gain_db"] = num(gain_db(plant(scan.front())));
        rep.document("bode_summary.json", summary);
        out << "plant |G| at " << format_double(scan.front())
            << " Hz = " << format_double(gain_db(plant(scan.front()))) << " dB\n";
        return exit_ok;
    }

    const CompensatorParams& comp = require_compensators(cfg, "bode --loop");
    const FrequencyResponse t_resp = loop_response(plant, comp, scan);
    Table t{{"f_hz", "gain_db", "phase_deg"}, {}};
    for (std::size_t i = 0; i < t_resp.f_hz.size(); ++i) {
        t.rows.push_back(
            {num(t_resp.f_hz[i]), num(gain_db(t_resp.gain[i])), num(phase_deg(t_resp.gain[i]))});
    }
    rep.table("bode_loop", t);

    const LoopMetrics m = loop_metrics(plant, comp, scan, cfg.bode.report_at_hz);
    json crossings = json::array();
    for (double f : m.unity_crossings_hz) {
        crossings.push_back(num(f));
    }
    json at = json::array();
    for (const auto& [f, db] : m.gain_db_at) {
        at.push_back(json{{"f_hz", num(f)}, {"gain_db", num(db)}});
    }
    summary["response"] = "loop gain T = compensator * G";
    summary["metrics"] = json{{"crossover_hz", num(*m.crossover_hz)},
                              {"phase_margin_deg", num(*m.phase_margin_deg)},
                              {"unity_crossings_hz", crossings},
                              {"gain_db_at", at}};
    rep.document("loop_metrics.json", summary);

    out << "crossover " << format_double(*m.crossover_hz) << " Hz, phase margin "
        << format_double(*m.phase_margin_deg) << " deg\n";
    for (const auto& [f, db] : m.gain_db_at) {
        out << "|T| at " << format_double(f) << " Hz = " << format_double(db) << " dB\n";
    }
    return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    SweepOptions opt;
    opt.f_b_hz = log_frequency_grid(cfg.sweep.f_b_min_hz, cfg.sweep.f_b_max_hz,
                                    cfg.sweep.points_per_decade);
    opt.overrides = cfg.sweep.overrides;
    opt.full_solve = cfg.sweep.full_solve;
    opt.full_solve_m_max = cfg.sweep.full_solve_m_max;
    const SweepResult r = sweep_beat(cfg.circuit, opt);

    Table t{{"f_b_hz", "param_name", "param_value", "v_dc_beat_V", "v_o_beat_V",
             "v_o_beat_norm_db"},
            {}};
    if (opt.full_solve) {
        t.columns.insert(t.columns.end(), {"full_v_dc_beat_V", "full_v_o_beat_V", "near_singular"});
    }
    for (const auto& pt : r.points) {
        std::vector<json> row{num(pt.f_b_hz),    pt.param_name,     num(pt.param_value),
                              num(pt.v_dc_beat), num(pt.v_o_beat), num(pt.v_o_beat_norm_db)};
        if (opt.full_solve) {
            row.push_back(pt.full_v_dc_beat ? num(*pt.full_v_dc_beat) : json("nan"));
            row.push_back(pt.full_v_o_beat ? num(*pt.full_v_o_beat) : json("nan"));
            row.push_back(pt.near_singular);
        }
        t.rows.push_back(std::move(row));
    }
    rep.table("sweep", t);

    json configs = json::array();
    for (const auto& c : r.configurations) {
        configs.push_back(json{{"param_name", c.param_name},
                               {"param_value", num(c.param_value)},
                               {"f_cr_hz", c.f_cr_hz ? num(*c.f_cr_hz) : json(nullptr)},
                               {"note", c.f_cr_note}});
        out << c.param_name << " = " << format_double(c.param_value) << ": f_cr = "
            << (c.f_cr_hz ? format_double(*c.f_cr_hz) + " Hz" : c.f_cr_note) << '\n';
    }
    rep.document("sweep_summary.json",
                 json{{"command", "sweep"},
                      {"circuit", circuit_json(cfg.circuit)},
                      {"normalization",
                       "v_o_beat_norm_db = 20 log10(|V_o beat| / (I_Ls R / (pi D)))"},
                      {"points", r.points.size()},
                      {"configurations", configs}});
    return exit_ok;
}

int cmd_design(const RunConfig& cfg, Reporter& rep, std::ostream& out) {
    cfg.circuit.validate();
    DesignSpec spec = cfg.design.value_or(DesignSpec{});
    std::string v_dc0_source = "config";
    if (!cfg.design_v_dc0_given) {
        spec.v_dc0 = solve_steady_state(cfg.circuit).v_dc.at(0).real();
        v_dc0_source = "harmonic solve";
    }
    const CapacitorDesign d = design_capacitors(cfg.circuit, spec);
    const FrequencyPlan plan = recommend_frequency_plan(cfg.circuit.f1, cfg.circuit.f2);

    rep.document("design.json",
                 json{{"command", "design"},
                      {"circuit", circuit_json(cfg.circuit)},
                      {"x_dc", num(spec.x_dc)},
                      {"v_dc0_V", num(spec.v_dc0)},
                      {"v_dc0_source", v_dc0_source},
                      {"c_dc_min_F", num(d.c_dc_min)},
                      {"c_dc_charge_term_F", num(d.c_dc_charge_term)},
                      {"c_dc_switching_term_F", num(d.c_dc_switching_term)},
                      {"c_o_min_F", num(d.c_o_min)},
                      {"zero_beat_frequency", d.zero_beat_frequency},
                      {"frequency_plan",
                       json{{"classification", std::string(plan_class_name(plan.classification))},
                            {"f_b_hz", num(plan.f_b_hz)},
                            {"f2_below_hz", num(plan.f2_below_hz)},
                            {"f2_above_hz", num(plan.f2_above_hz)},
                            {"remedies", plan.remedies}}}});

    out << "c_dc_min = " << format_double(d.c_dc_min) << " F, c_o_min = "
        << format_double(d.c_o_min) << " F\n";
    out << "frequency plan: " << plan_class_name(plan.classification) << '\n';
    for (const auto& r : plan.remedies) {
        out << "  - " << r << '\n';
    }
    return exit_ok;
}

}  // namespace

void apply_override(json& doc, const std::string& dotted_path, const std::string& value) {
    if (dotted_path.empty() || dotted_path.front() == '.' || dotted_path.back() == '.') {
        throw ValidationError("malformed override path '" + dotted_path + "'");
    }
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) {
        parsed = value;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_path.find('.', start);
        const std::string key = dotted_path.substr(start, dot - start);
        if (key.empty()) {
            throw ValidationError("malformed override path '" + dotted_path + "'");
        }
        if (node->is_null()) {
            *node = json::object();
        }
        if (!node->is_object()) {
            throw ValidationError("override '" + dotted_path + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[key] = std::move(parsed);
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    Section top(doc, "");
    if (const json* v = top.take("circuit")) {
        read_circuit(*v, cfg.circuit);
    }
    if (const json* v = top.take("sim")) {
        read_sim(*v, cfg.sim);
    }
    if (const json* v = top.take("compensators")) {
        if (!v->is_null()) {
            cfg.compensators = read_compensators(*v);
        }
    }
    if (const json* v = top.take("design")) {
        if (!v->is_null()) {
            DesignSpec d;
            Section s(*v, "design");
            cfg.design_v_dc0_given = s.has("v_dc0");
            s.number("x_dc", d.x_dc);
            s.number("v_dc0", d.v_dc0);
            s.finish();
            cfg.design = d;
        }
    }
    if (const json* v = top.take("sweep")) {
        read_sweep(*v, cfg.sweep);
    }
    if (const json* v = top.take("bode")) {
        read_bode(*v, cfg.bode);
    }
    if (const json* v = top.take("verify")) {
        read_verify(*v, cfg.verify);
    }
    top.string("output_dir", cfg.output_dir);
    std::string format = "csv";
    top.string("format", format);
    if (format == "csv") {
        cfg.format = OutputFormat::csv;
    } else if (format == "json") {
        cfg.format = OutputFormat::json;
    } else if (format == "both") {
        cfg.format = OutputFormat::both;
    } else {
        throw ValidationError("format must be \"csv\", \"json\" or \"both\"");
    }
    top.finish();
    return cfg;
}

json read_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ValidationError("cannot open config file '" + path + "'");
    }
    json doc = json::parse(f, nullptr, false, true);
    if (doc.is_discarded()) {
        throw ValidationError("config file '" + path + "' is not valid JSON");
    }
    return doc;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    // Dotted overrides (--circuit.f2 200000 or --circuit.f2=200000) are pulled
    // out before CLI11 sees the arguments.
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        const std::size_t eq = a.find('=');
        const std::string name = a.substr(0, eq);
        if (a.rfind("--", 0) == 0 && name.find('.') != std::string::npos) {
            if (eq != std::string::npos) {
                overrides.emplace_back(name.substr(2), a.substr(eq + 1));
            } else if (i + 1 < args.size()) {
                overrides.emplace_back(name.substr(2), args[++i]);
            } else {
                err << "ValidationError: override " << a << " has no value\n";
                return exit_validation;
            }
            continue;
        }
        rest.push_back(a);
    }

    CLI::App app{"Beat-frequency analysis of a two-stage wireless power receiver", "beatosc"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string output_dir;
    std::string format;
    double tolerance = -1.0;
    bool closed_loop = false;
    bool loop = false;
    app.add_option("-c,--config", config_path, "JSON run configuration");
    app.add_option("-o,--output-dir", output_dir, "directory for report files");
    app.add_option("--format", format, "csv, json or both");

    auto* solve = app.add_subcommand("solve", "harmonic steady-state table");
    auto* simulate_cmd = app.add_subcommand("simulate", "switched simulation trace and spectrum");
    simulate_cmd->add_flag("--closed-loop", closed_loop, "regulate with the compensators");
    auto* verify = app.add_subcommand("verify", "harmonic model against simulation");
    verify->add_option("--tolerance", tolerance, "relative error allowed per line");
    auto* bode = app.add_subcommand("bode", "duty-to-output response or loop gain");
    bode->add_flag("--loop", loop, "loop gain with the compensators");
    auto* sweep = app.add_subcommand("sweep", "beat amplitude against beat frequency");
    auto* design = app.add_subcommand("design", "capacitor minima and frequency plan");
    for (auto* s : {solve, simulate_cmd, verify, bode, sweep, design}) {
        s->fallthrough();
    }

    std::vector<std::string> reversed(rest.rbegin(), rest.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_validation;
    }

    try {
        json doc = config_path.empty() ? json::object() : read_config_file(config_path);
        for (const auto& [path, value] : overrides) {
            apply_override(doc, path, value);
        }
        if (!format.empty()) {
            doc["format"] = format;
        }
        if (tolerance >= 0.0) {
            apply_override(doc, "verify.tolerance", format_double(tolerance));
        }
        RunConfig cfg = parse_config(doc);
        if (!output_dir.empty()) {
            cfg.output_dir = output_dir;
        }
        if (cfg.output_dir.empty()) {
            const char* env = std::getenv(output_dir_env);
            cfg.output_dir = env && *env ? env : "beatosc_out";
        }
        Reporter rep(cfg.output_dir, cfg.format);

        if (solve->parsed()) {
            return cmd_solve(cfg, rep, out);
        }
        if (simulate_cmd->parsed()) {
            return cmd_simulate(cfg, closed_loop, rep, out);
        }
        if (verify->parsed()) {
            return cmd_verify(cfg, rep, out);
        }
        if (bode->parsed()) {
            return cmd_bode(cfg, loop, rep, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(cfg, rep, out);
        }
        if (design->parsed()) {
            return cmd_design(cfg, rep, out);
        }
        return exit_validation;
    } catch (const Error& e) {
        err << e.what() << '\n';
        return e.category() == ErrorCategory::validation ? exit_validation : exit_numerical;
    } catch (const json::exception& e) {
        err << "ValidationError: " << e.what() << '\n';
        return exit_validation;
    }
}

}  // namespace beatosc::cli
