#pragma once

#include "beatosc/beat_analysis.hpp"
#include "beatosc/compensator.hpp"
#include "beatosc/excitation.hpp"
#include "beatosc/time_sim.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace beatosc::cli {

enum class OutputFormat { csv, json, both };

struct SweepSettings {
    double f_b_min_hz = 1e3;
    double f_b_max_hz = 1e5;
    int points_per_decade = 50;
    std::vector<std::pair<std::string, std::vector<double>>> overrides;
    bool full_solve = false;
    int full_solve_m_max = 100;
};

struct BodeSettings {
    double f_min_hz = 1.0;
    double f_max_hz = 1e5;  // clipped below f2 / 2
    int points_per_decade = 200;
    std::vector<double> report_at_hz{1.0, 15e3};
};

struct VerifySettings {
    double tolerance = 0.05;       // relative error per line
    double line_threshold = 0.01;  // lines below this fraction of DC are skipped
};

struct RunConfig {
    CircuitParams circuit;
    SimConfig sim;
    std::optional<CompensatorParams> compensators;
    std::optional<DesignSpec> design;
    // design.v_dc0 may be omitted; the harmonic solve then supplies it.
    bool design_v_dc0_given = false;
    SweepSettings sweep;
    BodeSettings bode;
    VerifySettings verify;
    std::string output_dir;
    OutputFormat format = OutputFormat::csv;
};

/// Sets `doc[a][b]...` from a dotted path. The value is read as JSON when it
/// parses (numbers, booleans, arrays) and as a plain string otherwise.
void apply_override(nlohmann::json& doc, const std::string& dotted_path, const std::string& value);

/// Converts a configuration document; unknown or mistyped fields raise
/// ValidationError naming the dotted field.
RunConfig parse_config(const nlohmann::json& doc);

nlohmann::json read_config_file(const std::string& path);

/// Entry point behind the beatosc executable. `args` excludes the program
/// name. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_numerical = 2;
inline constexpr int exit_verify_failed = 3;

inline constexpr const char* output_dir_env = "BEATOSC_OUTPUT_DIR";

}  // namespace beatosc::cli
