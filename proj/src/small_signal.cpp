#include "beatosc/small_signal.hpp"

#include "beatosc/errors.hpp"
#include "beatosc/format.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace beatosc {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Gaussian elimination for an upper Hessenberg matrix; pivoting only ever
// needs to look one row down.
CVector solve_hessenberg(CMatrix m, CVector rhs) {
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
        if (std::abs(m(j + 1, j)) > std::abs(m(j, j))) {
            for (Eigen::Index c = j; c < n; ++c) {
                std::swap(m(j, c), m(j + 1, c));
            }
            std::swap(rhs(j), rhs(j + 1));
        }
        if (m(j, j) == cplx{}) {
            throw SingularSystem("shifted Hessenberg matrix is singular");
        }
        const cplx factor = m(j + 1, j) / m(j, j);
        if (factor != cplx{}) {
            for (Eigen::Index c = j + 1; c < n; ++c) {
                m(j + 1, c) -= factor * m(j, c);
            }
            rhs(j + 1) -= factor * rhs(j);
        }
        m(j + 1, j) = cplx{};
    }
    CVector x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        cplx acc = rhs(i);
        for (Eigen::Index c = i + 1; c < n; ++c) {
            acc -= m(i, c) * x(c);
        }
        if (m(i, i) == cplx{}) {
            throw SingularSystem("shifted Hessenberg matrix is singular");
        }
        x(i) = acc / m(i, i);
    }
    return x;
}

bool on_resonant_pole(const CompensatorParams& comp, double f) {
    return std::abs(f - comp.f_b_target) <= 1e-9 * comp.f_b_target;
}

}  // namespace

LinearizedModel linearize(const CircuitParams& params, const FrequencyGrid& grid) {
    LinearizedModel model;
    model.operating_point = solve_steady_state(params, grid);
    const HarmonicSystem sys = assemble_system(params, grid);
    model.a = sys.a;

    const int n = sys.block;
    const CMatrix ds = convolution_matrix(
        switching_spectrum_derivative(params.duty, grid, params.switch_phase), grid.k_max);
    model.b = CVector::Zero(3 * n);
    model.b.segment(0, n) = -(ds * model.operating_point.i_l.coeffs()) / params.c_dc;
    model.b.segment(n, n) = (ds * model.operating_point.v_dc.coeffs()) / params.l;
    model.output_index = 2 * n + grid.k_max;
    return model;
}

ResponseEvaluator::ResponseEvaluator(const LinearizedModel& model) {
    const Eigen::HessenbergDecomposition<CMatrix> hd(model.a);
    h_ = hd.matrixH();
    const CMatrix q = hd.matrixQ();
    qb_ = q.adjoint() * model.b;
    cq_ = q.row(model.output_index);
}

cplx ResponseEvaluator::operator()(double f_hz) const {
    CMatrix shifted = -h_;
    shifted.diagonal().array() += cplx(0.0, two_pi * f_hz);
    return cq_ * solve_hessenberg(std::move(shifted), qb_);
}

FrequencyResponse duty_to_output_response(const CircuitParams& params, const FrequencyGrid& grid,
                                          const std::vector<double>& freqs) {
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        if (!(freqs[i] > 0.0) || !(freqs[i] < 0.5 * params.f2)) {
            throw ValidationError("response frequencies must lie in (0, f2/2)");
        }
        if (i > 0 && !(freqs[i] > freqs[i - 1])) {
            throw ValidationError("response frequencies must be strictly increasing");
        }
    }
    const ResponseEvaluator plant(linearize(params, grid));
    FrequencyResponse out;
    out.reference = "duty -> V_o<0> (V per unit duty)";
    out.f_hz = freqs;
    out.gain.reserve(freqs.size());
    for (double f : freqs) {
        out.gain.push_back(plant(f));
    }
    return out;
}

std::vector<double> log_frequency_grid(double f_min, double f_max, int points_per_decade) {
    if (!(f_min > 0.0 && f_max > f_min) || points_per_decade < 1) {
        throw ValidationError("log grid needs 0 < f_min < f_max and points_per_decade >= 1");
    }
    const double decades = std::log10(f_max / f_min);
    const auto steps = static_cast<int>(std::ceil(decades * points_per_decade - 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        out.push_back(f_min * std::pow(10.0, std::min(decades, static_cast<double>(i) /
                                                                   points_per_decade)));
    }
    return out;
}

std::vector<double> default_bode_scan() { return log_frequency_grid(1.0, 1e5, 200); }

double gain_db(cplx g) { return 20.0 * std::log10(std::abs(g)); }

double phase_deg(cplx g) { return std::arg(g) * 180.0 / std::numbers::pi; }

FrequencyResponse loop_response(const ResponseEvaluator& plant, const CompensatorParams& comp,
                                const std::vector<double>& scan) {
    FrequencyResponse out;
    out.reference = "loop gain T = compensator * G";
    for (double f : scan) {
        if (on_resonant_pole(comp, f)) {
            continue;
        }
        out.f_hz.push_back(f);
        out.gain.push_back(compensator_response(comp, cplx(0.0, two_pi * f)) * plant(f));
    }
    return out;
}

LoopMetrics loop_metrics(const ResponseEvaluator& plant, const CompensatorParams& comp,
                         const std::vector<double>& scan, const std::vector<double>& report_at) {
    comp.validate();
    const FrequencyResponse loop = loop_response(plant, comp, scan);
    auto loop_at = [&](double f) {
        return compensator_response(comp, cplx(0.0, two_pi * f)) * plant(f);
    };

    LoopMetrics m;
    for (std::size_t i = 1; i < loop.f_hz.size(); ++i) {
        const double g0 = gain_db(loop.gain[i - 1]);
        const double g1 = gain_db(loop.gain[i]);
        if ((g0 > 0.0) == (g1 > 0.0)) {
            continue;
        }
        // Log-linear interpolation of the unity crossing.
        const double l0 = std::log10(loop.f_hz[i - 1]);
        const double l1 = std::log10(loop.f_hz[i]);
        const double f = std::pow(10.0, l0 + (l1 - l0) * g0 / (g0 - g1));
        m.unity_crossings_hz.push_back(f);
        if (!m.crossover_hz && g0 > 0.0) {
            m.crossover_hz = f;
            m.phase_margin_deg = 180.0 + phase_deg(loop_at(f));
        }
    }
    if (!m.crossover_hz) {
        throw NoCrossover("|T| never crosses unity downward between " +
                          format_double(scan.empty() ? 0.0 : scan.front()) + " and " +
                          format_double(scan.empty() ? 0.0 : scan.back()) + " Hz");
    }
    for (double f : report_at) {
        const double db = on_resonant_pole(comp, f) && comp.k_b != 0.0
                              ? std::numeric_limits<double>::infinity()
                              : gain_db(loop_at(f));
        m.gain_db_at.emplace_back(f, db);
    }
    return m;
}

LoopMetrics loop_metrics(const CircuitParams& params, const FrequencyGrid& grid,
                         const CompensatorParams& comp, const std::vector<double>& scan,
                         const std::vector<double>& report_at) {
    const ResponseEvaluator plant(linearize(params, grid));
    return loop_metrics(plant, comp, scan, report_at);
}

void write_bode_csv(std::ostream& out, const FrequencyResponse& response) {
    out << "f_hz,gain_db,phase_deg\n";
    for (std::size_t i = 0; i < response.f_hz.size(); ++i) {
        out << format_double(response.f_hz[i]) << ',' << format_double(gain_db(response.gain[i]))
            << ',' << format_double(phase_deg(response.gain[i])) << '\n';
    }
}

}  // namespace beatosc
