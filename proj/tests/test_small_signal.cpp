#include <catch2/catch_amalgamated.hpp>

#include "beatosc/errors.hpp"
#include "beatosc/small_signal.hpp"
#include "support/bench.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace beatosc;
using Catch::Approx;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

const LinearizedModel& nominal_model() {
    static const LinearizedModel m = [] {
        const CircuitParams p;
        return linearize(p, p.grid());
    }();
    return m;
}

const ResponseEvaluator& nominal_plant() {
    static const ResponseEvaluator g(nominal_model());
    return g;
}

// Stacked steady-state vector (V_DC, I_L, V_o).
CVector stacked(const SteadyStateSolution& s) {
    CVector x(3 * s.v_dc.size());
    x << s.v_dc.coeffs(), s.i_l.coeffs(), s.v_o.coeffs();
    return x;
}

CVector finite_difference_sensitivity(double delta) {
    CircuitParams up;
    CircuitParams dn;
    up.duty += delta;
    dn.duty -= delta;
    const FrequencyGrid g = up.grid();
    return (stacked(solve_steady_state(up, g)) - stacked(solve_steady_state(dn, g))) /
           (2.0 * delta);
}

}  // namespace

TEST_CASE("input vector has no output-capacitor block", "[small_signal]") {
    const LinearizedModel& m = nominal_model();
    const int n = static_cast<int>(m.b.size()) / 3;
    CHECK(m.b.segment(2 * n, n).norm() == 0.0);
    CHECK(m.b.segment(0, n).norm() > 0.0);
    CHECK(m.b.segment(n, n).norm() > 0.0);
    CHECK(m.output_index == 2 * n + n / 2);
}

TEST_CASE("state matrix is stable for the passive circuit", "[small_signal]") {
    const Eigen::ComplexEigenSolver<CMatrix> es(nominal_model().a, false);
    REQUIRE(es.info() == Eigen::Success);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(es.eigenvalues().real().maxCoeff() <= 1e-9 * scale);
}

TEST_CASE("input vector matches the finite-difference steady state", "[small_signal]") {
    const LinearizedModel& m = nominal_model();
    const CVector analytic = -m.a.partialPivLu().solve(m.b);
    const CVector fd = finite_difference_sensitivity(1e-5);
    const int n = static_cast<int>(m.b.size()) / 3;
    int checked = 0;
    for (int blk = 0; blk < 3; ++blk) {
        const double peak = analytic.segment(blk * n, n).cwiseAbs().maxCoeff();
        for (int i = blk * n; i < (blk + 1) * n; ++i) {
            if (std::abs(analytic[i]) >= 0.01 * peak) {
                ++checked;
                CHECK(std::abs(fd[i] - analytic[i]) <= 0.01 * std::abs(analytic[i]));
            }
        }
    }
    CHECK(checked >= 9);
}

TEST_CASE("low-frequency gain equals the DC sensitivity", "[small_signal]") {
    const LinearizedModel& m = nominal_model();
    const cplx dc = finite_difference_sensitivity(1e-5)[m.output_index];
    const cplx g = nominal_plant()(1e-3);
    CHECK(std::abs(g - dc) <= 0.01 * std::abs(dc));
    // Current-fed receiver: the output falls as the duty rises.
    CHECK(dc.real() < 0.0);
}

TEST_CASE("Hessenberg evaluation matches a dense solve", "[small_signal]") {
    const LinearizedModel& m = nominal_model();
    const Eigen::Index n = m.a.rows();
    for (double f : {1.0, 850.0, 14e3, 60e3}) {
        CMatrix shifted = -m.a;
        shifted.diagonal().array() += cplx(0.0, two_pi * f);
        const cplx dense = shifted.partialPivLu().solve(m.b)[m.output_index];
        CHECK(std::abs(nominal_plant()(f) - dense) <= 1e-9 * std::abs(dense));
    }
    CHECK(n == 483);
}

TEST_CASE("conjugate frequencies give conjugate gains", "[small_signal]") {
    for (double f : {3.0, 700.0, 9e3}) {
        const cplx g = nominal_plant()(f);
        const cplx h = nominal_plant()(-f);
        CHECK(std::abs(h - std::conj(g)) <= 1e-9 * std::abs(g));
    }
}

TEST_CASE("response rolls off at -40 dB per decade above the output filter", "[small_signal]") {
    // Slope measured well above the LC corner and the 14.4 kHz resonance.
    const double g1 = gain_db(nominal_plant()(40e3));
    const double g2 = gain_db(nominal_plant()(80e3));
    const double per_decade = (g2 - g1) / std::log10(2.0);
    CHECK(per_decade == Approx(-40.0).margin(8.0));
}

TEST_CASE("duty-to-output response validates its frequencies", "[small_signal]") {
    const CircuitParams p;
    const FrequencyGrid g = p.grid();
    CHECK_THROWS_AS(duty_to_output_response(p, g, {0.0, 10.0}), ValidationError);
    CHECK_THROWS_AS(duty_to_output_response(p, g, {10.0, 95e3}), ValidationError);
    CHECK_THROWS_AS(duty_to_output_response(p, g, {10.0, 10.0}), ValidationError);
    const FrequencyResponse r = duty_to_output_response(p, g, {10.0, 100.0});
    REQUIRE(r.gain.size() == 2);
    CHECK(r.gain[1] == nominal_plant()(100.0));
}

TEST_CASE("nominal loop metrics", "[small_signal]") {
    const CompensatorParams c;
    const LoopMetrics m = loop_metrics(nominal_plant(), c, default_bode_scan(), {1.0, 15e3});
    REQUIRE(m.crossover_hz);
    CHECK(*m.crossover_hz == Approx(1000.0).epsilon(0.10));
    CHECK(*m.phase_margin_deg == Approx(96.0).margin(5.0));
    REQUIRE(m.gain_db_at.size() == 2);
    CHECK(m.gain_db_at[0].second == Approx(47.0).margin(2.0));
    CHECK(std::isinf(m.gain_db_at[1].second));
    CHECK(m.unity_crossings_hz.size() == 3);
}

TEST_CASE("loop gain near the beat frequency with and without the resonant term", "[small_signal]") {
    CompensatorParams with;
    CompensatorParams without;
    without.k_b = 0.0;
    const std::vector<double> scan = default_bode_scan();
    const LoopMetrics a = loop_metrics(nominal_plant(), with, scan, {15e3 + 1.0});
    const LoopMetrics b = loop_metrics(nominal_plant(), without, scan, {15e3});
    CHECK(a.gain_db_at[0].second > 45.0);
    CHECK(b.gain_db_at[0].second < 45.0 - 20.0);
}

TEST_CASE("cascade topology changes the loop", "[small_signal]") {
    CompensatorParams c;
    c.topology = CompensatorTopology::cascade;
    const cplx a = loop_response(nominal_plant(), c, {1e3}).gain.at(0);
    const cplx b = loop_response(nominal_plant(), CompensatorParams{}, {1e3}).gain.at(0);
    CHECK(std::abs(a - b) > 0.1 * std::abs(b));
}

TEST_CASE("missing crossover is reported", "[small_signal]") {
    CompensatorParams c;
    c.k_c = 1e-6;
    c.k_b = 0.0;
    CHECK_THROWS_AS(loop_metrics(nominal_plant(), c, default_bode_scan()), NoCrossover);
}

TEST_CASE("loop scan drops the resonant pole", "[small_signal]") {
    const CompensatorParams c;
    const FrequencyResponse r = loop_response(nominal_plant(), c, {14e3, 15e3, 16e3});
    REQUIRE(r.f_hz.size() == 2);
    CHECK(r.f_hz[1] == 16e3);
}

TEST_CASE("duty perturbation of the switched circuit at 10 Hz", "[small_signal]") {
    const CircuitParams p;
    SwitchedSimulator sim(p, SimConfig{});
    sim.settle();
    const bench::PerturbationPoint pt = bench::measure_duty_response(sim, 10.0);
    const cplx model = nominal_plant()(pt.f_hz);
    INFO("f = " << pt.f_hz << " Hz, model " << gain_db(model) << " dB, measured "
                << gain_db(pt.measured) << " dB");
    CHECK(std::abs(gain_db(pt.measured) - gain_db(model)) <= 1.0);
}

TEST_CASE("log grid and Bode CSV", "[small_signal]") {
    const std::vector<double> g = log_frequency_grid(1.0, 100.0, 10);
    REQUIRE(g.size() == 21);
    CHECK(g.front() == 1.0);
    CHECK(g.back() == Approx(100.0).epsilon(1e-15));
    CHECK(g[10] == Approx(10.0).epsilon(1e-14));
    CHECK(default_bode_scan().size() == 1001);
    CHECK_THROWS_AS(log_frequency_grid(0.0, 1.0, 10), ValidationError);

    FrequencyResponse r;
    r.f_hz = {10.0, 100.0};
    r.gain = {cplx(10.0, 0.0), cplx(0.0, -1.0)};
    std::ostringstream out;
    write_bode_csv(out, r);
    std::istringstream lines(out.str());
    std::string header, first, second;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(header == "f_hz,gain_db,phase_deg");
    CHECK(first.rfind("10,20,0", 0) == 0);
    CHECK(second.rfind("100,0,-90", 0) == 0);
}
