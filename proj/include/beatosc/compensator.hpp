#pragma once

#include <array>
#include <complex>

namespace beatosc {

enum class CompensatorTopology {
    parallel,  // Gc + Gb act side by side on the error
    cascade,   // Gc * Gb
};

/// Type II compensator Gc(s) = kc (1 + s/wz) / (s (1 + s/wp)) plus the
/// resonant beat compensator Gb(s) = kb s / (s^2 + wb^2).
struct CompensatorParams {
    double k_c = 138.2;
    double f_z = 100.0;         // Hz
    double f_p = 10e3;          // Hz
    double k_b = 700.0;
    double f_b_target = 15e3;   // Hz
    double v_ref = 5.0;         // V
    CompensatorTopology topology = CompensatorTopology::parallel;
    // Sign applied to the compensator output. The duty-to-output gain of the
    // current-fed receiver is negative, so negative feedback needs -1.
    double polarity = -1.0;

    void validate() const;
};

std::complex<double> type2_response(const CompensatorParams& c, std::complex<double> s);
std::complex<double> resonant_response(const CompensatorParams& c, std::complex<double> s);
/// Combined compensator per topology, including the polarity sign.
std::complex<double> compensator_response(const CompensatorParams& c, std::complex<double> s);

/// Second-order section y/u = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2),
/// transposed direct form II.
class Biquad {
public:
    Biquad() = default;
    Biquad(std::array<double, 3> b, std::array<double, 2> a) : b_(b), a_(a) {}

    /// Bilinear map of (n0 + n1 s + n2 s^2) / (d0 + d1 s + d2 s^2) with
    /// s = c (1 - z^-1) / (1 + z^-1).
    static Biquad bilinear(std::array<double, 3> num, std::array<double, 3> den, double c);

    double step(double u);
    void reset() { s1_ = s2_ = 0.0; }

    std::complex<double> response(std::complex<double> z) const;

private:
    std::array<double, 3> b_{1.0, 0.0, 0.0};
    std::array<double, 2> a_{0.0, 0.0};
    double s1_ = 0.0;
    double s2_ = 0.0;
};

/// The compensators discretized at one update per switching period: Gc by the
/// plain bilinear transform, Gb pre-warped at its centre frequency.
class DiscreteCompensator {
public:
    DiscreteCompensator(const CompensatorParams& params, double sample_rate);

    /// Next duty correction (before any offset or clamping) for error e.
    double step(double error);
    void reset();

    /// Frequency response at f (Hz) including polarity, for checking the
    /// discretization against the continuous compensator.
    std::complex<double> response(double f) const;

private:
    CompensatorParams params_;
    double sample_rate_;
    Biquad type2_;
    Biquad resonant_;
};

}  // namespace beatosc
