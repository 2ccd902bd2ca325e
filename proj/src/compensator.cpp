#include "beatosc/compensator.hpp"

#include "beatosc/errors.hpp"

#include <cmath>
#include <numbers>

namespace beatosc {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace

void CompensatorParams::validate() const {
    if (!(f_z > 0.0 && f_p > 0.0 && f_b_target > 0.0)) {
        throw ValidationError("compensators.f_z, f_p and f_b_target must be positive");
    }
    if (!(f_z < f_p)) {
        throw ValidationError("compensators.f_z must be below compensators.f_p");
    }
    if (!(f_p < f_b_target)) {
        throw ValidationError("compensators.f_p must be below compensators.f_b_target");
    }
    if (polarity != 1.0 && polarity != -1.0) {
        throw ValidationError("compensators.polarity must be +1 or -1");
    }
}

std::complex<double> type2_response(const CompensatorParams& c, std::complex<double> s) {
    return c.k_c * (1.0 + s / (two_pi * c.f_z)) / (s * (1.0 + s / (two_pi * c.f_p)));
}

std::complex<double> resonant_response(const CompensatorParams& c, std::complex<double> s) {
    if (c.k_b == 0.0) {
        return {};  // also on the pole, where the ratio would be 0/0
    }
    const double wb = two_pi * c.f_b_target;
    return c.k_b * s / (s * s + wb * wb);
}

std::complex<double> compensator_response(const CompensatorParams& c, std::complex<double> s) {
    const auto gc = type2_response(c, s);
    const auto gb = resonant_response(c, s);
    const auto sum = c.topology == CompensatorTopology::parallel ? gc + gb : gc * gb;
    return c.polarity * sum;
}

Biquad Biquad::bilinear(std::array<double, 3> num, std::array<double, 3> den, double c) {
    // Multiply through by (1 + z^-1)^2.
    auto map = [c](const std::array<double, 3>& p) {
        const double c2 = c * c;
        return std::array<double, 3>{p[0] + p[1] * c + p[2] * c2,
                                     2.0 * p[0] - 2.0 * p[2] * c2,
                                     p[0] - p[1] * c + p[2] * c2};
    };
    const auto bz = map(num);
    const auto az = map(den);
    const double norm = az[0];
    return Biquad({bz[0] / norm, bz[1] / norm, bz[2] / norm}, {az[1] / norm, az[2] / norm});
}

double Biquad::step(double u) {
    const double y = b_[0] * u + s1_;
    s1_ = b_[1] * u - a_[0] * y + s2_;
    s2_ = b_[2] * u - a_[1] * y;
    return y;
}

std::complex<double> Biquad::response(std::complex<double> z) const {
    const auto zi = 1.0 / z;
    return (b_[0] + b_[1] * zi + b_[2] * zi * zi) / (1.0 + a_[0] * zi + a_[1] * zi * zi);
}

DiscreteCompensator::DiscreteCompensator(const CompensatorParams& params, double sample_rate)
    : params_(params), sample_rate_(sample_rate) {
    params_.validate();
    const double wz = two_pi * params.f_z;
    const double wp = two_pi * params.f_p;
    const double wb = two_pi * params.f_b_target;
    type2_ = Biquad::bilinear({params.k_c, params.k_c / wz, 0.0}, {0.0, 1.0, 1.0 / wp},
                              2.0 * sample_rate);
    const double c_warped = wb / std::tan(wb / (2.0 * sample_rate));
    resonant_ = Biquad::bilinear({0.0, params.k_b, 0.0}, {wb * wb, 0.0, 1.0}, c_warped);
}

double DiscreteCompensator::step(double error) {
    double u = 0.0;
    if (params_.topology == CompensatorTopology::parallel) {
        u = type2_.step(error) + resonant_.step(error);
    } else {
        u = resonant_.step(type2_.step(error));
    }
    return params_.polarity * u;
}

void DiscreteCompensator::reset() {
    type2_.reset();
    resonant_.reset();
}

std::complex<double> DiscreteCompensator::response(double f) const {
    const auto z = std::polar(1.0, two_pi * f / sample_rate_);
    const auto gc = type2_.response(z);
    const auto gb = resonant_.response(z);
    const auto sum = params_.topology == CompensatorTopology::parallel ? gc + gb : gc * gb;
    return params_.polarity * sum;
}

}  // namespace beatosc
