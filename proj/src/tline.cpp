#include "plctopo/tline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "plctopo/error.hpp"

namespace plctopo {
namespace {

constexpr double kSingularDenominator = 1e-30;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void check_length(double d) {
    if (!std::isfinite(d) || d < 0.0) {
        throw InvalidParameter("line length must be finite and non-negative, got " + std::to_string(d));
    }
}

}  // namespace

CableModel CableModel::reference() { return {0.0, 0.5e-6, 0.0, 50e-12}; }

CableModel CableModel::lossy() { return {5e-4, 0.5e-6, 1e-10, 50e-12}; }

void CableModel::check() const {
    if (!std::isfinite(r_per_m) || !std::isfinite(l_per_m) || !std::isfinite(g_per_m) || !std::isfinite(c_per_m)) {
        throw InvalidParameter("cable constants must be finite");
    }
    if (r_per_m < 0.0 || g_per_m < 0.0) throw InvalidParameter("cable R' and G' must be non-negative");
    if (l_per_m <= 0.0 || c_per_m <= 0.0) throw InvalidParameter("cable L' and C' must be positive");
}

LineConstants secondary_params(const CableModel& cable, double frequency_hz) {
    cable.check();
    if (!std::isfinite(frequency_hz) || frequency_hz <= 0.0) {
        throw InvalidParameter("frequency must be finite and positive");
    }
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    const Complex series(cable.r_per_m, omega * cable.l_per_m);
    const Complex shunt(cable.g_per_m, omega * cable.c_per_m);

    LineConstants lc;
    lc.frequency = frequency_hz;
    // Principal square roots already have a non-negative real part.
    lc.gamma = std::sqrt(series * shunt);
    lc.y_c = std::sqrt(shunt / series);
    lc.wavelength = 2.0 * std::numbers::pi / lc.gamma.imag();
    return lc;
}

Complex line_input_admittance(const LineConstants& lc, double d, Complex y_load) {
    check_length(d);
    if (!finite(y_load)) throw InvalidParameter("load admittance must be finite");
    if (d == 0.0) return y_load;

    const Complex t = std::tanh(lc.gamma * d);
    const Complex den = lc.y_c + y_load * t;
    if (std::abs(den) < kSingularDenominator) {
        throw SingularLine("terminated line is singular at d = " + std::to_string(d) + " m");
    }
    return lc.y_c * (y_load + lc.y_c * t) / den;
}

Complex line_invert_load(const LineConstants& lc, double d, Complex y_in) {
    check_length(d);
    if (!finite(y_in)) throw InvalidParameter("input admittance must be finite");
    if (d == 0.0) return y_in;

    const Complex t = std::tanh(lc.gamma * d);
    const Complex den = lc.y_c - y_in * t;
    if (std::abs(den) < kSingularDenominator) {
        throw NoSolution("no finite load presents this admittance through " + std::to_string(d) + " m of line");
    }
    return lc.y_c * (y_in - lc.y_c * t) / den;
}

Complex length_from_tanh(const LineConstants& lc, Complex t) { return std::atanh(t) / lc.gamma; }

double line_invert_length(const LineConstants& lc, Complex y_load, Complex y_in, double rel_tol) {
    if (!finite(y_load) || !finite(y_in)) throw InvalidParameter("admittances must be finite");
    if (y_in == y_load) return 0.0;

    const Complex den = lc.y_c * lc.y_c - y_in * y_load;
    if (std::abs(den) < kSingularDenominator) {
        throw InconsistentMeasurement("length inversion is singular (y_in * y_load == y_c^2)");
    }
    const Complex t = lc.y_c * (y_in - y_load) / den;
    const double quarter = lc.quarter_wavelength();
    const double slack = rel_tol * quarter;

    double d = length_from_tanh(lc, t).real();
    if (!std::isfinite(d) || d < -slack || d > quarter + slack) {
        throw InconsistentMeasurement("recovered length " + std::to_string(d) + " m is outside [0, lambda/4]");
    }
    d = std::clamp(d, 0.0, quarter);

    const Complex forward = line_input_admittance(lc, d, y_load);
    const double scale = std::max(std::abs(y_in), 1e-300);
    if (std::abs(forward - y_in) / scale > rel_tol) {
        throw InconsistentMeasurement("no line length reproduces the input admittance (forward residual " +
                                      std::to_string(std::abs(forward - y_in) / scale) + ")");
    }
    return d;
}

Complex line_voltage_ratio(const LineConstants& lc, double d, Complex y_load) {
    check_length(d);
    if (d == 0.0) return 1.0;
    const Complex gd = lc.gamma * d;
    const Complex den = std::cosh(gd) + (y_load / lc.y_c) * std::sinh(gd);
    if (std::abs(den) < kSingularDenominator) throw SingularLine("voltage transfer is singular");
    return 1.0 / den;
}

}  // namespace plctopo
