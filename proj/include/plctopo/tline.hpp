#pragma once

// Uniform transmission-line primitives at a single frequency.
//
// Conventions: admittances in siemens, lengths in meters. An open circuit is
// the admittance 0; a short circuit has no finite representation and is not
// accepted as a load.

#include <complex>

namespace plctopo {

using Complex = std::complex<double>;

/// Per-unit-length primary constants of a two-conductor cable.
struct CableModel {
    double r_per_m = 0.0;  ///< Ω/m
    double l_per_m = 0.0;  ///< H/m
    double g_per_m = 0.0;  ///< S/m
    double c_per_m = 0.0;  ///< F/m

    /// Lossless 100 Ω cable, v = 2e8 m/s.
    static CableModel reference();
    /// reference() plus R' = 5e-4 Ω/m and G' = 1e-10 S/m.
    static CableModel lossy();

    /// Throws InvalidParameter unless all constants are finite, r,g >= 0 and l,c > 0.
    void check() const;

    bool operator==(const CableModel&) const = default;
};

/// Secondary line parameters at one frequency.
struct LineConstants {
    Complex gamma;           ///< propagation constant, 1/m
    Complex y_c;             ///< characteristic admittance, S
    double wavelength = 0;   ///< 2π / Im(gamma), m
    double frequency = 0;    ///< Hz

    double quarter_wavelength() const noexcept { return wavelength / 4.0; }
};

/// gamma = sqrt((R'+jωL')(G'+jωC')), y_c = sqrt((G'+jωC')/(R'+jωL')), with
/// the square-root branches chosen so that Re(gamma) >= 0 and Re(y_c) >= 0.
LineConstants secondary_params(const CableModel& cable, double frequency_hz);

/// Admittance seen at the near end of a line of length d terminated by y_load.
Complex line_input_admittance(const LineConstants& lc, double d, Complex y_load);

/// Load admittance that makes a line of length d present y_in at its near end.
Complex line_invert_load(const LineConstants& lc, double d, Complex y_in);

/// Unique d in [0, λ/4] such that line_input_admittance(lc, d, y_load) == y_in.
/// `rel_tol` bounds the forward-check residual |Y(d) - y_in| / |y_in|.
double line_invert_length(const LineConstants& lc, Complex y_load, Complex y_in, double rel_tol = 1e-6);

/// V_far / V_near along a line of length d whose far end sees y_load.
Complex line_voltage_ratio(const LineConstants& lc, double d, Complex y_load);

/// Complex length x with tanh(gamma * x) == t, taken on the principal branch
/// (Im(gamma * x) in (-π/2, π/2]). For consistent data x is real; its
/// imaginary part measures how far t is from any physical line.
Complex length_from_tanh(const LineConstants& lc, Complex t);

}  // namespace plctopo
