// First-order perturbation theory for the cubic feedback force: Green
// function, autocorrelation functions, the PSD correction and the
// centre-frequency shift.
#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "optolev/statespace.hpp"

namespace optolev {

/// sin(Omega t)/Omega exp(-gamma t/2) for t > 0, and 0 for t <= 0.
double green_function(const Langevin1D& l, double t);

/// Stationary position ACF of the linear oscillator [m^2]; throws NumericError when gamma_m = 0.
double acf_linear(const Langevin1D& l, double t);

/**
 * @brief Closed-form first-order change of the position ACF from the force -G z(t - tau)^3.
 *
 * Agrees with diagram_quadrature for |t| >= tau. For |t| < tau it departs by
 * a relative amount of order 1/Q that grows with tau (1e-4 at T/4, 3e-3 at
 * 3T/4, 13% at T for Q near 40) and, unlike the quadrature, grows as
 * e^{gamma tau / 2} for tau >> 1/gamma. Uses l.gain, ignores l.delay.
 */
double acf_delay_correction(const Langevin1D& l, double t, double tau);

/// acf_linear + acf_delay_correction
double acf_delayed(const Langevin1D& l, double t, double tau);

/// Effective temperature m omega0^2 A(0, tau) / k_B from the first-order ACF.
double delayed_temperature(const Langevin1D& l, double tau);

/// Equipartition temperature m omega0^2 <z^2> / k_B.
double temperature_from_variance(const Langevin1D& l, double position_variance);

struct QuadratureOptions {
    double rel_tol = 1e-8;     ///< target relative accuracy of the result
    double span_factor = 40.0; ///< integration domains are truncated at span_factor / gamma_m
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

/**
 * @brief First-order ACF change by direct numerical integration of the two diagrams.
 *
 *   -3 (G/m) C^2 [ int dt1 G(t-t1) int ds1 G(-s1) G(t1-s1-tau) int ds2 G(t1-s2-tau)^2
 *                + int dt1 G(-t1)  int ds1 G(t-s1) G(t1-s1-tau) int ds2 G(t1-s2-tau)^2 ]
 *
 * Each integral runs over the support of its Heaviside factors, split into
 * quarter-period panels with adaptive Gauss-Kronrod on each. The s1 loop is
 * reduced to two fixed integrals with the sine addition theorem, so the cost
 * is that of a one-dimensional quadrature. Throws
 * ConvergenceError when the estimated error exceeds the requested accuracy.
 */
QuadratureResult diagram_quadrature(const Langevin1D& l, double t, double tau,
                                    const QuadratureOptions& opts = {});

/// C / (gamma^2 omega^2 + (omega^2 - omega0^2)^2), the two-sided PSD with int S domega/2pi = <z^2>.
double psd_linear(const Langevin1D& l, double omega);

/// 3 (G/m) C^2 / (gamma omega0^2) (omega^2 - omega0^2) / [gamma^2 omega^2 + (omega^2 - omega0^2)^2]^2
double psd_correction(const Langevin1D& l, double omega);

/// psd_linear with omega0 replaced by omega0 + 2 pi kappa G.
double psd_shifted(const Langevin1D& l, double omega);

struct FrequencyShift {
    double shift_hz = 0.0; ///< kappa * G_fb
    double kappa = 0.0;    ///< 3 k_B T_eff / (4 pi m^2 omega0^3) [Hz m^3/N]
    double bound = 0.0;    ///< validity bound m^2 omega0^4 / (2 k_B T_eff) [N/m^3]
    bool outside_validity = false; ///< |G_fb| >= bound
};
FrequencyShift frequency_shift(const Langevin1D& l);

enum class AcfOrder { linear, first_order };
std::string_view to_string(AcfOrder o);

struct AcfResult {
    std::vector<double> lags;   ///< [s]
    std::vector<double> values; ///< [m^2]
    AcfOrder order = AcfOrder::linear;
    double tau = 0.0;
};

AcfResult acf_curve(const Langevin1D& l, std::span<const double> lags, AcfOrder order, double tau);

} // namespace optolev
