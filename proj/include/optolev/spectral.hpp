// Power spectral densities: Welch estimation, Lorentzian fitting, the driven
// calibration model and the feedback-gain transduction chain.
#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optolev/errors.hpp"
#include "optolev/statespace.hpp"

namespace optolev {

class FitError : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

enum class Window { hann, rectangular };
Window parse_window(std::string_view name);
std::string_view to_string(Window w);

/// One-sided PSD: values are [signal^2/Hz] and sum(values) * df is the variance.
struct Psd {
    std::vector<double> freqs;  ///< [Hz]
    std::vector<double> values; ///< [signal^2/Hz]
    std::size_t n_segments = 0;
    Window window = Window::hann;
    double dt = 0.0;
    std::size_t segment_len = 0;

    double df() const { return 1.0 / (dt * static_cast<double>(segment_len)); }
    /// sum(values) * df
    double integral() const;
};

/**
 * @brief Streaming Welch estimator.
 *
 * Samples are pushed one at a time; every hop = segment_len - overlap samples
 * a new windowed, mean-removed segment is transformed and its periodogram
 * added. Nothing else is stored, so arbitrarily long records fit in memory.
 */
class WelchAccumulator {
public:
    WelchAccumulator(std::size_t segment_len, double dt, double overlap = 0.5,
                     Window window = Window::hann);
    ~WelchAccumulator();
    WelchAccumulator(WelchAccumulator&&) noexcept;
    WelchAccumulator& operator=(WelchAccumulator&&) noexcept;
    WelchAccumulator(const WelchAccumulator&) = delete;
    WelchAccumulator& operator=(const WelchAccumulator&) = delete;

    void push(double x);
    void push(std::span<const double> xs);
    std::size_t segments() const;
    /// Throws ParameterError if no complete segment has been seen.
    Psd result() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Psd welch_psd(std::span<const double> signal, double dt, std::size_t segment_len,
              double overlap = 0.5, Window window = Window::hann);

/// Segment-weighted mean of PSDs on the same frequency grid.
Psd average(std::span<const Psd> psds);

// ===========================================================================
// Lorentzian fit
// ===========================================================================

/// D / (Gamma^2 omega^2 + (omega^2 - omega0^2)^2), in angular frequency.
double lorentzian(double omega, double d_amp, double gamma, double omega0);

enum class FitSpace { linear, log };

struct FreqWindow {
    double f_min_hz = 0.0;
    double f_max_hz = 0.0;
};

struct LorentzianFit {
    double d_amp = 0.0;   ///< D, in the PSD's units times (rad/s)^4
    double gamma = 0.0;   ///< [1/s]
    double omega0 = 0.0;  ///< [rad/s]
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero(); ///< of (D, gamma, omega0)
    double reduced_chi2 = 0.0;
    bool converged = false;
    std::size_t n_bins = 0;
    int evaluations = 0;

    double center_hz() const;
    double center_sigma_hz() const;
};

/**
 * @brief Weighted nonlinear least squares on the one-sided PSD within a window.
 *
 * Linear space minimizes sum n_seg (S_i - L_i)^2 / L_i^2, i.e. periodogram
 * variance L^2/n_seg; log space minimizes sum n_seg (ln S_i - ln L_i)^2.
 * The covariance is (J^T J)^-1 scaled by the reduced chi^2.
 * Throws FitError when the window holds no resolvable peak or the fit fails.
 */
LorentzianFit fit_lorentzian(const Psd& psd, FreqWindow window, FitSpace space = FitSpace::linear);

/// Weighted residual sum of squares of a parameter set on the same bins used by the fit.
double lorentzian_cost(const Psd& psd, FreqWindow window, double d_amp, double gamma,
                       double omega0, FitSpace space = FitSpace::linear);

// ===========================================================================
// Driven PSD and gain chain
// ===========================================================================

/**
 * @brief Thermal Lorentzian plus coherent drive, in angular frequency.
 *
 * S(omega) = [2 gamma k_B T/m + F0^2 tau_el sinc^2((omega - omega_dr) tau_el) / m^2]
 *            / (gamma^2 omega^2 + (omega^2 - omega0^2)^2)
 * with sinc(x) = sin(x)/x and tau_el = duration / 2.
 */
double driven_psd(const Langevin1D& l, double drive_force, double drive_omega, double duration,
                  double omega);

/// driven_psd on a frequency grid in Hz; the Psd carries the values as a model curve.
Psd driven_psd_model(const Langevin1D& l, double drive_force, double drive_omega, double duration,
                     std::span<const double> freqs_hz);

/// G_fb = C_NV A2 A_d A1^3 C_mV^3 [N/m^3]; every factor must be positive.
double compose_feedback_gain(double c_nv, double a2, double a_digital, double a1, double c_mv);

} // namespace optolev
