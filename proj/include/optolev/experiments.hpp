// Simulation-to-measurement pipelines shared by the command-line tool and the
// acceptance checks: centre frequency of a Langevin run, position-variance
// temperature, and small helpers for sweeps.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "optolev/spectral.hpp"
#include "optolev/statespace.hpp"

namespace optolev {

struct SpectrumRunOptions {
    double dt = 0.0;             ///< integrator step [s]
    double duration = 1.0;       ///< simulated time after burn-in [s]
    double burn_in = 0.1;        ///< extra fraction of duration simulated first and discarded
    std::size_t decimate = 8;    ///< integrator steps per PSD sample
    std::size_t segment_len = 16384;
    double overlap = 0.5;
    Window window = Window::hann;
    std::size_t batches = 12;    ///< independent Welch accumulators over consecutive stretches
    FreqWindow fit_window{};
    FitSpace fit_space = FitSpace::linear;
};

struct BatchedPsd {
    Psd total;               ///< segment-weighted mean over batches
    std::vector<Psd> parts;  ///< one estimate per batch
    double position_variance = 0.0; ///< mean z^2 of the analysed samples [m^2]
};

/// Runs the Langevin integrator and accumulates the PSD of z batch by batch.
BatchedPsd simulate_psd(const Langevin1D& l, const SpectrumRunOptions& opts, std::uint64_t seed);

struct CenterMeasurement {
    LorentzianFit fit;            ///< fit of the batch-averaged PSD
    double center_hz = 0.0;
    double fit_sigma_hz = 0.0;    ///< from the fit covariance
    double batch_sigma_hz = 0.0;  ///< standard error of the per-batch fitted centres
    std::size_t batches_fitted = 0;
    double position_variance = 0.0;
    Psd psd;
};

/// Fits the averaged PSD, and each batch for the resampled standard error.
CenterMeasurement fit_center(BatchedPsd psd, const SpectrumRunOptions& opts);

/// simulate_psd followed by fit_center.
CenterMeasurement measure_center(const Langevin1D& l, const SpectrumRunOptions& opts,
                                 std::uint64_t seed);

struct TemperatureMeasurement {
    double position_variance = 0.0; ///< [m^2]
    double t_eff = 0.0;             ///< [K]
    double t_eff_se = 0.0;          ///< batch-means standard error [K]
    std::size_t delay_samples = 0;
};

TemperatureMeasurement measure_temperature(const Langevin1D& l, double dt, double duration,
                                           double burn_in, std::size_t batches,
                                           std::uint64_t seed);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

/// Weighted least-squares line; empty weights mean equal weights.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> sigma = {});

/// Calls fn(i) for i in [0, n) on up to @p threads workers. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace optolev
