// Run configuration for the command-line tool: JSON schema, validation and
// command-line overrides.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "optolev/covariance.hpp"
#include "optolev/discretize.hpp"
#include "optolev/estimate.hpp"
#include "optolev/params.hpp"
#include "optolev/perturbation.hpp"
#include "optolev/spectral.hpp"
#include "optolev/statespace.hpp"

namespace optolev::cli {

enum class ModelKind { linear, langevin };

/// Numerical settings; every field has a default except the seed.
struct Numerics {
    ModelKind model = ModelKind::langevin;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    // Linear model
    double dt = 1e-6;                 ///< sampling period of the discrete model [s]
    std::size_t steps = 10000;
    NoiseMethod noise_method = NoiseMethod::van_loan;
    MeasuredComponent measured = MeasuredComponent::Z;
    double measurement_noise = 1.0;
    bool cavity_input_noise = false;
    bool kalman = false;
    bool closed_loop = false;         ///< feed back the LQR gain through the Kalman estimate
    CovarianceUpdate covariance_update = CovarianceUpdate::standard;
    std::vector<double> lqr_q{0.0, 0.0, 1.0, 1.0}; ///< diagonal of Q
    double lqr_r = 1e-10;
    double lqr_tol = 1e-12;
    std::size_t cost_horizon = 2000;
    std::size_t cost_runs = 32;
    CovarianceMode covariance_mode = CovarianceMode::discrete;
    int covariance_substeps = 8;

    // Langevin model
    std::optional<double> langevin_dt; ///< integrator step; default period / steps_per_period
    double steps_per_period = 200.0;
    double duration = 1.0;             ///< simulated time [s]
    double gain = 0.0;                 ///< G_fb [N/m^3]
    std::optional<double> gain_rel;    ///< G_fb as a fraction of the validity bound
    double delay = 0.0;                ///< [s]
    std::optional<double> delay_rel;   ///< delay as a fraction of the mechanical period
    std::size_t record_every = 1;

    // Spectra
    std::size_t decimate = 8;
    std::size_t segment_len = 16384;
    double overlap = 0.5;
    Window window = Window::hann;
    double burn_in = 0.1;
    std::optional<std::vector<double>> fit_window_hz;
    FitSpace fit_space = FitSpace::linear;
    std::size_t batches = 12;

    // Sweeps
    std::vector<double> gains_rel;
    std::vector<double> delays_rel;

    // Analytic curves
    std::optional<double> acf_t_max;
    std::size_t acf_points = 201;
    std::size_t spectrum_points = 801;
    AcfOrder acf_order = AcfOrder::first_order;
};

struct RunConfig {
    std::string experiment;
    PhysicalParams params;
    Numerics numerics;
    std::filesystem::path output_dir;
    nlohmann::json raw; ///< the validated document, after overrides
};

/// Parses a JSON document; syntax errors carry the line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& source = "config");
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Applies "section.key=value"; the value is read as JSON, or taken as a string if it is not JSON.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Validates and converts; throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);

/// A complete configuration with every key at its default (seed 1).
nlohmann::json default_config();

} // namespace optolev::cli
