#include "optolev/statespace.hpp"

#include <cmath>
#include <string>

#include "optolev/constants.hpp"
#include "optolev/errors.hpp"

namespace optolev {

MeasuredComponent parse_measured_component(std::string_view name) {
    if (name == "Z" || name == "z") return MeasuredComponent::Z;
    if (name == "P" || name == "p") return MeasuredComponent::P;
    throw ConfigError("measured_component must be 'Z' or 'P', got '" + std::string(name) + "'");
}

std::string_view to_string(MeasuredComponent c) {
    return c == MeasuredComponent::Z ? "Z" : "P";
}

double momentum_noise_intensity(const DerivedScales& s) {
    // The eta and (1 - eta) backaction branches are independent unit-weight
    // processes, so their sum enters with total weight 1.
    const double thermal = 2.0 * s.gamma_th * (1.0 + 2.0 * s.mean_phonon);
    const double backaction = 4.0 * constants::pi * s.backaction_K / (s.p_zpm * s.p_zpm);
    return thermal + backaction;
}

ContinuousModel build_continuous(const PhysicalParams& p, const DerivedScales& s,
                                 const ModelOptions& opts) {
    if (!std::isfinite(opts.measurement_noise) || opts.measurement_noise <= 0.0) {
        throw ModelError("measurement_noise must be finite and > 0");
    }
    const double kappa = p.cavity_linewidth;
    const double g = p.coupling;

    ContinuousModel m;
    m.drift = Eigen::MatrixXd::Zero(quad_dim, quad_dim);
    m.drift(quad_x, quad_x) = -kappa / 2.0;
    m.drift(quad_x, quad_y) = p.detuning;
    m.drift(quad_y, quad_x) = -p.detuning;
    m.drift(quad_y, quad_y) = -kappa / 2.0;
    m.drift(quad_y, quad_z) = -2.0 * g;
    m.drift(quad_z, quad_p) = p.mech_freq;
    m.drift(quad_p, quad_x) = -2.0 * g;
    m.drift(quad_p, quad_z) = -p.mech_freq;
    m.drift(quad_p, quad_p) = -s.gamma_th;

    m.input = Eigen::VectorXd::Zero(quad_dim);
    m.input(quad_p) = 1.0;

    m.observe = Eigen::RowVectorXd::Zero(quad_dim);
    m.observe(opts.measured == MeasuredComponent::Z ? quad_z : quad_p) = 1.0;

    m.process_noise = Eigen::MatrixXd::Zero(quad_dim, quad_dim);
    m.process_noise(quad_p, quad_p) = momentum_noise_intensity(s);
    if (opts.cavity_input_noise) {
        m.process_noise(quad_x, quad_x) = kappa;
        m.process_noise(quad_y, quad_y) = kappa;
    }
    m.measure_noise = opts.measurement_noise;

    m.optical_input_mean = Eigen::VectorXd::Zero(quad_dim);
    m.optical_input_mean(quad_x) = std::sqrt(kappa) * opts.optical_input_x;
    m.optical_input_mean(quad_y) = std::sqrt(kappa) * opts.optical_input_y;

    if (!m.drift.allFinite() || !m.process_noise.allFinite() ||
        !m.optical_input_mean.allFinite()) {
        throw ModelError("continuous model has non-finite entries");
    }
    return m;
}

double Langevin1D::damped_frequency() const {
    return std::sqrt(omega0 * omega0 - gamma_m * gamma_m / 4.0);
}

double Langevin1D::period() const { return 2.0 * constants::pi / omega0; }

double Langevin1D::thermal_energy() const {
    return gamma_m > 0.0 ? diffusion * mass / (2.0 * gamma_m) : 0.0;
}

double Langevin1D::linear_position_variance() const {
    return thermal_energy() / (mass * omega0 * omega0);
}

void validate(const Langevin1D& l) {
    if (!std::isfinite(l.omega0) || l.omega0 <= 0.0) {
        throw ParameterError("omega0 must be finite and > 0");
    }
    if (!std::isfinite(l.gamma_m) || l.gamma_m < 0.0) {
        throw ParameterError("gamma_m must be finite and >= 0");
    }
    if (!(l.omega0 > l.gamma_m / 2.0)) {
        throw ParameterError("overdamped: requires omega0 > gamma_m / 2 (omega0 = " +
                             std::to_string(l.omega0) + ", gamma_m / 2 = " +
                             std::to_string(l.gamma_m / 2.0) + ")");
    }
    if (!std::isfinite(l.diffusion) || l.diffusion < 0.0) {
        throw ParameterError("diffusion must be finite and >= 0");
    }
    if (!std::isfinite(l.mass) || l.mass <= 0.0) {
        throw ParameterError("mass must be finite and > 0");
    }
    if (!std::isfinite(l.gain)) throw ParameterError("gain must be finite");
    if (!std::isfinite(l.delay) || l.delay < 0.0) {
        throw ParameterError("delay must be finite and >= 0");
    }
}

Langevin1D make_langevin(double omega0, double gamma_m, double mass, double t_eff,
                         double gain, double delay) {
    Langevin1D l;
    l.omega0 = omega0;
    l.gamma_m = gamma_m;
    l.mass = mass;
    l.diffusion = 2.0 * gamma_m * constants::k_boltzmann * t_eff / mass;
    l.gain = gain;
    l.delay = delay;
    validate(l);
    return l;
}

Langevin1D build_langevin(const PhysicalParams& p, double gain, double delay) {
    const DerivedScales s = derive_scales(p);
    return make_langevin(p.mech_freq, s.gamma_th, s.mass, p.effective_temperature, gain, delay);
}

} // namespace optolev
