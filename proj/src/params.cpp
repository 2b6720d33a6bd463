#include "optolev/params.hpp"

#include <cmath>
#include <string>

#include "optolev/constants.hpp"
#include "optolev/errors.hpp"

namespace optolev {

namespace {

constexpr double linear_pressure_limit = 100.0; // 1 mbar in Pa

void require_positive(double value, const char* name) {
    if (!std::isfinite(value) || value <= 0.0) {
        throw ParameterError(std::string(name) + " must be finite and > 0, got " +
                             std::to_string(value));
    }
}

} // namespace

GasSpeed parse_gas_speed(std::string_view name) {
    if (name == "mean") return GasSpeed::mean;
    if (name == "rms") return GasSpeed::rms;
    if (name == "most_probable") return GasSpeed::most_probable;
    throw ParameterError("unknown gas speed convention '" + std::string(name) + "'");
}

std::string_view to_string(GasSpeed speed) {
    switch (speed) {
    case GasSpeed::mean: return "mean";
    case GasSpeed::rms: return "rms";
    case GasSpeed::most_probable: return "most_probable";
    }
    return "mean";
}

void validate(const PhysicalParams& p) {
    require_positive(p.radius, "radius");
    require_positive(p.density, "density");
    require_positive(p.pressure, "pressure");
    require_positive(p.gas_temperature, "gas_temperature");
    require_positive(p.gas_molecule_mass, "gas_molecule_mass");
    require_positive(p.mech_freq, "mech_freq");
    require_positive(p.cavity_linewidth, "cavity_linewidth");
    require_positive(p.effective_temperature, "effective_temperature");
    if (!std::isfinite(p.detuning)) throw ParameterError("detuning must be finite");
    if (!std::isfinite(p.coupling)) throw ParameterError("coupling must be finite");
    if (!std::isfinite(p.backaction_psd) || p.backaction_psd < 0.0) {
        throw ParameterError("backaction_psd must be finite and >= 0");
    }
    if (!(p.detection_efficiency >= 0.0 && p.detection_efficiency <= 1.0)) {
        throw ParameterError("detection_efficiency must lie in [0, 1]");
    }
    if (p.gamma_override) require_positive(*p.gamma_override, "gamma_m");
    if (p.mean_phonon_override) require_positive(*p.mean_phonon_override, "mean_phonon");
}

double particle_mass(const PhysicalParams& p) {
    return p.density * (4.0 / 3.0) * constants::pi * p.radius * p.radius * p.radius;
}

double gas_speed(const PhysicalParams& p) {
    const double thermal = constants::k_boltzmann * p.gas_temperature / p.gas_molecule_mass;
    switch (p.gas_speed) {
    case GasSpeed::mean: return std::sqrt(8.0 * thermal / constants::pi);
    case GasSpeed::rms: return std::sqrt(3.0 * thermal);
    case GasSpeed::most_probable: return std::sqrt(2.0 * thermal);
    }
    return std::sqrt(8.0 * thermal / constants::pi);
}

double gas_damping(const PhysicalParams& p) {
    return 15.8 * p.radius * p.radius * p.pressure / (particle_mass(p) * gas_speed(p));
}

DerivedScales derive_scales(const PhysicalParams& p) {
    validate(p);
    DerivedScales s;
    s.mass = particle_mass(p);
    s.gas_mean_velocity = gas_speed(p);
    s.gamma_th = p.gamma_override ? *p.gamma_override : gas_damping(p);
    s.z_zpm = std::sqrt(constants::hbar / (2.0 * s.mass * p.mech_freq));
    s.p_zpm = std::sqrt(constants::hbar * s.mass * p.mech_freq / 2.0);
    s.mean_phonon = p.mean_phonon_override
                        ? *p.mean_phonon_override
                        : constants::k_boltzmann * p.effective_temperature /
                              (constants::hbar * p.mech_freq);
    s.backaction_K = p.backaction_psd / (4.0 * constants::pi);
    s.beyond_linear_pressure_regime = p.pressure > linear_pressure_limit;
    return s;
}

double validity_bound(double mass, double omega0, double t_eff) {
    const double w2 = omega0 * omega0;
    return mass * mass * w2 * w2 / (2.0 * constants::k_boltzmann * t_eff);
}

double validity_bound(const PhysicalParams& p) {
    validate(p);
    return validity_bound(particle_mass(p), p.mech_freq, p.effective_temperature);
}

} // namespace optolev
