// Physical parameters of the levitated particle, trap, gas and cavity,
// and the coefficients derived from them.
#pragma once

#include <optional>
#include <string_view>

namespace optolev {

/// Which Maxwell-Boltzmann speed stands in for the gas "mean velocity".
enum class GasSpeed { mean, rms, most_probable };

GasSpeed parse_gas_speed(std::string_view name);
std::string_view to_string(GasSpeed speed);

/**
 * @brief Particle, trap, gas and optical parameters (SI units).
 *
 * Defaults describe a 143 nm silica sphere at 10 mbar and 293 K. The density
 * 1850 kg/m^3 is an assumed input, not a measured value. Cavity quantities
 * (linewidth, detuning, coupling) default to illustrative values.
 */
struct PhysicalParams {
    double radius = 71.5e-9;             ///< R [m]
    double density = 1850.0;             ///< [kg/m^3]
    double pressure = 1000.0;            ///< p_gas [Pa]
    double gas_temperature = 293.0;      ///< [K]
    double gas_molecule_mass = 4.8e-26;  ///< [kg]
    double mech_freq = 2.0 * 3.14159265358979323846 * 77.8e3; ///< omega_m [rad/s]
    double cavity_linewidth = 2.0 * 3.14159265358979323846 * 400e3; ///< kappa [rad/s]
    double detuning = 2.0 * 3.14159265358979323846 * 77.8e3;        ///< Delta [rad/s]
    double coupling = 2.0 * 3.14159265358979323846 * 20e3;          ///< g [rad/s]
    double backaction_psd = 8.4e-41;     ///< S_F^ba [N^2/Hz]
    double detection_efficiency = 1.0;   ///< eta in [0, 1]
    double effective_temperature = 293.0; ///< T_eff [K]
    GasSpeed gas_speed = GasSpeed::mean;

    /// Directly specified mechanical damping [1/s]; replaces the gas-kinetic formula.
    std::optional<double> gamma_override;
    /// Directly specified mean phonon number; replaces k_B T_eff / (hbar omega_m).
    std::optional<double> mean_phonon_override;
};

struct DerivedScales {
    double mass = 0.0;              ///< [kg]
    double gamma_th = 0.0;          ///< [1/s]
    double z_zpm = 0.0;             ///< [m]
    double p_zpm = 0.0;             ///< [kg m/s]
    double mean_phonon = 0.0;       ///< n-bar
    double backaction_K = 0.0;      ///< S_F^ba / (4 pi)
    double gas_mean_velocity = 0.0; ///< [m/s]
    /// Pressure above ~1 mbar, where damping is no longer linear in pressure.
    bool beyond_linear_pressure_regime = false;
};

/// Throws ParameterError naming the first violated invariant.
void validate(const PhysicalParams& p);

double particle_mass(const PhysicalParams& p);
double gas_speed(const PhysicalParams& p);

/// gamma_th = 15.8 R^2 p / (m v_gas); ignores gamma_override.
double gas_damping(const PhysicalParams& p);

DerivedScales derive_scales(const PhysicalParams& p);

/// Upper scale m^2 omega^4 / (2 k_B T_eff) of cubic gains [N/m^3] for first-order perturbation theory.
double validity_bound(const PhysicalParams& p);
double validity_bound(double mass, double omega0, double t_eff);

} // namespace optolev
