// Continuous-time models: the 4-quadrature optomechanical system in
// zero-point units, and the 1-D mechanical Langevin oscillator with a
// delayed cubic feedback force.
#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "optolev/params.hpp"

namespace optolev {

/// Index of each quadrature in the state vector z = [X, Y, Z, P].
enum Quadrature : Eigen::Index { quad_x = 0, quad_y = 1, quad_z = 2, quad_p = 3 };
inline constexpr Eigen::Index quad_dim = 4;

struct QuadState {
    double x = 0.0; ///< optical amplitude quadrature
    double y = 0.0; ///< optical phase quadrature
    double z = 0.0; ///< mechanical position [z_zpm]
    double p = 0.0; ///< mechanical momentum [p_zpm]

    static QuadState from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
    Eigen::Vector4d to_vector() const { return {x, y, z, p}; }
};

enum class MeasuredComponent { Z, P };
MeasuredComponent parse_measured_component(std::string_view name);
std::string_view to_string(MeasuredComponent c);

struct ModelOptions {
    MeasuredComponent measured = MeasuredComponent::Z;
    /// PSD of the detector noise y_n(t) [y^2 s]; must be > 0.
    double measurement_noise = 1.0;
    /// Add unit-PSD vacuum input noise (kappa) to the optical rows of Q_c.
    bool cavity_input_noise = false;
    double optical_input_x = 0.0; ///< mean X_in
    double optical_input_y = 0.0; ///< mean Y_in
};

/// dz/dt = A z + B u + w(t) + u_op,   y = C z + y_n(t)
struct ContinuousModel {
    Eigen::MatrixXd drift;          ///< A [1/s]
    Eigen::VectorXd input;          ///< B
    Eigen::RowVectorXd observe;     ///< C
    Eigen::MatrixXd process_noise;  ///< Q_c, white-noise intensity [1/s]
    double measure_noise = 0.0;     ///< R
    Eigen::VectorXd optical_input_mean; ///< u_op mean

    Eigen::Index dim() const { return drift.rows(); }
};

/// Scalar intensity of the P-row noise: thermal 2 gamma (1 + 2 n) plus backaction 4 pi K / p_zpm^2.
double momentum_noise_intensity(const DerivedScales& s);

ContinuousModel build_continuous(const PhysicalParams& p, const DerivedScales& s,
                                 const ModelOptions& opts = {});

/**
 * @brief 1-D Langevin oscillator with delayed cubic feedback
 *
 *   z'' = -gamma_m z' - omega0^2 z - (gain/m) z(t - delay)^3 + sqrt(diffusion) eta(t)
 */
struct Langevin1D {
    double omega0 = 0.0;    ///< trap angular frequency [rad/s]
    double gamma_m = 0.0;   ///< damping [1/s]
    double diffusion = 0.0; ///< C = 2 gamma_m k_B T_eff / m [m^2/s^3]
    double mass = 0.0;      ///< [kg]
    double gain = 0.0;      ///< G_fb [N/m^3]
    double delay = 0.0;     ///< tau [s]

    /// Damped frequency sqrt(omega0^2 - gamma_m^2 / 4).
    double damped_frequency() const;
    double period() const;
    /// k_B T_eff recovered from the diffusion constant.
    double thermal_energy() const;
    /// Stationary position variance of the linear oscillator, k_B T / (m omega0^2).
    double linear_position_variance() const;
};

/// Validates underdamping, non-negative diffusion and delay.
void validate(const Langevin1D& l);

Langevin1D make_langevin(double omega0, double gamma_m, double mass, double t_eff,
                         double gain = 0.0, double delay = 0.0);

/// Uses mech_freq as omega0, gamma_th (or its override) as gamma_m.
Langevin1D build_langevin(const PhysicalParams& p, double gain, double delay);

} // namespace optolev
