// Zero-order-hold discretization of a ContinuousModel.
#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "optolev/statespace.hpp"

namespace optolev {

enum class ExpMethod { scaling_squaring, truncated_series };

/**
 * @brief Matrix exponential.
 *
 * scaling_squaring is a degree-13 Pade approximant with scaling and squaring;
 * truncated_series sums the first @p series_terms + 1 terms of the Taylor series
 * with no scaling, which only converges well for small norms.
 * Throws NumericError for non-finite input or overflow.
 */
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m,
                           ExpMethod method = ExpMethod::scaling_squaring,
                           int series_terms = 30);

enum class NoiseMethod { van_loan, naive };
NoiseMethod parse_noise_method(std::string_view name);
std::string_view to_string(NoiseMethod m);

enum class InputMethod { closed_form, series };

/// z_{k+1} = a_d z_k + b_d u_k + w_k + offset,   y_k = C z_k + v_k
struct DiscreteModel {
    Eigen::MatrixXd a_d;
    Eigen::VectorXd b_d;
    Eigen::MatrixXd q_d;          ///< Cov(w_k)
    Eigen::RowVectorXd observe;   ///< C
    double r_d = 0.0;             ///< Var(v_k)
    double dt = 1.0;
    Eigen::VectorXd offset;       ///< integrated mean optical input, zero by default
    bool input_series_fallback = false; ///< b_d came from the series because A was singular

    Eigen::Index dim() const { return a_d.rows(); }
};

/// Scalar model with unit sampling period, mostly for tests and oracles.
DiscreteModel scalar_model(double a, double b, double q, double c, double r, double dt = 1.0);

/// integral_0^dt exp(A s) ds * B via (exp(A dt) - I) A^-1 B.
Eigen::MatrixXd input_integral_closed_form(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           double dt, const Eigen::MatrixXd& a_d);
/// Same integral from sum_k dt^(k+1)/(k+1)! A^k B until terms fall below 1e-16 of the sum.
Eigen::MatrixXd input_integral_series(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double dt);

/// integral_0^dt exp(A s) Q exp(A^T s) ds from the augmented exponential.
Eigen::MatrixXd van_loan_noise(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, double dt);

DiscreteModel discretize(const ContinuousModel& c, double dt,
                         NoiseMethod noise_method = NoiseMethod::van_loan,
                         InputMethod input_method = InputMethod::closed_form);

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& m);

} // namespace optolev
