// Discrete LQR: Riccati fixed point, optimal gain and closed-loop cost.
#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "optolev/discretize.hpp"
#include "optolev/errors.hpp"

namespace optolev {

class StabilizabilityError : public NumericError {
public:
    using NumericError::NumericError;
};

struct LqrDesign {
    Eigen::MatrixXd s;        ///< Riccati solution S
    Eigen::RowVectorXd gain;  ///< k^T, applied as u = -k^T z
    Eigen::MatrixXd q_weight; ///< Q
    double r_weight = 1.0;    ///< r
    double residual = 0.0;    ///< ||S - map(S)|| / ||S||
    int iterations = 0;
    double closed_loop_radius = 0.0; ///< spectral radius of a_d - b_d k^T
};

/// A^T S A - A^T S B (r + B^T S B)^-1 B^T S A + Q
Eigen::MatrixXd riccati_map(const DiscreteModel& d, const Eigen::MatrixXd& s,
                            const Eigen::MatrixXd& q, double r);

/// k^T = (r + B^T S B)^-1 B^T S A
Eigen::RowVectorXd lqr_gain(const DiscreteModel& d, const Eigen::MatrixXd& s, double r);

/**
 * @brief Value iteration S <- map(S) from S_0 = Q.
 *
 * Stops when ||S_{n+1} - S_n|| / ||S_n|| < tol. Throws ConvergenceError after
 * max_iter iterations and StabilizabilityError if the resulting closed loop
 * is not strictly stable.
 */
LqrDesign solve_dare(const DiscreteModel& d, const Eigen::MatrixXd& q_weight, double r_weight,
                     double tol = 1e-12, int max_iter = 1000000);

/// Default state weight diag(0, 0, 1, 1) for the 4-quadrature model.
Eigen::MatrixXd default_state_weight();

/// Stationary closed-loop covariance under u = -k^T z.
Eigen::MatrixXd closed_loop_covariance(const DiscreteModel& d, const Eigen::RowVectorXd& gain);

/// Stationary per-step cost E[z^T Q z + r u^2] = trace((Q + k r k^T) Sigma_cl).
double analytic_cost(const DiscreteModel& d, const Eigen::RowVectorXd& gain,
                     const Eigen::MatrixXd& q_weight, double r_weight);

struct CostEstimate {
    double mean = 0.0;      ///< Monte Carlo average of (z^T Q z + r u^2)
    double std_error = 0.0; ///< across independent runs
    double analytic = 0.0;  ///< stationary value
    std::size_t horizon = 0;
    std::size_t runs = 0;
};

struct CostOptions {
    std::size_t runs = 32;
    /// Start every run at z = 0 rather than from the closed-loop stationary state.
    bool start_at_rest = false;
};

/**
 * @brief Closed-loop cost under full-state feedback u_k = -k^T z_k.
 *
 * Run i uses sub-seed derive_seed(seed, i), so two calls with the same seed
 * and different gains see the same noise realizations (common random numbers).
 */
CostEstimate estimate_cost(const DiscreteModel& d, const Eigen::RowVectorXd& gain,
                           const Eigen::MatrixXd& q_weight, double r_weight, std::size_t horizon,
                           std::uint64_t seed, const CostOptions& opts = {});
CostEstimate estimate_cost(const DiscreteModel& d, const LqrDesign& design, std::size_t horizon,
                           std::uint64_t seed, const CostOptions& opts = {});

} // namespace optolev
