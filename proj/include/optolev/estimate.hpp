// Kalman filtering of the discrete model, plus a brute-force grid Bayes
// filter that evaluates the prediction integral and Bayes update directly.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "optolev/discretize.hpp"

namespace optolev {

/// Posterior covariance update: the plain Sigma - K C Sigma form, or Joseph's stabilized form.
enum class CovarianceUpdate { standard, joseph };

struct FilterState {
    Eigen::VectorXd mean; ///< zhat_k^k (or zhat_k^{k-1} after predict)
    Eigen::MatrixXd cov;  ///< Sigma_k^k (or Sigma_k^{k-1})
    std::size_t step = 0;
};

struct UpdateResult {
    FilterState state;
    Eigen::VectorXd gain;     ///< Kalman gain K_k
    double innovation = 0.0;  ///< y_k - C zhat_k^{k-1}
    double innovation_var = 0.0; ///< R + C Sigma_k^{k-1} C^T
};

/// Sigma <- a_d Sigma a_d^T + q_d (symmetrized).
Eigen::MatrixXd predict_covariance(const Eigen::MatrixXd& cov, const DiscreteModel& d);

struct CovarianceUpdateResult {
    Eigen::MatrixXd cov;
    Eigen::VectorXd gain;
    double innovation_var = 0.0;
};
CovarianceUpdateResult update_covariance(const Eigen::MatrixXd& cov_pred, const DiscreteModel& d,
                                         CovarianceUpdate form = CovarianceUpdate::standard);

FilterState predict(const FilterState& f, const DiscreteModel& d, double u_prev);
UpdateResult update(const FilterState& f_pred, const DiscreteModel& d, double y,
                    CovarianceUpdate form = CovarianceUpdate::standard);

struct FilterRun {
    std::vector<FilterState> states;   ///< states[0] is the initial condition
    std::vector<double> innovations;
    std::vector<double> innovation_vars;
    std::vector<double> normalized_innovations;
};

/**
 * @brief Alternating predict/update over all measurements.
 *
 * @p inputs holds, for each measurement y_k, the input u_{k-1} applied during
 * the preceding step; an empty span means zero input throughout.
 */
FilterRun run_filter(const DiscreteModel& d, std::span<const double> measurements,
                     std::span<const double> inputs, const Eigen::VectorXd& init_mean,
                     const Eigen::MatrixXd& init_cov,
                     CovarianceUpdate form = CovarianceUpdate::standard);

/// The posterior covariance sequence alone; identical to run_filter's (it never depends on y).
std::vector<Eigen::MatrixXd> covariance_sequence(const DiscreteModel& d,
                                                 const Eigen::MatrixXd& init_cov, std::size_t n,
                                                 CovarianceUpdate form = CovarianceUpdate::standard);

struct WhitenessStats {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    double lag1 = 0.0; ///< lag-1 autocorrelation coefficient
};
WhitenessStats whiteness(std::span<const double> normalized, std::size_t skip = 0);

// Grid Bayes filter -------------------------------------------------------

struct Grid {
    double min = -1.0;
    double max = 1.0;
    std::size_t n_points = 2001;

    double spacing() const { return (max - min) / static_cast<double>(n_points - 1); }
    double point(std::size_t i) const { return min + spacing() * static_cast<double>(i); }
};

struct GridPrior {
    enum class Kind { gaussian, uniform };
    Kind kind = Kind::gaussian;
    double mean = 0.0;
    double variance = 1.0;

    static GridPrior gaussian(double mean, double variance) { return {Kind::gaussian, mean, variance}; }
    static GridPrior uniform() { return {Kind::uniform, 0.0, 0.0}; }
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

/**
 * @brief Posterior moments of a scalar-state model from an explicit density grid.
 *
 * Each step evaluates p(z_k|M_{k-1}) = int p(z_k|z_{k-1}) p(z_{k-1}|M_{k-1}) dz_{k-1}
 * by quadrature on the grid, then multiplies by p(y_k|z_k) and renormalizes.
 * q_d = 0 moves mass deterministically (linear interpolation between nodes);
 * r_d = 0 places all posterior mass on the node nearest y/c.
 * Element 0 of the result describes the prior. Throws GridDomainError when more
 * than 1e-6 of the posterior mass sits in the outermost 1% of the grid.
 */
std::vector<Moments> grid_bayes_filter(const DiscreteModel& model,
                                       std::span<const double> measurements, const Grid& grid,
                                       const GridPrior& prior, std::span<const double> inputs = {});

} // namespace optolev
