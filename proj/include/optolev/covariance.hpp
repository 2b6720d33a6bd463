// Deterministic second-moment propagation and steady states.
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optolev/discretize.hpp"
#include "optolev/statespace.hpp"

namespace optolev {

enum class CovarianceMode { discrete, continuous };
std::string_view to_string(CovarianceMode m);

struct CovarianceTrack {
    std::vector<Eigen::MatrixXd> values; ///< V_0 .. V_n
    double dt = 0.0;
    CovarianceMode mode = CovarianceMode::discrete;
};

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m);
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// V <- a_d V a_d^T + q_d, n_steps times.
CovarianceTrack propagate(const DiscreteModel& d, const Eigen::MatrixXd& v0, std::size_t n_steps);

/// dV/dt = A V + V A^T + Q_c by classical RK4, @p substeps per output interval dt.
CovarianceTrack propagate(const ContinuousModel& c, const Eigen::MatrixXd& v0, double dt,
                          std::size_t n_steps, int substeps = 8);

/// Fixed point of V = a V a^T + q by squaring iteration; requires spectral radius < 1.
Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                  double tol = 1e-13, int max_iter = 200);

Eigen::MatrixXd steady_state(const DiscreteModel& d, double tol = 1e-13);

/// Solves A V + V A^T + Q = 0 in vectorized form; requires A Hurwitz.
Eigen::MatrixXd steady_state(const ContinuousModel& c);

} // namespace optolev
