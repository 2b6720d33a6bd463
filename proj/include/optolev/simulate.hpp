// Stochastic trajectories: exact-discretization simulation of the linear
// quadrature model (optionally closed-loop through a Kalman filter) and a
// semi-implicit Euler-Maruyama integrator for the delayed Langevin oscillator.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "optolev/discretize.hpp"
#include "optolev/errors.hpp"
#include "optolev/estimate.hpp"
#include "optolev/rng.hpp"
#include "optolev/statespace.hpp"

namespace optolev {

/**
 * @brief Sampled trajectory.
 *
 * Row k (k = 1..N) holds the time t_k, the state after step k, the measurement
 * of that state and the input u_k computed from it. The initial state and the
 * input applied during the first step are kept separately.
 */
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> measurements;
    std::vector<double> inputs;
    Eigen::VectorXd initial_state;
    double initial_input = 0.0;
    std::uint64_t seed = 0;
    double dt = 0.0;

    std::size_t size() const { return times.size(); }
    /// Inputs in application order, u_0 .. u_{N-1}; element k drove step k -> k+1.
    std::vector<double> applied_inputs() const;
    std::vector<double> component(Eigen::Index i) const;
};

// ===========================================================================
// Linear model
// ===========================================================================

struct ClosedLoop {
    Eigen::RowVectorXd gain; ///< k^T; u_k = -k^T zhat_k^k
    std::optional<Eigen::VectorXd> init_mean; ///< default 0
    std::optional<Eigen::MatrixXd> init_cov;  ///< default: open-loop steady state
    CovarianceUpdate form = CovarianceUpdate::standard;
};

struct LinearRunOptions {
    /// Fixed initial state. Without it z_0 is drawn from the open-loop steady
    /// state when the model is stable, and is zero otherwise.
    std::optional<Eigen::VectorXd> initial_state;
    std::optional<ClosedLoop> controller;
    /// Run a matched Kalman filter on the measurements even without a controller.
    bool track_filter = false;
    double divergence_limit = 1e150;
};

struct LinearRun {
    Trajectory trajectory;
    std::optional<FilterRun> filter;
};

/// Symmetric factor L with L L^T = q (eigen-decomposition, negative eigenvalues clipped).
Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& q);

LinearRun run_linear(const DiscreteModel& d, std::size_t n_steps, std::uint64_t seed,
                     const LinearRunOptions& opts = {});

// ===========================================================================
// Langevin oscillator with delayed cubic feedback
// ===========================================================================

/// Past positions; reads return z_{n-d}, or the initial position while n < d.
class DelayBuffer {
public:
    DelayBuffer(std::size_t delay_samples, double initial)
        : ring_(delay_samples + 1, initial) {}

    void push(double z) {
        head_ = head_ + 1 == ring_.size() ? 0 : head_ + 1;
        ring_[head_] = z;
    }
    double delayed() const {
        const std::size_t i = head_ + 1 == ring_.size() ? 0 : head_ + 1;
        return ring_[i];
    }
    std::size_t delay_samples() const { return ring_.size() - 1; }

private:
    std::vector<double> ring_;
    std::size_t head_ = 0;
};

struct PhaseState {
    double z = 0.0; ///< [m]
    double v = 0.0; ///< [m/s]
};

/// Thrown by the Langevin integrator when dt exceeds T/100.
class StepSizeError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Delay rounded to the nearest whole number of steps.
std::size_t delay_samples(double delay, double dt);
void check_step_size(const Langevin1D& l, double dt);
/// Draw (z, v) from the stationary distribution of the linear oscillator.
PhaseState thermal_initial_state(const Langevin1D& l, Rng& rng);

/**
 * @brief Semi-implicit Euler-Maruyama stepper.
 *
 * Velocities live on half steps. Damping is treated with the trapezoid rule,
 * the restoring and feedback forces are evaluated at the new position, and
 * each step adds one Gaussian increment sqrt(C dt) xi to the velocity.
 */
class LangevinIntegrator {
public:
    LangevinIntegrator(const Langevin1D& l, double dt, std::uint64_t seed,
                       std::optional<PhaseState> initial = std::nullopt)
        : rng_(seed),
          dt_(dt),
          w2_(l.omega0 * l.omega0),
          g_(l.gain / l.mass),
          noise_(std::sqrt(l.diffusion * dt)),
          buffer_(optolev::delay_samples(l.delay, dt), 0.0) {
        validate(l);
        check_step_size(l, dt);
        const PhaseState s0 = initial ? *initial : thermal_initial_state(l, rng_);
        buffer_ = DelayBuffer(optolev::delay_samples(l.delay, dt), s0.z);
        start_ = s0;
        const double gdt = l.gamma_m * dt;
        damp_ = (1.0 - 0.5 * gdt) / (1.0 + 0.5 * gdt);
        inv_ = 1.0 / (1.0 + 0.5 * gdt);
        z_ = s0.z;
        force_ = -g_ * s0.z * s0.z * s0.z;
        const double a0 = -w2_ * s0.z + force_;
        // Half kick from v_0 to v_{1/2}.
        v_half_ = ((1.0 - 0.25 * gdt) * s0.v + 0.5 * dt * a0 +
                   std::sqrt(0.5 * l.diffusion * dt) * rng_.normal()) /
                  (1.0 + 0.25 * gdt);
        v_prev_half_ = s0.v;
    }

    void step() {
        z_ += v_half_ * dt_;
        buffer_.push(z_);
        const double zd = buffer_.delayed();
        force_ = -g_ * zd * zd * zd;
        v_prev_half_ = v_half_;
        v_half_ = damp_ * v_half_ + inv_ * ((force_ - w2_ * z_) * dt_ + noise_ * rng_.normal());
        ++steps_;
    }

    double position() const { return z_; }
    /// Velocity at the current step, averaged from the neighbouring half steps.
    double velocity() const { return 0.5 * (v_prev_half_ + v_half_); }
    /// Feedback acceleration -(G/m) z(t - tau)^3 used in the last step [m/s^2].
    double feedback() const { return force_; }
    PhaseState initial_state() const { return start_; }
    double time() const { return static_cast<double>(steps_) * dt_; }
    std::size_t steps_taken() const { return steps_; }
    std::size_t delay_samples() const { return buffer_.delay_samples(); }
    bool ok() const { return std::isfinite(z_) && std::isfinite(v_half_) && std::abs(z_) < 1e100; }

private:
    Rng rng_;
    double dt_, w2_, g_, noise_;
    double damp_ = 1.0, inv_ = 1.0;
    DelayBuffer buffer_;
    PhaseState start_;
    double z_ = 0.0, v_half_ = 0.0, v_prev_half_ = 0.0, force_ = 0.0;
    std::size_t steps_ = 0;
};

/**
 * @brief Integrates the delayed Langevin equation.
 *
 * States are (z, p = m v); measurements are the noise-free position; inputs
 * hold the feedback force -G z(t - tau)^3 [N]. Only every @p record_every-th
 * step is stored.
 */
Trajectory run_langevin(const Langevin1D& l, double dt, std::size_t n_steps, std::uint64_t seed,
                        std::optional<PhaseState> initial = std::nullopt,
                        std::size_t record_every = 1);

} // namespace optolev
