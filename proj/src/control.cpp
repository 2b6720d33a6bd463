#include "optolev/control.hpp"

#include <cmath>
#include <string>

#include "optolev/covariance.hpp"
#include "optolev/rng.hpp"
#include "optolev/simulate.hpp"

namespace optolev {

Eigen::MatrixXd riccati_map(const DiscreteModel& d, const Eigen::MatrixXd& s,
                            const Eigen::MatrixXd& q, double r) {
    const Eigen::MatrixXd& a = d.a_d;
    const Eigen::VectorXd sb = s * d.b_d;
    const double denom = r + d.b_d.dot(sb);
    const Eigen::RowVectorXd bsa = sb.transpose() * a;
    return symmetrize(a.transpose() * s * a - bsa.transpose() * bsa / denom + q);
}

Eigen::RowVectorXd lqr_gain(const DiscreteModel& d, const Eigen::MatrixXd& s, double r) {
    const Eigen::VectorXd sb = s * d.b_d;
    return sb.transpose() * d.a_d / (r + d.b_d.dot(sb));
}

LqrDesign solve_dare(const DiscreteModel& d, const Eigen::MatrixXd& q_weight, double r_weight,
                     double tol, int max_iter) {
    if (!(r_weight > 0.0)) throw ParameterError("LQR input weight r must be > 0");
    if (q_weight.rows() != d.dim() || q_weight.cols() != d.dim())
        throw ModelError("state weight has the wrong dimension");
    if (min_eigenvalue(symmetrize(q_weight)) < -1e-12 * std::max(1.0, q_weight.norm()))
        throw ParameterError("state weight Q must be positive semidefinite");

    LqrDesign out;
    out.q_weight = q_weight;
    out.r_weight = r_weight;
    Eigen::MatrixXd s = symmetrize(q_weight);
    double change = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::MatrixXd next = riccati_map(d, s, q_weight, r_weight);
        if (!next.allFinite()) throw NumericError("Riccati iteration produced non-finite values");
        const double norm = s.norm();
        change = norm > 0.0 ? (next - s).norm() / norm : (next - s).norm();
        s = std::move(next);
        if (change < tol) break;
    }
    if (it == max_iter)
        throw ConvergenceError("Riccati iteration did not converge in " + std::to_string(max_iter) +
                                   " iterations",
                               change);
    out.s = s;
    out.iterations = it + 1;
    out.gain = lqr_gain(d, s, r_weight);
    const double sn = s.norm();
    out.residual = (s - riccati_map(d, s, q_weight, r_weight)).norm() / (sn > 0.0 ? sn : 1.0);
    out.closed_loop_radius = spectral_radius(d.a_d - d.b_d * out.gain);
    if (!(out.closed_loop_radius < 1.0))
        throw StabilizabilityError("LQR closed loop is not stable (spectral radius " +
                                   std::to_string(out.closed_loop_radius) + ")");
    return out;
}

Eigen::MatrixXd default_state_weight() {
    return Eigen::Vector4d(0.0, 0.0, 1.0, 1.0).asDiagonal();
}

Eigen::MatrixXd closed_loop_covariance(const DiscreteModel& d, const Eigen::RowVectorXd& gain) {
    const Eigen::MatrixXd acl = d.a_d - d.b_d * gain;
    if (!(spectral_radius(acl) < 1.0))
        throw StabilizabilityError("closed loop is unstable; no stationary cost");
    return discrete_lyapunov(acl, d.q_d);
}

double analytic_cost(const DiscreteModel& d, const Eigen::RowVectorXd& gain,
                     const Eigen::MatrixXd& q_weight, double r_weight) {
    const Eigen::MatrixXd w = q_weight + r_weight * gain.transpose() * gain;
    return (w * closed_loop_covariance(d, gain)).trace();
}

CostEstimate estimate_cost(const DiscreteModel& d, const Eigen::RowVectorXd& gain,
                           const Eigen::MatrixXd& q_weight, double r_weight, std::size_t horizon,
                           std::uint64_t seed, const CostOptions& opts) {
    if (horizon < 1 || opts.runs < 2) throw ParameterError("cost estimate needs horizon >= 1 and runs >= 2");
    const Eigen::Index n = d.dim();
    const Eigen::MatrixXd acl = d.a_d - d.b_d * gain;
    CostEstimate out;
    out.horizon = horizon;
    out.runs = opts.runs;
    out.analytic = analytic_cost(d, gain, q_weight, r_weight);
    const Eigen::MatrixXd lq = noise_factor(d.q_d);
    const Eigen::MatrixXd l0 = opts.start_at_rest ? Eigen::MatrixXd::Zero(n, n)
                                                  : noise_factor(closed_loop_covariance(d, gain));
    Eigen::VectorXd xi(n);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t run = 0; run < opts.runs; ++run) {
        Rng rng(derive_seed(seed, run));
        for (Eigen::Index i = 0; i < n; ++i) xi[i] = rng.normal();
        Eigen::VectorXd z = l0 * xi;
        double acc = 0.0;
        for (std::size_t k = 0; k < horizon; ++k) {
            for (Eigen::Index i = 0; i < n; ++i) xi[i] = rng.normal();
            z = acl * z + lq * xi;
            if (!z.allFinite()) throw DivergenceError("closed loop diverged", k + 1);
            const double u = -gain.dot(z);
            acc += z.dot(q_weight * z) + r_weight * u * u;
        }
        const double mean = acc / static_cast<double>(horizon);
        sum += mean;
        sum2 += mean * mean;
    }
    const double m = static_cast<double>(opts.runs);
    out.mean = sum / m;
    const double var = std::max(0.0, (sum2 - m * out.mean * out.mean) / (m - 1.0));
    out.std_error = std::sqrt(var / m);
    return out;
}

CostEstimate estimate_cost(const DiscreteModel& d, const LqrDesign& design, std::size_t horizon,
                           std::uint64_t seed, const CostOptions& opts) {
    return estimate_cost(d, design.gain, design.q_weight, design.r_weight, horizon, seed, opts);
}

} // namespace optolev
