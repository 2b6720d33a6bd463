#include "optolev/covariance.hpp"

#include <cmath>

#include "optolev/errors.hpp"

namespace optolev {

namespace {

constexpr double psd_tolerance = 1e-10;

void check_psd(const Eigen::MatrixXd& v, std::size_t step) {
    if (!v.allFinite()) throw DivergenceError("covariance propagation diverged", step);
    const double norm = v.norm();
    if (norm > 0.0 && min_eigenvalue(v) < -psd_tolerance * norm) {
        throw NumericError("covariance lost positive semidefiniteness at step " +
                           std::to_string(step));
    }
}

Eigen::MatrixXd lyapunov_rate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& v,
                              const Eigen::MatrixXd& q) {
    return a * v + v * a.transpose() + q;
}

} // namespace

std::string_view to_string(CovarianceMode m) {
    return m == CovarianceMode::discrete ? "discrete" : "continuous";
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

CovarianceTrack propagate(const DiscreteModel& d, const Eigen::MatrixXd& v0, std::size_t n_steps) {
    CovarianceTrack track;
    track.dt = d.dt;
    track.mode = CovarianceMode::discrete;
    track.values.reserve(n_steps + 1);
    Eigen::MatrixXd v = symmetrize(v0);
    check_psd(v, 0);
    track.values.push_back(v);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        v = symmetrize(d.a_d * v * d.a_d.transpose() + d.q_d);
        check_psd(v, k);
        track.values.push_back(v);
    }
    return track;
}

CovarianceTrack propagate(const ContinuousModel& c, const Eigen::MatrixXd& v0, double dt,
                          std::size_t n_steps, int substeps) {
    if (!(dt > 0.0) || substeps < 1) throw NumericError("propagate: dt and substeps must be > 0");
    CovarianceTrack track;
    track.dt = dt;
    track.mode = CovarianceMode::continuous;
    track.values.reserve(n_steps + 1);
    const Eigen::MatrixXd& a = c.drift;
    const Eigen::MatrixXd& q = c.process_noise;
    const double h = dt / substeps;
    Eigen::MatrixXd v = symmetrize(v0);
    check_psd(v, 0);
    track.values.push_back(v);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        for (int s = 0; s < substeps; ++s) {
            const Eigen::MatrixXd k1 = lyapunov_rate(a, v, q);
            const Eigen::MatrixXd k2 = lyapunov_rate(a, v + 0.5 * h * k1, q);
            const Eigen::MatrixXd k3 = lyapunov_rate(a, v + 0.5 * h * k2, q);
            const Eigen::MatrixXd k4 = lyapunov_rate(a, v + h * k3, q);
            v = symmetrize(v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        check_psd(v, k);
        track.values.push_back(v);
    }
    return track;
}

Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, double tol,
                                  int max_iter) {
    if (spectral_radius(a) >= 1.0) {
        throw NumericError("no steady state: spectral radius of the transition matrix >= 1");
    }
    // Squaring (Smith) iteration: after n passes v holds sum_{j < 2^n} a^j q a^jT.
    Eigen::MatrixXd v = symmetrize(q);
    Eigen::MatrixXd power = a;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd next = symmetrize(v + power * v * power.transpose());
        const double change = (next - v).norm();
        v = next;
        power = power * power;
        if (change <= tol * v.norm() || v.norm() == 0.0) {
            // A few plain passes polish the fixed point of the recursion itself.
            for (int polish = 0; polish < 3; ++polish) v = symmetrize(a * v * a.transpose() + q);
            return v;
        }
        if (!v.allFinite()) break;
    }
    throw ConvergenceError("discrete Lyapunov iteration did not converge",
                           (symmetrize(a * v * a.transpose() + q) - v).norm() / v.norm());
}

Eigen::MatrixXd steady_state(const DiscreteModel& d, double tol) {
    return discrete_lyapunov(d.a_d, d.q_d, tol);
}

Eigen::MatrixXd steady_state(const ContinuousModel& c) {
    const Eigen::MatrixXd& a = c.drift;
    const Eigen::Index n = a.rows();
    if (a.eigenvalues().real().maxCoeff() >= 0.0) {
        throw NumericError("no steady state: drift matrix is not Hurwitz");
    }
    // Column-major vec: vec(A V + V A^T) = (I kron A + A kron I) vec(V).
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = i + j * n;
            for (Eigen::Index k = 0; k < n; ++k) {
                lhs(row, k + j * n) += a(i, k);
                lhs(row, i + k * n) += a(j, k);
            }
        }
    }
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(c.process_noise.data(), n * n);
    const Eigen::VectorXd vec = lhs.fullPivLu().solve(rhs);
    return symmetrize(Eigen::Map<const Eigen::MatrixXd>(vec.data(), n, n));
}

} // namespace optolev
