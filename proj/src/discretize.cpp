#include "optolev/discretize.hpp"

#include <array>
#include <cmath>
#include <iostream>
#include <string>

#include "optolev/errors.hpp"

namespace optolev {

namespace {

constexpr std::array<double, 14> pade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};
constexpr double theta13 = 5.371920351148152;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

Eigen::MatrixXd exp_pade13(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    if (squarings > 1000) throw NumericError("matrix_exp: norm out of range");
    const Eigen::MatrixXd a = m / std::ldexp(1.0, squarings);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a2 = a * a;
    const Eigen::MatrixXd a4 = a2 * a2;
    const Eigen::MatrixXd a6 = a4 * a2;
    // Coefficients relative to b0, so that exp(0) is exactly I.
    std::array<double, 14> b{};
    for (std::size_t k = 0; k < b.size(); ++k) b[k] = pade13[k] / pade13[0];
    const Eigen::MatrixXd u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * id);
    const Eigen::MatrixXd v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + id;
    Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

Eigen::MatrixXd exp_series(const Eigen::MatrixXd& m, int terms) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= terms; ++k) {
        term = term * m / static_cast<double>(k);
        sum += term;
    }
    return sum;
}

} // namespace

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m, ExpMethod method, int series_terms) {
    if (m.rows() != m.cols()) throw NumericError("matrix_exp: matrix must be square");
    require_finite(m, "matrix_exp input");
    Eigen::MatrixXd r = method == ExpMethod::scaling_squaring ? exp_pade13(m)
                                                              : exp_series(m, series_terms);
    if (!r.allFinite()) throw NumericError("matrix_exp: result overflowed");
    return r;
}

NoiseMethod parse_noise_method(std::string_view name) {
    if (name == "van_loan") return NoiseMethod::van_loan;
    if (name == "naive") return NoiseMethod::naive;
    throw ConfigError("noise_method must be 'van_loan' or 'naive', got '" + std::string(name) + "'");
}

std::string_view to_string(NoiseMethod m) { return m == NoiseMethod::van_loan ? "van_loan" : "naive"; }

DiscreteModel scalar_model(double a, double b, double q, double c, double r, double dt) {
    DiscreteModel d;
    d.a_d = Eigen::MatrixXd::Constant(1, 1, a);
    d.b_d = Eigen::VectorXd::Constant(1, b);
    d.q_d = Eigen::MatrixXd::Constant(1, 1, q);
    d.observe = Eigen::RowVectorXd::Constant(1, c);
    d.r_d = r;
    d.dt = dt;
    d.offset = Eigen::VectorXd::Zero(1);
    return d;
}

Eigen::MatrixXd input_integral_closed_form(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           double /*dt*/, const Eigen::MatrixXd& a_d) {
    const Eigen::MatrixXd a_inv_b = a.fullPivLu().solve(b);
    return (a_d - Eigen::MatrixXd::Identity(a.rows(), a.cols())) * a_inv_b;
}

Eigen::MatrixXd input_integral_series(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                      double dt) {
    constexpr int max_terms = 2000;
    Eigen::MatrixXd term = dt * b;
    Eigen::MatrixXd sum = term;
    for (int k = 1; k < max_terms; ++k) {
        term = (a * term) * (dt / static_cast<double>(k + 1));
        sum += term;
        if (!sum.allFinite()) break;
        if (term.norm() < 1e-16 * sum.norm()) return sum;
        if (sum.norm() == 0.0 && term.norm() == 0.0) return sum;
    }
    throw NumericError("input_integral_series: series did not converge");
}

Eigen::MatrixXd van_loan_noise(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q, double dt) {
    const Eigen::Index n = a.rows();
    // q_d is linear in q. Normalizing keeps the augmented exponential's norm set
    // by the drift alone; the noise block may be many orders of magnitude larger.
    const double scale = q.cwiseAbs().maxCoeff();
    if (scale == 0.0) return Eigen::MatrixXd::Zero(n, n);
    // exp(-A h) in the augmented matrix grows like e^{|A| h}, so work on a step
    // with |A h| <= 1 and double back up: Q(2h) = Phi(h) Q(h) Phi(h)^T + Q(h).
    const double norm1 = (a * dt).cwiseAbs().colwise().sum().maxCoeff();
    const int halvings = norm1 > 1.0 ? static_cast<int>(std::ceil(std::log2(norm1))) : 0;
    if (halvings > 200) throw NumericError("van_loan_noise: step out of range");
    const double h = std::ldexp(dt, -halvings);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = -a * h;
    m.topRightCorner(n, n) = (q / scale) * h;
    m.bottomRightCorner(n, n) = a.transpose() * h;
    const Eigen::MatrixXd e = matrix_exp(m);
    Eigen::MatrixXd phi = e.bottomRightCorner(n, n).transpose();
    Eigen::MatrixXd qd = phi * e.topRightCorner(n, n);
    qd = (0.5 * (qd + qd.transpose())).eval();
    for (int k = 0; k < halvings; ++k) {
        qd = phi * qd * phi.transpose() + qd;
        qd = (0.5 * (qd + qd.transpose())).eval();
        phi = phi * phi;
    }
    return scale * qd;
}

DiscreteModel discretize(const ContinuousModel& c, double dt, NoiseMethod noise_method,
                         InputMethod input_method) {
    if (!std::isfinite(dt) || dt <= 0.0) throw NumericError("discretize: dt must be > 0");
    require_finite(c.drift, "discretize drift");
    require_finite(c.process_noise, "discretize process noise");

    DiscreteModel d;
    d.dt = dt;
    d.a_d = matrix_exp(c.drift * dt);

    Eigen::MatrixXd inputs(c.dim(), 2);
    inputs.col(0) = c.input;
    inputs.col(1) = c.optical_input_mean.size() == c.dim()
                        ? Eigen::VectorXd(c.optical_input_mean)
                        : Eigen::VectorXd::Zero(c.dim());

    bool use_series = input_method == InputMethod::series;
    if (!use_series) {
        const auto lu = c.drift.fullPivLu();
        if (!lu.isInvertible() || lu.rcond() < 1e-12) {
            use_series = true;
            d.input_series_fallback = true;
            std::clog << "optolev: drift matrix is singular; B_d from the series expansion\n";
        }
    }
    const Eigen::MatrixXd integrated = use_series
                                           ? input_integral_series(c.drift, inputs, dt)
                                           : input_integral_closed_form(c.drift, inputs, dt, d.a_d);
    d.b_d = integrated.col(0);

    if (noise_method == NoiseMethod::van_loan) {
        d.q_d = van_loan_noise(c.drift, c.process_noise, dt);
        d.offset = integrated.col(1);
    } else {
        d.q_d = c.process_noise * dt;
        d.offset = inputs.col(1) * dt;
    }
    d.observe = c.observe;
    d.r_d = c.measure_noise / dt;

    if (!d.a_d.allFinite() || !d.b_d.allFinite() || !d.q_d.allFinite()) {
        throw NumericError("discretize: non-finite discrete model");
    }
    return d;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace optolev
