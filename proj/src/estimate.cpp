#include "optolev/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "optolev/covariance.hpp"
#include "optolev/errors.hpp"

namespace optolev {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void check_sizes(const FilterState& f, const DiscreteModel& d) {
    if (f.mean.size() != d.dim() || f.cov.rows() != d.dim() || f.cov.cols() != d.dim())
        throw ModelError("filter state dimension does not match the model");
}

} // namespace

Eigen::MatrixXd predict_covariance(const Eigen::MatrixXd& cov, const DiscreteModel& d) {
    return symmetrize(d.a_d * cov * d.a_d.transpose() + d.q_d);
}

CovarianceUpdateResult update_covariance(const Eigen::MatrixXd& cov_pred, const DiscreteModel& d,
                                         CovarianceUpdate form) {
    const Eigen::VectorXd sc = cov_pred * d.observe.transpose();
    const double s = d.r_d + d.observe.dot(sc);
    if (!(s > 0.0) || !std::isfinite(s))
        throw NumericError("degenerate measurement: innovation variance R + C Sigma C^T = " +
                           std::to_string(s));
    CovarianceUpdateResult out;
    out.innovation_var = s;
    out.gain = sc / s;
    if (form == CovarianceUpdate::standard) {
        out.cov = symmetrize(cov_pred - out.gain * sc.transpose());
    } else {
        const Eigen::Index n = cov_pred.rows();
        const Eigen::MatrixXd ikc =
            Eigen::MatrixXd::Identity(n, n) - out.gain * d.observe;
        out.cov = symmetrize(ikc * cov_pred * ikc.transpose() +
                             d.r_d * out.gain * out.gain.transpose());
    }
    return out;
}

FilterState predict(const FilterState& f, const DiscreteModel& d, double u_prev) {
    check_sizes(f, d);
    FilterState out;
    out.mean = d.a_d * f.mean + d.b_d * u_prev;
    if (d.offset.size() == d.dim()) out.mean += d.offset;
    out.cov = predict_covariance(f.cov, d);
    out.step = f.step + 1;
    if (!all_finite(out.mean) || !all_finite(out.cov))
        throw DivergenceError("filter diverged in predict", out.step);
    return out;
}

UpdateResult update(const FilterState& f_pred, const DiscreteModel& d, double y,
                    CovarianceUpdate form) {
    check_sizes(f_pred, d);
    const CovarianceUpdateResult cu = update_covariance(f_pred.cov, d, form);
    UpdateResult out;
    out.innovation = y - d.observe.dot(f_pred.mean);
    out.innovation_var = cu.innovation_var;
    out.gain = cu.gain;
    out.state.mean = f_pred.mean + cu.gain * out.innovation;
    out.state.cov = cu.cov;
    out.state.step = f_pred.step;
    if (!all_finite(out.state.mean) || !all_finite(out.state.cov))
        throw DivergenceError("filter diverged in update", out.state.step);
    return out;
}

FilterRun run_filter(const DiscreteModel& d, std::span<const double> measurements,
                     std::span<const double> inputs, const Eigen::VectorXd& init_mean,
                     const Eigen::MatrixXd& init_cov, CovarianceUpdate form) {
    if (!inputs.empty() && inputs.size() != measurements.size())
        throw ModelError("inputs and measurements have different lengths");
    FilterRun run;
    run.states.reserve(measurements.size() + 1);
    run.innovations.reserve(measurements.size());
    run.innovation_vars.reserve(measurements.size());
    run.normalized_innovations.reserve(measurements.size());
    run.states.push_back({init_mean, init_cov, 0});
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        const double u = inputs.empty() ? 0.0 : inputs[k];
        UpdateResult r = update(predict(run.states.back(), d, u), d, measurements[k], form);
        run.innovations.push_back(r.innovation);
        run.innovation_vars.push_back(r.innovation_var);
        run.normalized_innovations.push_back(r.innovation / std::sqrt(r.innovation_var));
        run.states.push_back(std::move(r.state));
    }
    return run;
}

std::vector<Eigen::MatrixXd> covariance_sequence(const DiscreteModel& d,
                                                 const Eigen::MatrixXd& init_cov, std::size_t n,
                                                 CovarianceUpdate form) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(n + 1);
    out.push_back(init_cov);
    for (std::size_t k = 0; k < n; ++k)
        out.push_back(update_covariance(predict_covariance(out.back(), d), d, form).cov);
    return out;
}

WhitenessStats whiteness(std::span<const double> normalized, std::size_t skip) {
    WhitenessStats w;
    if (normalized.size() <= skip + 1) return w;
    const auto x = normalized.subspan(skip);
    w.count = x.size();
    double sum = 0.0;
    for (double v : x) sum += v;
    w.mean = sum / static_cast<double>(w.count);
    double ss = 0.0, lag = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = x[i] - w.mean;
        ss += e * e;
        if (i > 0) lag += e * (x[i - 1] - w.mean);
    }
    w.variance = ss / static_cast<double>(w.count - 1);
    w.lag1 = ss > 0.0 ? lag / ss : 0.0;
    return w;
}

// ===========================================================================
// Grid Bayes filter
// ===========================================================================

namespace {

constexpr double kernel_cutoff = 12.0; // standard deviations kept in the transition kernel

Moments moments(const std::vector<double>& p, const Grid& g) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        m0 += p[i];
        m1 += p[i] * g.point(i);
    }
    const double mean = m1 / m0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = g.point(i) - mean;
        m2 += p[i] * e * e;
    }
    return {mean, m2 / m0};
}

void normalize(std::vector<double>& p, const Grid& g, std::size_t step) {
    double sum = 0.0;
    for (double v : p) sum += v;
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw GridDomainError("grid density vanished at step " + std::to_string(step) +
                              "; the grid does not cover the posterior");
    const double scale = 1.0 / (sum * g.spacing());
    for (double& v : p) v *= scale;
}

void check_edges(const std::vector<double>& p, const Grid& g, std::size_t step) {
    const std::size_t band = std::max<std::size_t>(1, g.n_points / 100);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < band; ++i) {
        lo += p[i];
        hi += p[p.size() - 1 - i];
    }
    const double h = g.spacing();
    if (lo * h > 1e-6 || hi * h > 1e-6)
        throw GridDomainError("posterior mass at the grid edge exceeds 1e-6 at step " +
                              std::to_string(step) + "; widen the grid");
}

std::vector<double> predict_grid(const std::vector<double>& p, const Grid& g, double a, double bu,
                                 double q) {
    const std::size_t n = p.size();
    const double h = g.spacing();
    std::vector<double> out(n, 0.0);
    double pmax = 0.0;
    for (double v : p) pmax = std::max(pmax, v);
    const double skip = 1e-18 * pmax;

    if (q <= 0.0) {
        // Deterministic push z -> a z + bu; split each node's mass between its two neighbours.
        for (std::size_t j = 0; j < n; ++j) {
            if (p[j] <= skip) continue;
            const double x = (a * g.point(j) + bu - g.min) / h;
            if (x < 0.0 || x > static_cast<double>(n - 1)) continue;
            const auto i = static_cast<std::size_t>(std::floor(x));
            const double frac = x - static_cast<double>(i);
            const double mass = p[j] * h;
            out[i] += mass * (1.0 - frac) / h;
            if (i + 1 < n) out[i + 1] += mass * frac / h;
        }
        return out;
    }

    const double sd = std::sqrt(q);
    const double norm = h / std::sqrt(2.0 * 3.14159265358979323846 * q);
    const double half_width = kernel_cutoff * sd;
    for (std::size_t j = 0; j < n; ++j) {
        if (p[j] <= skip) continue;
        const double centre = a * g.point(j) + bu;
        const double lo = std::ceil((centre - half_width - g.min) / h);
        const double hi = std::floor((centre + half_width - g.min) / h);
        if (hi < 0.0 || lo > static_cast<double>(n - 1)) continue;
        const auto i0 = static_cast<std::size_t>(std::max(lo, 0.0));
        const auto i1 = static_cast<std::size_t>(std::min(hi, static_cast<double>(n - 1)));
        const double w = p[j] * norm;
        for (std::size_t i = i0; i <= i1; ++i) {
            const double e = g.point(i) - centre;
            out[i] += w * std::exp(-0.5 * e * e / q);
        }
    }
    return out;
}

void update_grid(std::vector<double>& p, const Grid& g, double c, double r, double y) {
    if (r <= 0.0) {
        if (c == 0.0) throw NumericError("degenerate measurement: c = 0 and r = 0");
        const double x = std::round((y / c - g.min) / g.spacing());
        if (x < 0.0 || x > static_cast<double>(p.size() - 1))
            throw GridDomainError("exact measurement lies outside the grid");
        std::fill(p.begin(), p.end(), 0.0);
        p[static_cast<std::size_t>(x)] = 1.0;
        return;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = y - c * g.point(i);
        p[i] *= std::exp(-0.5 * e * e / r);
    }
}

} // namespace

std::vector<Moments> grid_bayes_filter(const DiscreteModel& model,
                                       std::span<const double> measurements, const Grid& grid,
                                       const GridPrior& prior, std::span<const double> inputs) {
    if (model.dim() != 1)
        throw ModelError("grid_bayes_filter handles scalar-state models only");
    if (grid.n_points < 3 || !(grid.max > grid.min))
        throw ParameterError("grid needs max > min and at least 3 points");
    if (!inputs.empty() && inputs.size() != measurements.size())
        throw ModelError("inputs and measurements have different lengths");
    const double a = model.a_d(0, 0);
    const double b = model.b_d.size() ? model.b_d[0] : 0.0;
    const double off = model.offset.size() ? model.offset[0] : 0.0;
    const double q = model.q_d(0, 0);
    const double c = model.observe[0];
    const double r = model.r_d;

    std::vector<double> p(grid.n_points);
    if (prior.kind == GridPrior::Kind::gaussian) {
        if (!(prior.variance > 0.0)) throw ParameterError("Gaussian prior variance must be > 0");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double e = grid.point(i) - prior.mean;
            p[i] = std::exp(-0.5 * e * e / prior.variance);
        }
    } else {
        std::fill(p.begin(), p.end(), 1.0);
    }
    normalize(p, grid, 0);

    std::vector<Moments> out;
    out.reserve(measurements.size() + 1);
    out.push_back(moments(p, grid));
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        const double u = inputs.empty() ? 0.0 : inputs[k];
        p = predict_grid(p, grid, a, b * u + off, q);
        update_grid(p, grid, c, r, measurements[k]);
        normalize(p, grid, k + 1);
        check_edges(p, grid, k + 1);
        out.push_back(moments(p, grid));
    }
    return out;
}

} // namespace optolev
