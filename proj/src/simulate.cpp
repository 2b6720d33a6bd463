#include "optolev/simulate.hpp"

#include <string>

#include "optolev/covariance.hpp"

namespace optolev {

std::vector<double> Trajectory::applied_inputs() const {
    std::vector<double> u;
    if (inputs.empty()) return u;
    u.reserve(inputs.size());
    u.push_back(initial_input);
    u.insert(u.end(), inputs.begin(), inputs.end() - 1);
    return u;
}

std::vector<double> Trajectory::component(Eigen::Index i) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s[i]);
    return out;
}

Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& q) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(q));
    if (es.info() != Eigen::Success) throw NumericError("noise covariance eigen-decomposition failed");
    const Eigen::VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * sd.asDiagonal();
}

namespace {

Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n) {
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = rng.normal();
    return xi;
}

} // namespace

LinearRun run_linear(const DiscreteModel& d, std::size_t n_steps, std::uint64_t seed,
                     const LinearRunOptions& opts) {
    if (n_steps < 1) throw ParameterError("run_linear needs n_steps >= 1");
    const Eigen::Index n = d.dim();
    Rng rng(seed);
    const Eigen::MatrixXd lq = noise_factor(d.q_d);
    const double r_sd = std::sqrt(std::max(d.r_d, 0.0));
    const bool has_offset = d.offset.size() == n;

    const bool stable = spectral_radius(d.a_d) < 1.0;
    std::optional<Eigen::MatrixXd> v_ss;
    auto open_loop_ss = [&]() -> const Eigen::MatrixXd& {
        if (!v_ss) v_ss = steady_state(d);
        return *v_ss;
    };

    LinearRun out;
    Trajectory& tr = out.trajectory;
    tr.seed = seed;
    tr.dt = d.dt;
    if (opts.initial_state) {
        if (opts.initial_state->size() != n) throw ModelError("initial state has the wrong dimension");
        tr.initial_state = *opts.initial_state;
    } else if (stable) {
        tr.initial_state = noise_factor(open_loop_ss()) * gaussian_vector(rng, n);
    } else {
        tr.initial_state = Eigen::VectorXd::Zero(n);
    }

    const bool filtering = opts.controller.has_value() || opts.track_filter;
    FilterState est;
    CovarianceUpdate form = CovarianceUpdate::standard;
    Eigen::RowVectorXd gain = Eigen::RowVectorXd::Zero(n);
    if (filtering) {
        out.filter.emplace();
        const ClosedLoop* cl = opts.controller ? &*opts.controller : nullptr;
        est.mean = cl && cl->init_mean ? *cl->init_mean : Eigen::VectorXd::Zero(n);
        if (cl && cl->init_cov) est.cov = *cl->init_cov;
        else if (stable) est.cov = open_loop_ss();
        else throw ModelError("open-loop model is unstable; supply an initial filter covariance");
        if (cl) {
            if (cl->gain.size() != n) throw ModelError("controller gain has the wrong dimension");
            gain = cl->gain;
            form = cl->form;
        }
        out.filter->states.push_back(est);
    }

    tr.times.reserve(n_steps);
    tr.states.reserve(n_steps);
    tr.measurements.reserve(n_steps);
    tr.inputs.reserve(n_steps);

    double u = filtering && opts.controller ? -gain.dot(est.mean) : 0.0;
    tr.initial_input = u;
    Eigen::VectorXd z = tr.initial_state;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        Eigen::VectorXd next = d.a_d * z + d.b_d * u + lq * gaussian_vector(rng, n);
        if (has_offset) next += d.offset;
        z = std::move(next);
        if (!z.allFinite() || z.lpNorm<Eigen::Infinity>() > opts.divergence_limit)
            throw DivergenceError("linear trajectory diverged", k);
        const double y = d.observe.dot(z) + r_sd * rng.normal();
        if (filtering) {
            UpdateResult r = update(predict(est, d, u), d, y, form);
            est = r.state;
            out.filter->innovations.push_back(r.innovation);
            out.filter->innovation_vars.push_back(r.innovation_var);
            out.filter->normalized_innovations.push_back(r.innovation / std::sqrt(r.innovation_var));
            out.filter->states.push_back(est);
            if (opts.controller) u = -gain.dot(est.mean);
        }
        tr.times.push_back(static_cast<double>(k) * d.dt);
        tr.states.push_back(z);
        tr.measurements.push_back(y);
        tr.inputs.push_back(u);
    }
    return out;
}

// ===========================================================================
// Langevin
// ===========================================================================

std::size_t delay_samples(double delay, double dt) {
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw ParameterError("delay must be >= 0");
    if (!(dt > 0.0)) throw ParameterError("dt must be > 0");
    return static_cast<std::size_t>(std::llround(delay / dt));
}

void check_step_size(const Langevin1D& l, double dt) {
    const double limit = 2.0 * 3.14159265358979323846 / (l.omega0 * 100.0);
    if (!(dt > 0.0) || dt > limit)
        throw StepSizeError("Langevin step dt = " + std::to_string(dt) +
                            " s exceeds the limit T/100 = " + std::to_string(limit) + " s");
}

PhaseState thermal_initial_state(const Langevin1D& l, Rng& rng) {
    if (!(l.gamma_m > 0.0) || l.diffusion == 0.0) return {};
    const double kt_m = l.thermal_energy() / l.mass;
    const double z = std::sqrt(kt_m / (l.omega0 * l.omega0)) * rng.normal();
    const double v = std::sqrt(kt_m) * rng.normal();
    return {z, v};
}

Trajectory run_langevin(const Langevin1D& l, double dt, std::size_t n_steps, std::uint64_t seed,
                        std::optional<PhaseState> initial, std::size_t record_every) {
    if (n_steps < 1) throw ParameterError("run_langevin needs n_steps >= 1");
    if (record_every < 1) throw ParameterError("record_every must be >= 1");
    LangevinIntegrator integ(l, dt, seed, initial);
    Trajectory tr;
    tr.seed = seed;
    tr.dt = dt * static_cast<double>(record_every);
    tr.initial_state = Eigen::Vector2d(integ.initial_state().z, l.mass * integ.initial_state().v);
    tr.initial_input = l.mass * integ.feedback();
    const std::size_t rows = n_steps / record_every;
    tr.times.reserve(rows);
    tr.states.reserve(rows);
    tr.measurements.reserve(rows);
    tr.inputs.reserve(rows);
    for (std::size_t k = 1; k <= n_steps; ++k) {
        integ.step();
        if (!integ.ok())
            throw DivergenceError("Langevin trajectory diverged", k);
        if (k % record_every != 0) continue;
        tr.times.push_back(static_cast<double>(k) * dt);
        tr.states.push_back(Eigen::Vector2d(integ.position(), l.mass * integ.velocity()));
        tr.measurements.push_back(integ.position());
        tr.inputs.push_back(l.mass * integ.feedback());
    }
    return tr;
}

} // namespace optolev
