#include "optolev/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "optolev/constants.hpp"
#include "optolev/control.hpp"
#include "optolev/covariance.hpp"
#include "optolev/discretize.hpp"
#include "optolev/errors.hpp"
#include "optolev/estimate.hpp"
#include "optolev/io.hpp"
#include "optolev/perturbation.hpp"
#include "optolev/rng.hpp"
#include "optolev/simulate.hpp"
#include "optolev/spectral.hpp"

namespace optolev::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double two_pi = 2.0 * constants::pi;

json metadata(const RunConfig& cfg, std::string_view command) {
    return {{"command", std::string(command)},
            {"experiment", cfg.experiment},
            {"config", cfg.raw},
            {"config_hash", config_hash(cfg.raw)},
            {"seed", cfg.numerics.seed},
            {"rng", std::string(rng_algorithm)}};
}

fs::path prepare_output(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw Error("cannot create output directory " + cfg.output_dir.string() + ": " + ec.message());
    return cfg.output_dir;
}

/// Writes <stem>.json next to <stem>.csv with the run metadata and @p extra.
void write_sidecar(const fs::path& dir, const std::string& stem, const RunConfig& cfg,
                   std::string_view command, json extra = json::object()) {
    json j = metadata(cfg, command);
    j["file"] = stem + ".csv";
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_json(dir / (stem + ".json"), j);
}

DiscreteModel linear_model(const RunConfig& cfg, ContinuousModel* continuous = nullptr) {
    const Numerics& n = cfg.numerics;
    const DerivedScales s = derive_scales(cfg.params);
    if (s.beyond_linear_pressure_regime)
        std::clog << "warning: pressure " << cfg.params.pressure
                  << " Pa is above 1 mbar, where gas damping is no longer linear in pressure\n";
    ModelOptions opts;
    opts.measured = n.measured;
    opts.measurement_noise = n.measurement_noise;
    opts.cavity_input_noise = n.cavity_input_noise;
    const ContinuousModel c = build_continuous(cfg.params, s, opts);
    if (continuous) *continuous = c;
    return discretize(c, n.dt, n.noise_method);
}

Eigen::MatrixXd state_weight(const Numerics& n) {
    return Eigen::Vector4d(n.lqr_q[0], n.lqr_q[1], n.lqr_q[2], n.lqr_q[3]).asDiagonal();
}

json whiteness_json(const WhitenessStats& w) {
    const double n = static_cast<double>(std::max<std::size_t>(w.count, 1));
    return {{"count", w.count},
            {"mean", w.mean},
            {"variance", w.variance},
            {"lag1", w.lag1},
            {"mean_bound_3sigma", 3.0 / std::sqrt(n)},
            {"variance_bound_3sigma", 3.0 * std::sqrt(2.0 / n)}};
}

/// Filter CSV and innovation diagnostics; returns the JSON summary.
json write_filter_outputs(const fs::path& dir, const RunConfig& cfg, std::string_view command,
                          const FilterRun& f) {
    CsvWriter csv(dir / "filter.csv", {"k", "zhat_0", "zhat_1", "zhat_2", "zhat_3", "sigma_diag_0",
                                       "sigma_diag_1", "sigma_diag_2", "sigma_diag_3", "innovation",
                                       "innovation_var"});
    std::vector<double> row(11);
    for (std::size_t k = 1; k < f.states.size(); ++k) {
        const FilterState& s = f.states[k];
        row[0] = static_cast<double>(k);
        for (int i = 0; i < 4; ++i) {
            row[1 + i] = s.mean[i];
            row[5 + i] = s.cov(i, i);
        }
        row[9] = f.innovations[k - 1];
        row[10] = f.innovation_vars[k - 1];
        csv.row(row);
    }
    // Steps until the posterior covariance stops changing (relative 1e-12).
    std::optional<std::size_t> settled;
    for (std::size_t k = 1; k < f.states.size(); ++k) {
        const double norm = f.states[k].cov.norm();
        if ((f.states[k].cov - f.states[k - 1].cov).norm() <= 1e-12 * norm) {
            settled = k;
            break;
        }
    }
    const std::size_t skip = std::min<std::size_t>(f.normalized_innovations.size() / 10, 1000);
    json diag = {{"whiteness", whiteness_json(whiteness(f.normalized_innovations, skip))},
                 {"whiteness_skip", skip},
                 {"covariance_settled_step", settled ? json(*settled) : json(nullptr)}};
    write_sidecar(dir, "filter", cfg, command, {{"diagnostics", diag}});
    json innov = metadata(cfg, command);
    innov["diagnostics"] = diag;
    write_json(dir / "innovations.json", innov);
    return diag;
}

void write_linear_trajectory(const fs::path& dir, const RunConfig& cfg, std::string_view command,
                             const Trajectory& tr) {
    CsvWriter csv(dir / "trajectory.csv", {"t", "z", "p", "x", "y", "y_meas", "u"});
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const Eigen::VectorXd& s = tr.states[k];
        csv.row({tr.times[k], s[quad_z], s[quad_p], s[quad_x], s[quad_y], tr.measurements[k], tr.inputs[k]});
    }
    write_sidecar(dir, "trajectory", cfg, command,
                  {{"model", "linear"},
                   {"dt", tr.dt},
                   {"steps", tr.size()},
                   {"initial_state", vector_to_json(tr.initial_state)},
                   {"initial_input", tr.initial_input},
                   {"units", "quadratures in zero-point units, t in s"}});
}

std::optional<ClosedLoop> controller_for(const RunConfig& cfg, const DiscreteModel& d,
                                         json& summary) {
    if (!cfg.numerics.closed_loop) return std::nullopt;
    const LqrDesign design = solve_dare(d, state_weight(cfg.numerics), cfg.numerics.lqr_r, cfg.numerics.lqr_tol);
    summary["lqr"] = to_json(design);
    ClosedLoop cl;
    cl.gain = design.gain;
    cl.form = cfg.numerics.covariance_update;
    return cl;
}

LinearRun linear_run(const RunConfig& cfg, const DiscreteModel& d, bool filter, json& summary) {
    LinearRunOptions opts;
    opts.controller = controller_for(cfg, d, summary);
    if (opts.controller) opts.controller->form = cfg.numerics.covariance_update;
    opts.track_filter = filter;
    return run_linear(d, cfg.numerics.steps, cfg.numerics.seed, opts);
}

} // namespace

// ===========================================================================
// Model helpers
// ===========================================================================

Langevin1D langevin_model(const RunConfig& cfg) {
    const Numerics& n = cfg.numerics;
    Langevin1D l = build_langevin(cfg.params, 0.0, 0.0);
    const double bound = validity_bound(l.mass, l.omega0, cfg.params.effective_temperature);
    l.gain = n.gain_rel ? *n.gain_rel * bound : n.gain;
    l.delay = n.delay_rel ? *n.delay_rel * l.period() : n.delay;
    return l;
}

double langevin_step(const RunConfig& cfg, const Langevin1D& l) {
    return cfg.numerics.langevin_dt ? *cfg.numerics.langevin_dt
                                    : l.period() / cfg.numerics.steps_per_period;
}

SpectrumRunOptions spectrum_options(const RunConfig& cfg, const Langevin1D& l) {
    const Numerics& n = cfg.numerics;
    SpectrumRunOptions o;
    o.dt = langevin_step(cfg, l);
    o.duration = n.duration;
    o.burn_in = n.burn_in;
    o.decimate = n.decimate;
    o.segment_len = n.segment_len;
    o.overlap = n.overlap;
    o.window = n.window;
    o.batches = n.batches;
    o.fit_space = n.fit_space;
    const double f0 = l.omega0 / two_pi;
    o.fit_window = n.fit_window_hz ? FreqWindow{(*n.fit_window_hz)[0], (*n.fit_window_hz)[1]}
                                   : FreqWindow{0.75 * f0, 1.25 * f0};
    return o;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
        dynamic_cast<const ModelError*>(&e))
        return exit_config;
    if (dynamic_cast<const ConvergenceError*>(&e)) return exit_convergence;
    if (dynamic_cast<const NumericError*>(&e)) return exit_numeric;
    return exit_failure;
}

// ===========================================================================
// simulate / kalman
// ===========================================================================

CommandResult cmd_simulate(const RunConfig& cfg) {
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "simulate");
    const Numerics& n = cfg.numerics;

    if (n.model == ModelKind::linear) {
        const DiscreteModel d = linear_model(cfg);
        const LinearRun run = linear_run(cfg, d, n.kalman, res.summary);
        write_linear_trajectory(dir, cfg, "simulate", run.trajectory);
        if (run.filter) res.summary["filter"] = write_filter_outputs(dir, cfg, "simulate", *run.filter);
        res.summary["steps"] = run.trajectory.size();
        write_json(dir / "simulate.json", res.summary);
        return res;
    }

    const Langevin1D l = langevin_model(cfg);
    const double dt = langevin_step(cfg, l);
    const auto steps = static_cast<std::size_t>(std::llround(n.duration / dt));
    if (steps < 1) throw ConfigError("numerics.duration is shorter than one integrator step");
    LangevinIntegrator integ(l, dt, n.seed);
    {
        CsvWriter csv(dir / "trajectory.csv", {"t", "z", "p", "y_meas", "u"});
        for (std::size_t k = 1; k <= steps; ++k) {
            integ.step();
            if (!integ.ok()) throw DivergenceError("Langevin trajectory diverged", k);
            if (k % n.record_every != 0) continue;
            const double z = integ.position();
            csv.row({static_cast<double>(k) * dt, z, l.mass * integ.velocity(), z, l.mass * integ.feedback()});
        }
    }
    const FrequencyShift fsh = frequency_shift(l);
    json extra = {{"model", "langevin"},
                  {"dt", dt},
                  {"steps", steps},
                  {"record_every", n.record_every},
                  {"initial_state", {integ.initial_state().z, l.mass * integ.initial_state().v}},
                  {"gain", l.gain},
                  {"delay", l.delay},
                  {"delay_samples", integ.delay_samples()},
                  {"validity_bound", fsh.bound},
                  {"units", "t s, z m, p kg m/s, u N"}};
    write_sidecar(dir, "trajectory", cfg, "simulate", extra);
    res.summary["trajectory"] = extra;
    write_json(dir / "simulate.json", res.summary);
    return res;
}

CommandResult cmd_kalman(const RunConfig& cfg) {
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "kalman");
    const DiscreteModel d = linear_model(cfg);
    const LinearRun run = linear_run(cfg, d, true, res.summary);
    write_linear_trajectory(dir, cfg, "kalman", run.trajectory);
    res.summary["filter"] = write_filter_outputs(dir, cfg, "kalman", *run.filter);
    res.summary["model"] = to_json(d);
    write_json(dir / "kalman.json", res.summary);
    return res;
}

// ===========================================================================
// lqr / covariance
// ===========================================================================

CommandResult cmd_lqr(const RunConfig& cfg) {
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "lqr");
    const Numerics& n = cfg.numerics;
    const DiscreteModel d = linear_model(cfg);
    const LqrDesign design = solve_dare(d, state_weight(n), n.lqr_r, n.lqr_tol);
    CostOptions co;
    co.runs = n.cost_runs;
    const CostEstimate cost = estimate_cost(d, design, n.cost_horizon, n.seed, co);
    const CostEstimate open = estimate_cost(d, Eigen::RowVectorXd::Zero(d.dim()), design.q_weight,
                                            design.r_weight, n.cost_horizon, n.seed, co);
    res.summary["design"] = to_json(design);
    res.summary["model"] = to_json(d);
    res.summary["cost"] = {{"monte_carlo_mean", cost.mean},
                           {"monte_carlo_std_error", cost.std_error},
                           {"analytic", cost.analytic},
                           {"horizon", cost.horizon},
                           {"runs", cost.runs}};
    res.summary["open_loop_cost"] = {{"monte_carlo_mean", open.mean},
                                     {"monte_carlo_std_error", open.std_error},
                                     {"analytic", open.analytic}};
    write_json(dir / "lqr.json", res.summary);
    return res;
}

CommandResult cmd_covariance(const RunConfig& cfg) {
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "covariance");
    const Numerics& n = cfg.numerics;
    ContinuousModel c;
    const DiscreteModel d = linear_model(cfg, &c);
    const Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(d.dim(), d.dim());
    const CovarianceTrack track = n.covariance_mode == CovarianceMode::discrete
                                      ? propagate(d, v0, n.steps)
                                      : propagate(c, v0, n.dt, n.steps, n.covariance_substeps);
    {
        CsvWriter csv(dir / "covariance.csv", {"t", "v_00", "v_11", "v_22", "v_33"});
        for (std::size_t k = 0; k < track.values.size(); ++k) {
            const Eigen::MatrixXd& v = track.values[k];
            csv.row({static_cast<double>(k) * track.dt, v(0, 0), v(1, 1), v(2, 2), v(3, 3)});
        }
    }
    write_sidecar(dir, "covariance", cfg, "covariance",
                  {{"mode", std::string(to_string(track.mode))}, {"dt", track.dt}, {"steps", n.steps}});
    const Eigen::MatrixXd vd = steady_state(d);
    const Eigen::MatrixXd vc = steady_state(c);
    res.summary["steady_state_discrete"] = matrix_to_json(vd);
    res.summary["steady_state_continuous"] = matrix_to_json(vc);
    res.summary["relative_difference"] = (vd - vc).norm() / vc.norm();
    res.summary["mode"] = std::string(to_string(track.mode));
    write_json(dir / "steady_state.json", res.summary);
    return res;
}

// ===========================================================================
// psd / shift-sweep / delay-sweep
// ===========================================================================

namespace {

void write_psd_csv(const fs::path& file, const Psd& p) {
    CsvWriter csv(file, {"freq_hz", "psd"});
    for (std::size_t k = 0; k < p.freqs.size(); ++k) csv.row({p.freqs[k], p.values[k]});
}

json psd_json(const Psd& p) {
    return {{"n_segments", p.n_segments},
            {"segment_len", p.segment_len},
            {"window", std::string(to_string(p.window))},
            {"dt", p.dt},
            {"df", p.df()},
            {"integral", p.integral()},
            {"sides", "one-sided"}};
}

} // namespace

CommandResult cmd_psd(const RunConfig& cfg) {
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "psd");
    const Numerics& n = cfg.numerics;

    if (n.model == ModelKind::linear) {
        const DiscreteModel d = linear_model(cfg);
        const LinearRun run = linear_run(cfg, d, false, res.summary);
        const std::vector<double> z = run.trajectory.component(quad_z);
        const Psd p = welch_psd(z, d.dt, std::min(n.segment_len, z.size()), n.overlap, n.window);
        write_psd_csv(dir / "psd.csv", p);
        write_sidecar(dir, "psd", cfg, "psd", {{"psd", psd_json(p)}, {"signal", "z (zero-point units)"}});
        res.summary["psd"] = psd_json(p);
        if (n.fit_window_hz) {
            const LorentzianFit fit = fit_lorentzian(p, {(*n.fit_window_hz)[0], (*n.fit_window_hz)[1]}, n.fit_space);
            res.summary["fit"] = to_json(fit);
        }
        write_json(dir / "fit.json", res.summary);
        return res;
    }

    const Langevin1D l = langevin_model(cfg);
    const SpectrumRunOptions o = spectrum_options(cfg, l);
    BatchedPsd b = simulate_psd(l, o, n.seed);
    write_psd_csv(dir / "psd.csv", b.total);
    write_sidecar(dir, "psd", cfg, "psd", {{"psd", psd_json(b.total)}, {"signal", "z [m]"}});
    res.summary["psd"] = psd_json(b.total);
    res.summary["position_variance"] = b.position_variance;
    res.summary["t_eff_from_variance"] = temperature_from_variance(l, b.position_variance);
    const FrequencyShift fsh = frequency_shift(l);
    res.summary["predicted_shift_hz"] = fsh.shift_hz;
    res.summary["fit_window_hz"] = {o.fit_window.f_min_hz, o.fit_window.f_max_hz};
    try {
        const CenterMeasurement m = fit_center(std::move(b), o);
        res.summary["fit"] = to_json(m.fit);
        res.summary["batch_sigma_hz"] = m.batch_sigma_hz;
        res.summary["batches_fitted"] = m.batches_fitted;
    } catch (const FitError& e) {
        res.summary["fit_error"] = e.what();
        res.exit_code = exit_convergence;
    }
    write_json(dir / "fit.json", res.summary);
    return res;
}

CommandResult cmd_shift_sweep(const RunConfig& cfg) {
    const Numerics& n = cfg.numerics;
    if (n.gains_rel.empty()) throw ConfigError("numerics.gains_rel must list at least one gain");
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "shift-sweep");
    const Langevin1D base = langevin_model(cfg);
    const FrequencyShift ref = frequency_shift(base);
    const SpectrumRunOptions o = spectrum_options(cfg, base);

    struct Row {
        double gain = 0.0;
        std::optional<CenterMeasurement> m;
        FrequencyShift predicted;
        std::string status = "ok";
        int code = exit_ok;
    };
    std::vector<Row> rows(n.gains_rel.size());
    parallel_for(rows.size(), n.threads, [&](std::size_t i) {
        Langevin1D l = base;
        l.gain = n.gains_rel[i] * ref.bound;
        rows[i].gain = l.gain;
        rows[i].predicted = frequency_shift(l);
        try {
            rows[i].m = measure_center(l, o, derive_seed(n.seed, i));
        } catch (const std::exception& e) {
            rows[i].status = e.what();
            rows[i].code = exit_code_for(e);
        }
    });

    std::vector<double> x, y, sig;
    for (const Row& r : rows) {
        if (!r.m) continue;
        x.push_back(r.gain);
        y.push_back(r.m->center_hz);
        sig.push_back(r.m->batch_sigma_hz > 0.0 ? r.m->batch_sigma_hz : r.m->fit_sigma_hz);
    }
    std::optional<LineFit> line;
    if (x.size() >= 2) line = fit_line(x, y, sig);

    {
        CsvWriter csv(dir / "shift_sweep.csv",
                      {"gain", "gain_rel", "center_hz", "fit_sigma_hz", "batch_sigma_hz", "shift_hz",
                       "predicted_shift_hz", "outside_validity", "status"});
        const double nan = std::nan("");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Row& r = rows[i];
            const double c = r.m ? r.m->center_hz : nan;
            const double shift = r.m && line ? c - line->intercept : nan;
            const std::vector<double> v{r.gain, n.gains_rel[i], c, r.m ? r.m->fit_sigma_hz : nan,
                                        r.m ? r.m->batch_sigma_hz : nan, shift, r.predicted.shift_hz,
                                        r.predicted.outside_validity ? 1.0 : 0.0};
            csv.row(v, r.status == "ok" ? "ok" : "failed");
        }
    }
    json summary = {{"kappa_hz_m3_per_n", ref.kappa},
                    {"validity_bound", ref.bound},
                    {"duration", o.duration},
                    {"dt", o.dt},
                    {"points_ok", x.size()},
                    {"points", rows.size()}};
    if (line) {
        summary["slope_hz_m3_per_n"] = line->slope;
        summary["slope_se"] = line->slope_se;
        summary["intercept_hz"] = line->intercept;
        summary["slope_over_kappa"] = line->slope / ref.kappa;
    }
    json failures = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].code != exit_ok) {
            failures.push_back({{"index", i}, {"error", rows[i].status}});
            if (res.exit_code == exit_ok) res.exit_code = rows[i].code;
        }
    summary["failures"] = failures;
    write_sidecar(dir, "shift_sweep", cfg, "shift-sweep", {{"summary", summary}});
    res.summary["sweep"] = summary;
    write_json(dir / "shift_sweep_summary.json", res.summary);
    return res;
}

CommandResult cmd_delay_sweep(const RunConfig& cfg) {
    const Numerics& n = cfg.numerics;
    if (n.delays_rel.empty()) throw ConfigError("numerics.delays_rel must list at least one delay");
    const Langevin1D base = langevin_model(cfg);
    const double dt = langevin_step(cfg, base);
    const double period = base.period();
    for (double d : n.delays_rel)
        if (d > 0.0 && d * period < dt)
            throw ParameterError("delay " + std::to_string(d) + " T is shorter than the step dt = " +
                                 std::to_string(dt) + " s and cannot be resolved");
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "delay-sweep");

    // Index 0 is the delay-free baseline with the same gain.
    std::vector<double> taus{0.0};
    for (double d : n.delays_rel) taus.push_back(d * period);
    std::vector<TemperatureMeasurement> sims(taus.size());
    const std::size_t batches = std::max<std::size_t>(n.batches, 2);
    parallel_for(taus.size(), n.threads, [&](std::size_t i) {
        Langevin1D l = base;
        l.delay = taus[i];
        sims[i] = measure_temperature(l, dt, n.duration, n.burn_in, batches, derive_seed(n.seed, i));
    });

    const TemperatureMeasurement& baseline = sims[0];
    {
        CsvWriter csv(dir / "delay_sweep.csv",
                      {"tau_over_T", "tau_s", "delay_samples", "tau_rounded_over_T", "t_eff_sim",
                       "t_eff_se", "t_eff_analytic", "z_vs_baseline"});
        for (std::size_t i = 1; i < taus.size(); ++i) {
            const TemperatureMeasurement& m = sims[i];
            const double rounded = static_cast<double>(m.delay_samples) * dt;
            const double z = (m.t_eff - baseline.t_eff) /
                             std::sqrt(m.t_eff_se * m.t_eff_se + baseline.t_eff_se * baseline.t_eff_se);
            csv.row({n.delays_rel[i - 1], taus[i], static_cast<double>(m.delay_samples), rounded / period,
                     m.t_eff, m.t_eff_se, delayed_temperature(base, rounded), z});
        }
    }
    json summary = {{"baseline_t_eff", baseline.t_eff},
                    {"baseline_t_eff_se", baseline.t_eff_se},
                    {"baseline_t_eff_analytic", delayed_temperature(base, 0.0)},
                    {"bath_temperature", base.thermal_energy() / constants::k_boltzmann},
                    {"gain", base.gain},
                    {"dt", dt},
                    {"duration", n.duration},
                    {"batches", batches}};
    write_sidecar(dir, "delay_sweep", cfg, "delay-sweep", {{"summary", summary}});
    res.summary["sweep"] = summary;
    write_json(dir / "delay_sweep_summary.json", res.summary);
    return res;
}

// ===========================================================================
// acf
// ===========================================================================

CommandResult cmd_acf(const RunConfig& cfg) {
    const Numerics& n = cfg.numerics;
    const fs::path dir = prepare_output(cfg);
    CommandResult res;
    res.summary = metadata(cfg, "acf");
    const Langevin1D l = langevin_model(cfg);
    if (n.acf_points < 2 || n.spectrum_points < 2) throw ConfigError("acf_points and spectrum_points must be >= 2");
    const double t_max = n.acf_t_max ? *n.acf_t_max : 5.0 / l.gamma_m;
    std::vector<double> lags(n.acf_points);
    for (std::size_t i = 0; i < lags.size(); ++i)
        lags[i] = t_max * static_cast<double>(i) / static_cast<double>(lags.size() - 1);
    const AcfResult acf = acf_curve(l, lags, n.acf_order, l.delay);
    {
        CsvWriter csv(dir / "acf.csv", {"t", "acf_linear", "acf", "correction"});
        for (std::size_t i = 0; i < lags.size(); ++i) {
            const double lin = acf_linear(l, lags[i]);
            csv.row({lags[i], lin, acf.values[i], acf.values[i] - lin});
        }
    }
    write_sidecar(dir, "acf", cfg, "acf",
                  {{"order", std::string(to_string(acf.order))}, {"tau", acf.tau}, {"gain", l.gain}});

    const double f0 = l.omega0 / two_pi;
    const double half = 10.0 * l.gamma_m / two_pi;
    {
        CsvWriter csv(dir / "spectrum.csv", {"freq_hz", "s_linear", "delta_s", "s_first_order", "s_shifted"});
        for (std::size_t i = 0; i < n.spectrum_points; ++i) {
            const double f = std::max(0.0, f0 - half) +
                             (2.0 * half) * static_cast<double>(i) / static_cast<double>(n.spectrum_points - 1);
            const double w = two_pi * f;
            const double s0 = psd_linear(l, w);
            const double ds = psd_correction(l, w);
            csv.row({f, s0, ds, s0 + ds, psd_shifted(l, w)});
        }
    }
    write_sidecar(dir, "spectrum", cfg, "acf",
                  {{"convention", "two-sided angular-frequency density, integral S domega / 2 pi = <z^2>"}});
    const FrequencyShift fsh = frequency_shift(l);
    res.summary["frequency_shift_hz"] = fsh.shift_hz;
    res.summary["kappa_hz_m3_per_n"] = fsh.kappa;
    res.summary["validity_bound"] = fsh.bound;
    res.summary["outside_validity"] = fsh.outside_validity;
    res.summary["t_eff_first_order"] = delayed_temperature(l, l.delay);
    write_json(dir / "acf_summary.json", res.summary);
    return res;
}

// ===========================================================================
// Dispatch
// ===========================================================================

std::vector<std::string_view> command_names() {
    return {"simulate", "kalman", "lqr", "covariance", "psd", "shift-sweep", "delay-sweep", "acf"};
}

CommandResult run_command(std::string_view name, const RunConfig& cfg) {
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "kalman") return cmd_kalman(cfg);
    if (name == "lqr") return cmd_lqr(cfg);
    if (name == "covariance") return cmd_covariance(cfg);
    if (name == "psd") return cmd_psd(cfg);
    if (name == "shift-sweep") return cmd_shift_sweep(cfg);
    if (name == "delay-sweep") return cmd_delay_sweep(cfg);
    if (name == "acf") return cmd_acf(cfg);
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

} // namespace optolev::cli
