#include "optolev/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "optolev/perturbation.hpp"
#include "optolev/simulate.hpp"

namespace optolev {

namespace {

std::size_t steps_for(double duration, double dt) {
    if (!(duration > 0.0)) throw ParameterError("duration must be > 0");
    return static_cast<std::size_t>(std::llround(duration / dt));
}

double mean_sd_error(const std::vector<double>& v, double& mean) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

} // namespace

BatchedPsd simulate_psd(const Langevin1D& l, const SpectrumRunOptions& opts, std::uint64_t seed) {
    if (opts.batches < 1 || opts.decimate < 1) throw ParameterError("batches and decimate must be >= 1");
    const std::size_t burn = steps_for(opts.duration * opts.burn_in + opts.dt, opts.dt);
    const std::size_t total = steps_for(opts.duration, opts.dt);
    const std::size_t per_batch = total / opts.batches;
    const double sample_dt = opts.dt * static_cast<double>(opts.decimate);
    if (per_batch / opts.decimate < opts.segment_len)
        throw ParameterError("each batch is shorter than one Welch segment; raise duration or lower batches");

    LangevinIntegrator integ(l, opts.dt, seed);
    for (std::size_t k = 0; k < burn; ++k) integ.step();

    BatchedPsd out;
    out.parts.reserve(opts.batches);
    double sum_z2 = 0.0;
    std::size_t n_z2 = 0;
    for (std::size_t b = 0; b < opts.batches; ++b) {
        WelchAccumulator acc(opts.segment_len, sample_dt, opts.overlap, opts.window);
        for (std::size_t k = 0; k < per_batch; ++k) {
            integ.step();
            if ((k + 1) % opts.decimate == 0) {
                const double z = integ.position();
                acc.push(z);
                sum_z2 += z * z;
                ++n_z2;
            }
        }
        if (!integ.ok())
            throw DivergenceError("Langevin trajectory diverged", integ.steps_taken());
        out.parts.push_back(acc.result());
    }
    out.position_variance = sum_z2 / static_cast<double>(n_z2);
    out.total = average(out.parts);
    return out;
}

CenterMeasurement fit_center(BatchedPsd psd, const SpectrumRunOptions& opts) {
    CenterMeasurement out;
    out.position_variance = psd.position_variance;
    out.fit = fit_lorentzian(psd.total, opts.fit_window, opts.fit_space);
    out.center_hz = out.fit.center_hz();
    out.fit_sigma_hz = out.fit.center_sigma_hz();
    if (psd.parts.size() >= 2) {
        std::vector<double> centers;
        for (const Psd& p : psd.parts) {
            try {
                centers.push_back(fit_lorentzian(p, opts.fit_window, opts.fit_space).center_hz());
            } catch (const FitError&) {
                // a batch without a clean peak does not contribute
            }
        }
        out.batches_fitted = centers.size();
        double mean = 0.0;
        if (centers.size() >= 2) out.batch_sigma_hz = mean_sd_error(centers, mean);
    }
    out.psd = std::move(psd.total);
    return out;
}

CenterMeasurement measure_center(const Langevin1D& l, const SpectrumRunOptions& opts,
                                 std::uint64_t seed) {
    return fit_center(simulate_psd(l, opts, seed), opts);
}

TemperatureMeasurement measure_temperature(const Langevin1D& l, double dt, double duration,
                                           double burn_in, std::size_t batches,
                                           std::uint64_t seed) {
    if (batches < 2) throw ParameterError("temperature measurement needs >= 2 batches");
    LangevinIntegrator integ(l, dt, seed);
    const std::size_t burn = steps_for(duration * burn_in + dt, dt);
    const std::size_t per_batch = steps_for(duration, dt) / batches;
    for (std::size_t k = 0; k < burn; ++k) integ.step();
    std::vector<double> means;
    means.reserve(batches);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        double s2 = 0.0;
        for (std::size_t k = 0; k < per_batch; ++k) {
            integ.step();
            const double z = integ.position();
            s2 += z * z;
            sum += z;
        }
        if (!integ.ok()) throw DivergenceError("Langevin trajectory diverged", integ.steps_taken());
        sum2 += s2;
        means.push_back(s2 / static_cast<double>(per_batch));
    }
    const double n = static_cast<double>(per_batch * batches);
    const double zbar = sum / n;
    TemperatureMeasurement out;
    out.delay_samples = integ.delay_samples();
    out.position_variance = sum2 / n - zbar * zbar;
    double mean = 0.0;
    const double se = mean_sd_error(means, mean);
    out.t_eff = temperature_from_variance(l, out.position_variance);
    out.t_eff_se = temperature_from_variance(l, se);
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
    if (x.size() != y.size() || x.size() < 2 || (!sigma.empty() && sigma.size() != x.size()))
        throw ParameterError("line fit needs >= 2 aligned points");
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    const double xm = sx / sw, ym = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        sxx += w * (x[i] - xm) * (x[i] - xm);
        sxy += w * (x[i] - xm) * (y[i] - ym);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ym - f.slope * xm;
    if (!sigma.empty()) {
        f.slope_se = std::sqrt(1.0 / sxx);
    } else if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
    }
    return f;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex m;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

} // namespace optolev
