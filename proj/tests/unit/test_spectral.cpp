#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "optolev/constants.hpp"
#include "optolev/discretize.hpp"
#include "optolev/errors.hpp"
#include "optolev/experiments.hpp"
#include "optolev/simulate.hpp"
#include "optolev/spectral.hpp"

using namespace optolev;
using constants::pi;

namespace {

std::vector<double> white(std::size_t n, double sigma, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<double> x(n);
    for (double& v : x) v = nd(gen);
    return x;
}

// One-sided PSD in Hz of an exact Lorentzian, with multiplicative Gaussian noise.
Psd synthetic_lorentzian(double d, double gamma, double f0, double noise, std::size_t nseg,
                         std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Psd p;
    p.dt = 1.0 / 640e3;
    p.segment_len = 16384;
    p.n_segments = nseg;
    for (std::size_t i = 0; i <= p.segment_len / 2; ++i) {
        const double f = static_cast<double>(i) * p.df();
        p.freqs.push_back(f);
        p.values.push_back(lorentzian(2.0 * pi * f, d, gamma, 2.0 * pi * f0) * (1.0 + noise * nd(gen)));
    }
    return p;
}

// Exactly discretized free oscillator, sampled as a Gaussian AR process.
std::vector<double> oscillator_samples(const Langevin1D& l, double dt, std::size_t n, std::uint64_t seed) {
    ContinuousModel c;
    c.drift = Eigen::MatrixXd(2, 2);
    c.drift << 0.0, 1.0, -l.omega0 * l.omega0, -l.gamma_m;
    c.input = Eigen::VectorXd::Zero(2);
    c.observe = Eigen::RowVectorXd::Zero(2);
    c.process_noise = Eigen::MatrixXd::Zero(2, 2);
    c.process_noise(1, 1) = l.diffusion;
    c.optical_input_mean = Eigen::VectorXd::Zero(2);
    const DiscreteModel d = discretize(c, dt);
    const Eigen::Matrix2d a = d.a_d;
    const Eigen::LLT<Eigen::Matrix2d> llt(Eigen::Matrix2d(d.q_d));
    const Eigen::Matrix2d lq = llt.matrixL();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    const double s = std::sqrt(l.linear_position_variance());
    Eigen::Vector2d z(s * nd(gen), s * l.omega0 * nd(gen));
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        z = a * z + lq * Eigen::Vector2d(nd(gen), nd(gen));
        out[k] = z[0];
    }
    return out;
}

} // namespace

TEST_SUITE("spectral") {

TEST_CASE("a pure tone integrates to A^2/2") {
    const double dt = 1e-5, a = 3.0;
    for (double f : {1234.5, 10000.0, 31111.0}) {
        std::vector<double> x(1 << 18);
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = a * std::sin(2.0 * pi * f * k * dt);
        const Psd p = welch_psd(x, dt, 4096);
        CHECK(p.integral() == doctest::Approx(a * a / 2.0).epsilon(0.02));
    }
}

TEST_CASE("white noise has a flat density 2 sigma^2 dt") {
    const double dt = 2e-6, sigma = 0.7;
    const std::vector<double> x = white(3000000, sigma, 5);
    for (Window w : {Window::hann, Window::rectangular}) {
        const Psd p = welch_psd(x, dt, 1024, 0.5, w);
        const double level = 2.0 * sigma * sigma * dt;
        double mean = 0.0;
        bool within = true;
        // Per-segment mean removal also takes power out of bin 1 under the Hann kernel.
        const std::size_t first = w == Window::hann ? 2 : 1;
        for (std::size_t i = first; i + 1 < p.values.size(); ++i) {
            mean += p.values[i];
            within = within && std::abs(p.values[i] / level - 1.0) < 0.1;
        }
        mean /= static_cast<double>(p.values.size() - 1 - first);
        CHECK(within);
        CHECK(mean == doctest::Approx(level).epsilon(0.005));
        CHECK(p.freqs.size() == 513);
        CHECK(p.freqs.back() == doctest::Approx(0.5 / dt));
    }
}

TEST_CASE("Parseval holds for stationary coloured noise") {
    const double dt = 1e-6;
    std::vector<double> x = white(1 << 20, 1.0, 17);
    for (std::size_t k = 1; k < x.size(); ++k) x[k] += 0.9 * x[k - 1];
    double m = 0.0, v = 0.0;
    for (double s : x) m += s;
    m /= static_cast<double>(x.size());
    for (double s : x) v += (s - m) * (s - m);
    v /= static_cast<double>(x.size());
    // Segments must be long against the 10-sample correlation time, or mean removal drops visible power.
    for (std::size_t seg : {2048, 8192, 32768}) {
        const Psd p = welch_psd(x, dt, seg);
        CHECK(p.integral() == doctest::Approx(v).epsilon(0.02));
    }
}

TEST_CASE("streaming and batch estimates are identical") {
    const std::vector<double> x = white(50000, 1.0, 6);
    const Psd batch = welch_psd(x, 1e-6, 2048, 0.5);
    WelchAccumulator acc(2048, 1e-6, 0.5);
    for (double v : x) acc.push(v);
    const Psd stream = acc.result();
    CHECK(stream.values == batch.values);
    CHECK(stream.n_segments == batch.n_segments);
    CHECK(acc.segments() == (50000 - 2048) / 1024 + 1);
}

TEST_CASE("averaging weights by segment count") {
    const std::vector<double> x = white(40000, 1.0, 8);
    const std::vector<double> first(x.begin(), x.begin() + 10240);
    const std::vector<double> second(x.begin() + 10240, x.end());
    const std::vector<Psd> parts{welch_psd(first, 1e-6, 1024, 0.0), welch_psd(second, 1e-6, 1024, 0.0)};
    const Psd avg = average(parts);
    const Psd whole = welch_psd(std::vector<double>(x.begin(), x.begin() + 39936), 1e-6, 1024, 0.0);
    CHECK(avg.n_segments == whole.n_segments);
    for (std::size_t i = 0; i < avg.values.size(); ++i)
        CHECK(avg.values[i] == doctest::Approx(whole.values[i]).epsilon(1e-12));
}

TEST_CASE("too-short records are rejected") {
    const std::vector<double> x = white(1000, 1.0, 1);
    CHECK_THROWS_AS(welch_psd(x, 1e-6, 2048), ParameterError);
    CHECK_THROWS_AS(WelchAccumulator(16, 1e-6, 1.0), ParameterError);
    CHECK(parse_window("rectangular") == Window::rectangular);
    CHECK_THROWS_AS(parse_window("kaiser"), ConfigError);
}

TEST_CASE("fit recovers a noisy synthetic Lorentzian") {
    const double d = 2.0e-3, gamma = 1.3e4, f0 = 80e3;
    const Psd p = synthetic_lorentzian(d, gamma, f0, 0.01, 10000, 3);
    const LorentzianFit fit = fit_lorentzian(p, {60e3, 100e3});
    REQUIRE(fit.converged);
    CHECK(fit.reduced_chi2 == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(fit.d_amp - d) < 3.0 * std::sqrt(fit.covariance(0, 0)));
    CHECK(std::abs(fit.gamma - gamma) < 3.0 * std::sqrt(fit.covariance(1, 1)));
    CHECK(std::abs(fit.omega0 - 2.0 * pi * f0) < 3.0 * std::sqrt(fit.covariance(2, 2)));
    CHECK(fit.center_sigma_hz() == doctest::Approx(std::sqrt(fit.covariance(2, 2)) / (2.0 * pi)));
}

TEST_CASE("fit reproduces a 77.8 kHz centre") {
    const Psd p = synthetic_lorentzian(1.0, 6e4, 77.8e3, 0.05, 50, 9);
    for (FitSpace space : {FitSpace::linear, FitSpace::log}) {
        const LorentzianFit fit = fit_lorentzian(p, {55e3, 100e3}, space);
        CHECK(fit.center_hz() == doctest::Approx(77.8e3).epsilon(1e-3));
    }
}

TEST_CASE("fit is a local minimum of its cost") {
    const Psd p = synthetic_lorentzian(1.0, 1.3e4, 80e3, 0.02, 400, 10);
    const FreqWindow w{60e3, 100e3};
    const LorentzianFit fit = fit_lorentzian(p, w);
    const double best = lorentzian_cost(p, w, fit.d_amp, fit.gamma, fit.omega0);
    for (double s : {0.99, 1.01}) {
        CHECK(lorentzian_cost(p, w, fit.d_amp * s, fit.gamma, fit.omega0) > best);
        CHECK(lorentzian_cost(p, w, fit.d_amp, fit.gamma * s, fit.omega0) > best);
        CHECK(lorentzian_cost(p, w, fit.d_amp, fit.gamma, fit.omega0 * s) > best);
    }
}

TEST_CASE("flat spectra and narrow windows are fit errors") {
    Psd flat = synthetic_lorentzian(1.0, 1.3e4, 80e3, 0.0, 100, 1);
    std::fill(flat.values.begin(), flat.values.end(), 1e-3);
    CHECK_THROWS_AS(fit_lorentzian(flat, {60e3, 100e3}), FitError);
    const Psd p = synthetic_lorentzian(1.0, 1.3e4, 80e3, 0.01, 100, 1);
    CHECK_THROWS_AS(fit_lorentzian(p, {79e3, 80e3}), FitError);
}

TEST_CASE("oscillator spectrum yields the generating frequency and damping") {
    const Langevin1D l = oracle::desk_oscillator();
    const double dt = 1.0 / 640e3;
    const std::vector<double> x = oscillator_samples(l, dt, static_cast<std::size_t>(250.0 / dt), 44);
    const Psd p = welch_psd(x, dt, 16384);
    const LorentzianFit fit = fit_lorentzian(p, {60e3, 100e3});
    CHECK(fit.omega0 == doctest::Approx(l.omega0).epsilon(0.005));
    CHECK(fit.gamma == doctest::Approx(l.gamma_m).epsilon(0.1));
    // One-sided density per Hz is twice the two-sided angular-frequency form.
    CHECK(fit.d_amp == doctest::Approx(2.0 * l.diffusion).epsilon(0.05));
    CHECK(p.integral() == doctest::Approx(l.linear_position_variance()).epsilon(0.02));
}

TEST_CASE("driven spectrum") {
    const Langevin1D l = make_langevin(2.0 * pi * 77.8e3, 1.3e4, 2.8e-18, 293.0);
    const double w = 2.0 * pi * 70e3;
    CHECK(driven_psd(l, 0.0, 2.0 * pi * 90e3, 1.0, w) ==
          doctest::Approx(lorentzian(w, l.diffusion, l.gamma_m, l.omega0)).epsilon(1e-14));

    const double f0 = 1e-15, wd = 2.0 * pi * 90e3, dur = 0.5, tau = dur / 2.0;
    const double den = std::pow(wd * wd - l.omega0 * l.omega0, 2) + l.gamma_m * l.gamma_m * wd * wd;
    CHECK(driven_psd(l, f0, wd, dur, wd) ==
          doctest::Approx((l.diffusion + f0 * f0 * tau / (l.mass * l.mass)) / den).epsilon(1e-13));

    std::vector<double> freqs;
    for (double f = 60e3; f <= 100e3; f += 1.0) freqs.push_back(f);
    const Psd model = driven_psd_model(l, f0, wd, dur, freqs);
    std::size_t best = 0;
    for (std::size_t i = 0; i < model.values.size(); ++i)
        if (model.values[i] > model.values[best]) best = i;
    CHECK(model.freqs[best] == doctest::Approx(90e3).epsilon(1e-9));
    CHECK_THROWS_AS(driven_psd(l, f0, wd, 0.0, wd), ParameterError);
}

TEST_CASE("feedback gain chain") {
    CHECK(compose_feedback_gain(1, 1, 1, 1, 1) == 1.0);
    const double g = compose_feedback_gain(3.06e-15, 11.27, 1.0, 11.00, 1.504e4);
    CHECK(g == doctest::Approx(3.06e-15 * 11.27 * 1331.0 * 1.504e4 * 1.504e4 * 1.504e4).epsilon(1e-14));
    CHECK(compose_feedback_gain(3.06e-15, 11.27, 1.0, 22.00, 1.504e4) == doctest::Approx(8.0 * g).epsilon(1e-14));
    CHECK(compose_feedback_gain(3.06e-15, 11.27, 2.0, 11.00, 1.504e4) == doctest::Approx(2.0 * g).epsilon(1e-14));
    CHECK(compose_feedback_gain(3.06e-15, 11.5, 1.0, 11.00, 1.504e4) > g);
    CHECK_THROWS_AS(compose_feedback_gain(0.0, 1, 1, 1, 1), ParameterError);
    CHECK_THROWS_AS(compose_feedback_gain(1, 1, 1, -1, 1), ParameterError);
}

TEST_CASE("hardening feedback raises the fitted centre") {
    const Langevin1D free = oracle::desk_oscillator();
    const Langevin1D hard = oracle::desk_oscillator(0.02);
    SpectrumRunOptions o;
    o.dt = free.period() / 200.0;
    o.duration = 2.0;
    o.batches = 4;
    o.fit_window = {60e3, 100e3};
    const CenterMeasurement a = measure_center(free, o, 5);
    const CenterMeasurement b = measure_center(hard, o, 5);
    CHECK(b.center_hz - a.center_hz > 600.0);
}

} // TEST_SUITE
