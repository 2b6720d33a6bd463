#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracles.hpp"
#include "optolev/constants.hpp"
#include "optolev/errors.hpp"
#include "optolev/params.hpp"
#include "optolev/perturbation.hpp"

using namespace optolev;

namespace {

// Same particle as the desk oscillator with heavier damping (Q near 8), which
// keeps the oscillatory Fourier integrals short.
Langevin1D brisk(double gain_rel = 0.0) {
    const Langevin1D d = oracle::desk_oscillator();
    const double bound = validity_bound(d.mass, d.omega0, 293.0);
    return make_langevin(d.omega0, 6e4, d.mass, 293.0, gain_rel * bound);
}

// 2 int_0^inf f(t) cos(omega t) dt, truncated where the envelope is e^-20.
double cosine_transform(const std::function<double(double)>& f, double omega, double gamma) {
    return 2.0 * oracle::integrate([&](double t) { return f(t) * std::cos(omega * t); }, 0.0,
                                   40.0 / gamma, 800);
}

} // namespace

TEST_SUITE("perturbation") {

TEST_CASE("Green function support and undamped limit") {
    const Langevin1D l = oracle::desk_oscillator();
    CHECK(green_function(l, 0.0) == 0.0);
    CHECK(green_function(l, -1e-6) == 0.0);
    CHECK(green_function(l, 1e-7) > 0.0);
    Langevin1D u = l;
    u.gamma_m = 0.0;
    for (double t : {1e-6, 3.3e-6, 2e-5})
        CHECK(green_function(u, t) == doctest::Approx(std::sin(l.omega0 * t) / l.omega0).epsilon(1e-14));
}

TEST_CASE("Green function solves the homogeneous oscillator equation") {
    const Langevin1D l = oracle::desk_oscillator();
    const double h = l.period() * 1e-4;
    const double scale = 1.0 / l.omega0; // amplitude of G
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double t = 0.37 * l.period() * i;
        const double gm = green_function(l, t - h), g0 = green_function(l, t), gp = green_function(l, t + h);
        const double acc = (gp - 2.0 * g0 + gm) / (h * h);
        const double vel = (gp - gm) / (2.0 * h);
        const double resid = acc + l.gamma_m * vel + l.omega0 * l.omega0 * g0;
        worst = std::max(worst, std::abs(resid) / (l.omega0 * l.omega0 * scale));
    }
    CHECK(worst < 1e-6);
    // Unit initial velocity.
    CHECK(green_function(l, 1e-12) / 1e-12 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("linear ACF: equipartition, evenness and the reference form") {
    const Langevin1D l = oracle::desk_oscillator();
    const double kt = constants::k_boltzmann * 293.0;
    CHECK(acf_linear(l, 0.0) == doctest::Approx(kt / (l.mass * l.omega0 * l.omega0)).epsilon(1e-12));
    for (double t : {1e-7, 4.2e-6, 1e-4, 7e-4}) {
        CHECK(acf_linear(l, t) == acf_linear(l, -t));
        CHECK(acf_linear(l, t) == doctest::Approx(oracle::oscillator_acf(l, t)).epsilon(1e-12));
    }
    Langevin1D undamped = l;
    undamped.gamma_m = 0.0;
    CHECK_THROWS_AS(acf_linear(undamped, 0.0), NumericError);
}

TEST_CASE("numerical Fourier transform of the linear ACF is the Lorentzian") {
    const Langevin1D l = brisk();
    for (double f : {0.2, 0.9, 0.97, 1.0, 1.04, 1.3, 2.5}) {
        const double omega = f * l.omega0;
        const double ft = cosine_transform([&](double t) { return acf_linear(l, t); }, omega, l.gamma_m);
        CHECK(ft == doctest::Approx(psd_linear(l, omega)).epsilon(1e-4));
    }
}

TEST_CASE("no feedback, no correction") {
    const Langevin1D l = oracle::desk_oscillator();
    CHECK(acf_delay_correction(l, 1e-5, 3e-6) == 0.0);
    CHECK(diagram_quadrature(l, 1e-5, 3e-6).value == 0.0);
    CHECK(psd_correction(l, 0.9 * l.omega0) == 0.0);
    CHECK(frequency_shift(l).shift_hz == 0.0);
}

TEST_CASE("closed form equals the diagram quadrature without delay") {
    for (const Langevin1D& l : {brisk(0.01), oracle::desk_oscillator(0.01), oracle::desk_oscillator(-0.03)}) {
        for (int i = 0; i <= 10; ++i) {
            const double t = 0.5 * i / l.gamma_m;
            const QuadratureResult q = diagram_quadrature(l, t, 0.0);
            const double cf = acf_delay_correction(l, t, 0.0);
            CHECK(std::abs(q.value - cf) <= 1e-6 * std::abs(cf));
            CHECK(q.error_estimate > 0.0);
        }
    }
}

TEST_CASE("closed form is exact once the lag exceeds the delay") {
    const Langevin1D l = brisk(-0.01);
    for (double frac : {0.25, 0.75, 1.0, 3.0}) {
        const double tau = frac * l.period();
        for (double k : {1.0, 1.5, 4.0}) {
            const double t = k * tau;
            const double q = diagram_quadrature(l, t, tau).value;
            CHECK(acf_delay_correction(l, t, tau) == doctest::Approx(q).epsilon(1e-6));
        }
    }
}

TEST_CASE("zero-delay correction equals the area under the PSD correction") {
    const Langevin1D l = brisk(0.01);
    auto ds = [&](double w) { return psd_correction(l, w) / constants::pi; };
    // Panels of about gamma/4 across the resonance, then a coarse tail.
    const double area = oracle::integrate(ds, 0.0, 3.0 * l.omega0, 200) +
                        oracle::integrate(ds, 3.0 * l.omega0, 300.0 * l.omega0, 400);
    const double q = diagram_quadrature(l, 0.0, 0.0).value;
    CHECK(area == doctest::Approx(q).epsilon(1e-4));
}

TEST_CASE("Fourier transform of the zero-delay correction is the PSD correction") {
    const Langevin1D l = brisk(0.01);
    for (double f : {0.85, 0.95, 1.05, 1.2}) {
        const double omega = f * l.omega0;
        const double ft = cosine_transform([&](double t) { return acf_delay_correction(l, t, 0.0); },
                                           omega, l.gamma_m);
        CHECK(ft == doctest::Approx(psd_correction(l, omega)).epsilon(1e-4));
    }
}

TEST_CASE("softening feedback cools at a quarter period and heats at three quarters") {
    const Langevin1D l = oracle::desk_oscillator(-0.01);
    const double period = l.period();
    const double t0 = delayed_temperature(l, 0.0);
    const double cool = delayed_temperature(l, 0.25 * period);
    const double heat = delayed_temperature(l, 0.75 * period);
    CHECK(cool < 293.0);
    CHECK(heat > 293.0);
    CHECK(t0 == doctest::Approx(293.0).epsilon(0.05));
    const double h = 1e-3 * period;
    CHECK(delayed_temperature(l, 0.25 * period + h) - delayed_temperature(l, 0.25 * period - h) < 0.0);
    CHECK(delayed_temperature(l, 0.75 * period + h) - delayed_temperature(l, 0.75 * period - h) > 0.0);
    // Extremes of a 16-point delay grid sit at T/4 and 3T/4.
    int lo = 0, hi = 0;
    std::vector<double> temps;
    for (int i = 0; i < 16; ++i) temps.push_back(delayed_temperature(l, period * i / 16.0));
    for (int i = 1; i < 16; ++i) {
        if (temps[i] < temps[lo]) lo = i;
        if (temps[i] > temps[hi]) hi = i;
    }
    CHECK(lo == 4);
    CHECK(hi == 12);
    // The quadrature agrees on the signs.
    CHECK(diagram_quadrature(l, 0.0, 0.25 * period).value < 0.0);
    CHECK(diagram_quadrature(l, 0.0, 0.75 * period).value > 0.0);
}

TEST_CASE("hardening feedback swaps cooling and heating") {
    const Langevin1D l = oracle::desk_oscillator(0.01);
    CHECK(delayed_temperature(l, 0.25 * l.period()) > 293.0);
    CHECK(delayed_temperature(l, 0.75 * l.period()) < 293.0);
}

TEST_CASE("quadrature stays bounded for delays far beyond the damping time") {
    const Langevin1D l = brisk(0.01);
    double near = 0.0;
    for (int i = 0; i <= 8; ++i)
        near = std::max(near, std::abs(diagram_quadrature(l, 0.0, l.period() * i / 8.0).value));
    for (double k : {1.0, 2.0, 5.0, 10.0, 20.0, 40.0}) {
        const double v = diagram_quadrature(l, 0.0, k / l.gamma_m).value;
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) <= near);
    }
}

TEST_CASE("PSD correction: node at resonance and sign change across it") {
    const Langevin1D l = oracle::desk_oscillator(0.02);
    CHECK(psd_correction(l, l.omega0) == 0.0);
    CHECK(psd_correction(l, 0.99 * l.omega0) < 0.0);
    CHECK(psd_correction(l, 1.01 * l.omega0) > 0.0);
    const Langevin1D s = oracle::desk_oscillator(-0.02);
    CHECK(psd_correction(s, 0.99 * s.omega0) > 0.0);
    CHECK(psd_correction(s, 1.01 * s.omega0) < 0.0);
}

TEST_CASE("linear plus correction is the shifted Lorentzian to second order in the gain") {
    for (double f : {0.98, 0.995, 1.004, 1.02}) {
        auto residual = [&](double eps) {
            const Langevin1D l = oracle::desk_oscillator(eps);
            const double w = f * l.omega0;
            return psd_shifted(l, w) - psd_linear(l, w) - psd_correction(l, w);
        };
        const double ratio = residual(4e-4) / residual(2e-4);
        CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("frequency shift law") {
    const Langevin1D l = oracle::desk_oscillator(0.05);
    const FrequencyShift s = frequency_shift(l);
    const double kt = constants::k_boltzmann * 293.0;
    const double kappa = 3.0 * kt / (4.0 * constants::pi * l.mass * l.mass * std::pow(l.omega0, 3));
    CHECK(s.kappa == doctest::Approx(kappa).epsilon(1e-12));
    CHECK(s.shift_hz == doctest::Approx(kappa * l.gain).epsilon(1e-12));
    CHECK(s.bound == doctest::Approx(l.mass * l.mass * std::pow(l.omega0, 4) / (2.0 * kt)).epsilon(1e-12));
    CHECK_FALSE(s.outside_validity);
    CHECK(frequency_shift(oracle::desk_oscillator(0.99)).outside_validity == false);
    CHECK(frequency_shift(oracle::desk_oscillator(1.0)).outside_validity);
    CHECK(frequency_shift(oracle::desk_oscillator(-1.5)).outside_validity);
    // Near the bound the first-order shift is a fixed fraction of the linewidth scale.
    const FrequencyShift at = frequency_shift(oracle::desk_oscillator(1.0));
    CHECK(at.shift_hz == doctest::Approx(3.0 * l.omega0 / (8.0 * constants::pi)).epsilon(1e-9));
}

TEST_CASE("ACF curves are even and select the requested order") {
    const Langevin1D l = oracle::desk_oscillator(0.02);
    const std::vector<double> lags{-3e-5, -1e-5, 0.0, 1e-5, 3e-5};
    const AcfResult lin = acf_curve(l, lags, AcfOrder::linear, 0.0);
    const AcfResult first = acf_curve(l, lags, AcfOrder::first_order, 2e-6);
    CHECK(lin.values[2] > 0.0);
    CHECK(first.tau == 2e-6);
    CHECK(to_string(first.order) == "first_order");
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const std::size_t j = lags.size() - 1 - i;
        CHECK(std::abs(lin.values[i] - lin.values[j]) <= 1e-12 * std::abs(lin.values[2]));
        CHECK(std::abs(first.values[i] - first.values[j]) <= 1e-12 * std::abs(first.values[2]));
        CHECK(lin.values[i] == acf_linear(l, lags[i]));
        CHECK(first.values[i] == acf_delayed(l, lags[i], 2e-6));
    }
}

TEST_CASE("invalid inputs") {
    const Langevin1D l = oracle::desk_oscillator(0.01);
    CHECK_THROWS_AS(diagram_quadrature(l, 0.0, -1e-6), ParameterError);
    Langevin1D over = l;
    over.gamma_m = 3.0 * l.omega0;
    CHECK_THROWS_AS(green_function(over, 1e-6), ParameterError);
    QuadratureOptions tight;
    tight.rel_tol = 1e-17;
    CHECK_THROWS_AS(diagram_quadrature(l, 0.0, 0.0, tight), ConvergenceError);
}

} // TEST_SUITE
