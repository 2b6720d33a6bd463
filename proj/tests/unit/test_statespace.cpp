#include <doctest.h>

#include <cmath>

#include "optolev/constants.hpp"
#include "optolev/discretize.hpp"
#include "optolev/errors.hpp"
#include "optolev/simulate.hpp"
#include "optolev/statespace.hpp"

using namespace optolev;

namespace {

ContinuousModel model_for(const PhysicalParams& p, const ModelOptions& o = {}) {
    return build_continuous(p, derive_scales(p), o);
}

} // namespace

TEST_SUITE("statespace") {

TEST_CASE("drift matrix has the coupled-quadrature pattern") {
    PhysicalParams p;
    p.cavity_linewidth = 3.0;
    p.detuning = 5.0;
    p.coupling = 7.0;
    p.mech_freq = 11.0;
    p.gamma_override = 0.5;
    const ContinuousModel m = model_for(p);
    Eigen::Matrix4d expected;
    expected << -1.5, 5.0, 0.0, 0.0,
                -5.0, -1.5, -14.0, 0.0,
                0.0, 0.0, 0.0, 11.0,
                -14.0, 0.0, -11.0, -0.5;
    CHECK((m.drift - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.drift.trace() == doctest::Approx(-p.cavity_linewidth - 0.5).epsilon(1e-15));
    CHECK(m.input == Eigen::Vector4d(0, 0, 0, 1));
}

TEST_CASE("trace of the drift is -kappa - gamma for random parameters") {
    for (int i = 1; i <= 20; ++i) {
        PhysicalParams p;
        p.cavity_linewidth = 1e5 * i;
        p.pressure = 10.0 * i;
        p.detuning = -3e4 * i;
        const ContinuousModel m = model_for(p);
        CHECK(m.drift.trace() == doctest::Approx(-p.cavity_linewidth - derive_scales(p).gamma_th).epsilon(1e-15));
    }
}

TEST_CASE("zero coupling decouples optics from mechanics") {
    PhysicalParams p;
    p.coupling = 0.0;
    const ContinuousModel m = model_for(p);
    CHECK(m.drift.block(0, 2, 2, 2).isZero(0.0));
    CHECK(m.drift.block(2, 0, 2, 2).isZero(0.0));
}

TEST_CASE("process noise enters the momentum row only") {
    PhysicalParams p;
    const DerivedScales s = derive_scales(p);
    const ContinuousModel m = model_for(p);
    const double thermal = 2.0 * s.gamma_th * (1.0 + 2.0 * s.mean_phonon);
    const double backaction = p.backaction_psd / (s.p_zpm * s.p_zpm);
    CHECK(m.process_noise(3, 3) == doctest::Approx(thermal + backaction).epsilon(1e-14));
    Eigen::MatrixXd rest = m.process_noise;
    rest(3, 3) = 0.0;
    CHECK(rest.isZero(0.0));
    CHECK(m.measure_noise == 1.0);
}

TEST_CASE("detection efficiency does not change the unconditioned noise") {
    PhysicalParams a, b;
    a.detection_efficiency = 1.0;
    b.detection_efficiency = 0.0;
    CHECK(model_for(a).process_noise == model_for(b).process_noise);
}

TEST_CASE("measurement row selects Z by default and P on request") {
    PhysicalParams p;
    CHECK(model_for(p).observe == Eigen::RowVector4d(0, 0, 1, 0));
    ModelOptions o;
    o.measured = MeasuredComponent::P;
    CHECK(model_for(p, o).observe == Eigen::RowVector4d(0, 0, 0, 1));
    CHECK(parse_measured_component("P") == MeasuredComponent::P);
    CHECK_THROWS_AS(parse_measured_component("X"), ConfigError);
}

TEST_CASE("cavity input noise and optical drive options") {
    PhysicalParams p;
    ModelOptions o;
    o.cavity_input_noise = true;
    o.optical_input_x = 2.0;
    const ContinuousModel m = model_for(p, o);
    CHECK(m.process_noise(0, 0) == p.cavity_linewidth);
    CHECK(m.process_noise(1, 1) == p.cavity_linewidth);
    CHECK(m.optical_input_mean[0] == doctest::Approx(2.0 * std::sqrt(p.cavity_linewidth)));
    CHECK(m.optical_input_mean[1] == 0.0);

    ModelOptions bad;
    bad.measurement_noise = 0.0;
    CHECK_THROWS_AS(model_for(p, bad), ModelError);
}

TEST_CASE("mechanical block of exp(A dt) is a damped rotation") {
    PhysicalParams p;
    p.coupling = 0.0;
    p.detuning = 0.0;
    p.gamma_override = 1.3e4;
    const ContinuousModel m = model_for(p);
    const double w = p.mech_freq, g = 1.3e4;
    const double wd = std::sqrt(w * w - g * g / 4.0);
    for (double dt : {1e-7, 1e-6, 2e-5}) {
        const Eigen::MatrixXd e = matrix_exp(m.drift * dt);
        const double decay = std::exp(-g * dt / 2.0), c = std::cos(wd * dt), s = std::sin(wd * dt);
        Eigen::Matrix2d rot;
        rot << c + g / (2.0 * wd) * s, w / wd * s,
               -w / wd * s, c - g / (2.0 * wd) * s;
        rot *= decay;
        CHECK((e.block(2, 2, 2, 2) - rot).norm() < 1e-12);
    }
}

TEST_CASE("Langevin model from parameters") {
    PhysicalParams p;
    p.gamma_override = 1.3e4;
    p.mech_freq = 2.0 * constants::pi * 81.5e3;
    const Langevin1D l = build_langevin(p, 0.0, 0.0);
    CHECK(l.omega0 == p.mech_freq);
    CHECK(l.gamma_m == 1.3e4);
    CHECK(l.diffusion ==
          doctest::Approx(2.0 * 1.3e4 * constants::k_boltzmann * p.effective_temperature / l.mass).epsilon(1e-14));
    CHECK(l.thermal_energy() == doctest::Approx(constants::k_boltzmann * p.effective_temperature).epsilon(1e-14));
    CHECK(l.linear_position_variance() ==
          doctest::Approx(constants::k_boltzmann * p.effective_temperature / (l.mass * l.omega0 * l.omega0))
              .epsilon(1e-14));
    CHECK(l.period() == doctest::Approx(1.0 / 81.5e3).epsilon(1e-14));
}

TEST_CASE("damped frequency tends to omega0 as damping vanishes") {
    double prev_gap = 1e300;
    for (double g : {1e4, 1e3, 1e2, 1.0, 0.0}) {
        const Langevin1D l = make_langevin(5e5, g, 1e-18, 300.0);
        const double gap = std::abs(l.damped_frequency() - 5e5);
        CHECK(gap <= prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap == 0.0);
}

TEST_CASE("overdamped or malformed oscillators are rejected") {
    CHECK_THROWS_AS(make_langevin(1.0, 2.0, 1.0, 300.0), ParameterError);
    CHECK_THROWS_AS(make_langevin(1.0, 2.5, 1.0, 300.0), ParameterError);
    CHECK_THROWS_AS(make_langevin(1.0, 0.1, -1.0, 300.0), ParameterError);
    CHECK_THROWS_AS(make_langevin(1.0, 0.1, 1.0, 300.0, 0.0, -1e-3), ParameterError);
    CHECK_NOTHROW(make_langevin(1.0, 1.9, 1.0, 300.0));
    try {
        make_langevin(1.0, 3.0, 1.0, 300.0);
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("omega0 > gamma_m / 2") != std::string::npos);
    }
}

TEST_CASE("without feedback the delay has no effect") {
    const double w = 2.0 * constants::pi * 80e3;
    const Langevin1D a = make_langevin(w, 1.3e4, 2.8e-18, 293.0, 0.0, 0.0);
    const Langevin1D b = make_langevin(w, 1.3e4, 2.8e-18, 293.0, 0.0, 0.37 * a.period());
    const double dt = a.period() / 200.0;
    const Trajectory ta = run_langevin(a, dt, 5000, 9);
    const Trajectory tb = run_langevin(b, dt, 5000, 9);
    REQUIRE(ta.size() == tb.size());
    bool same = true;
    for (std::size_t k = 0; k < ta.size(); ++k) same = same && ta.states[k] == tb.states[k];
    CHECK(same);
}

} // TEST_SUITE
