#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "optolev/covariance.hpp"
#include "optolev/errors.hpp"

using namespace optolev;
using Eigen::MatrixXd;

namespace {

double rel(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / b.norm(); }

} // namespace

TEST_SUITE("covariance") {

TEST_CASE("identity dynamics without noise keep V fixed") {
    DiscreteModel d = oracle::experiment_discrete();
    d.a_d = MatrixXd::Identity(4, 4);
    d.q_d = MatrixXd::Zero(4, 4);
    const MatrixXd v0 = steady_state(oracle::experiment_discrete());
    const CovarianceTrack t = propagate(d, v0, 50);
    REQUIRE(t.values.size() == 51);
    for (const MatrixXd& v : t.values) CHECK(v == v0);
    CHECK(t.mode == CovarianceMode::discrete);
}

TEST_CASE("memoryless dynamics give V_k = q_d") {
    DiscreteModel d = oracle::experiment_discrete();
    d.a_d = MatrixXd::Zero(4, 4);
    const CovarianceTrack t = propagate(d, MatrixXd::Identity(4, 4) * 7.0, 5);
    for (std::size_t k = 1; k < t.values.size(); ++k) CHECK(t.values[k] == d.q_d);
}

TEST_CASE("scalar steady state is q / (1 - a^2)") {
    for (double a : {0.0, 0.3, -0.9, 0.999}) {
        const DiscreteModel d = scalar_model(a, 0.0, 2.0, 1.0, 1.0);
        CHECK(steady_state(d)(0, 0) == doctest::Approx(2.0 / (1.0 - a * a)).epsilon(1e-12));
    }
}

TEST_CASE("discrete and continuous steady states coincide on the 4x4 model") {
    const ContinuousModel c = oracle::experiment_model();
    const MatrixXd vc = steady_state(c);
    for (double dt : {1e-7, 1e-6, 1e-5}) {
        const MatrixXd vd = steady_state(discretize(c, dt));
        CHECK(rel(vd, vc) < 1e-6);
    }
}

TEST_CASE("steady states are fixed points to tolerance") {
    const DiscreteModel d = oracle::experiment_discrete();
    const MatrixXd v = steady_state(d);
    const MatrixXd once = d.a_d * v * d.a_d.transpose() + d.q_d;
    CHECK(rel(once, v) <= 1e-13);
    const ContinuousModel c = oracle::experiment_model();
    const MatrixXd vc = steady_state(c);
    const MatrixXd resid = c.drift * vc + vc * c.drift.transpose() + c.process_noise;
    CHECK(resid.norm() < 1e-9 * (c.drift.norm() * vc.norm()));
}

TEST_CASE("mechanical oscillator obeys equipartition in zero-point units") {
    PhysicalParams p;
    p.coupling = 0.0;
    p.backaction_psd = 0.0;
    const DerivedScales s = derive_scales(p);
    const MatrixXd v = steady_state(build_continuous(p, s));
    const double expected = 2.0 * s.mean_phonon + 1.0;
    CHECK(v(2, 2) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(v(3, 3) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(v(2, 3)) < 1e-9 * expected);
}

TEST_CASE("RK4 Lyapunov integration follows the exact discrete recursion") {
    const ContinuousModel c = oracle::experiment_model();
    const double dt = 1e-6;
    const DiscreteModel d = discretize(c, dt);
    const MatrixXd v0 = MatrixXd::Identity(4, 4) * 1e6;
    const CovarianceTrack disc = propagate(d, v0, 100);
    const CovarianceTrack cont = propagate(c, v0, dt, 100, 16);
    CHECK(cont.mode == CovarianceMode::continuous);
    double worst = 0.0;
    for (std::size_t k = 0; k <= 100; ++k) worst = std::max(worst, rel(cont.values[k], disc.values[k]));
    CHECK(worst < 1e-6);
}

TEST_CASE("every propagated matrix stays symmetric PSD") {
    const DiscreteModel d = oracle::experiment_discrete();
    const CovarianceTrack t = propagate(d, MatrixXd::Zero(4, 4), 500);
    for (const MatrixXd& v : t.values) {
        CHECK(v == v.transpose());
        if (v.norm() > 0.0) CHECK(min_eigenvalue(v) >= -1e-10 * v.norm());
    }
}

TEST_CASE("unstable models have no steady state and diverge") {
    const DiscreteModel d = scalar_model(1.5, 0.0, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(steady_state(d), NumericError);
    CHECK_THROWS_AS(propagate(d, MatrixXd::Identity(1, 1), 5000), DivergenceError);
    ContinuousModel c = oracle::experiment_model();
    c.drift(3, 3) = +1e5;
    CHECK_THROWS_AS(steady_state(c), NumericError);
    CHECK_THROWS_AS(propagate(c, MatrixXd::Identity(4, 4), 0.0, 3), NumericError);
}

} // TEST_SUITE
