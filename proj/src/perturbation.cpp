#include "optolev/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "optolev/constants.hpp"
#include "optolev/errors.hpp"
#include "optolev/params.hpp"

namespace optolev {

namespace {

double damped_omega(const Langevin1D& l) {
    const double w = l.damped_frequency();
    if (!(w > 0.0)) throw ParameterError("perturbation theory needs an underdamped oscillator");
    return w;
}

void require_damping(const Langevin1D& l) {
    if (!(l.gamma_m > 0.0))
        throw NumericError("gamma_m = 0: the linear oscillator has no stationary state");
}

} // namespace

double green_function(const Langevin1D& l, double t) {
    if (t <= 0.0) return 0.0;
    const double w = damped_omega(l);
    return std::sin(w * t) / w * std::exp(-0.5 * l.gamma_m * t);
}

double acf_linear(const Langevin1D& l, double t) {
    require_damping(l);
    const double w = damped_omega(l);
    const double g = l.gamma_m;
    const double at = std::abs(t);
    return l.diffusion * std::exp(-0.5 * g * at) * (2.0 * w * std::cos(w * at) + g * std::sin(w * at)) /
           (g * w * (g * g + 4.0 * w * w));
}

double acf_delay_correction(const Langevin1D& l, double t, double tau) {
    require_damping(l);
    if (l.gain == 0.0) return 0.0;
    const double w = damped_omega(l);
    const double g = l.gamma_m;
    const double w0sq = l.omega0 * l.omega0;
    const double at = std::abs(t);
    const double w2 = w * w, w3 = w2 * w, w4 = w2 * w2, w5 = w4 * w;
    const double g2 = g * g;
    const double lag = at - tau;
    const double ep = std::exp(0.5 * g * tau);
    const double em = std::exp(-0.5 * g * tau);
    const double braces =
        ep * (8.0 * g * w4 - 4.0 * w0sq * g2 * w2 * lag) * std::cos(w * lag) +
        ep * (8.0 * g * w3 * w0sq * lag + 8.0 * w5 + 4.0 * g2 * w0sq * w + 6.0 * g2 * w3) *
            std::sin(w * lag) +
        em * (w2 * (2.0 * g2 * w - 8.0 * w3) * std::sin(w * (at + tau)) +
              8.0 * g * w4 * std::cos(w * (at + tau)));
    const double pre = 3.0 * l.diffusion * l.diffusion * l.gain * std::exp(-0.5 * g * at) /
                       (64.0 * l.mass * g * g2 * w4 * w0sq * w0sq * w0sq);
    // The braces describe a force of the opposite sign; the library force is -G z^3.
    return -pre * braces;
}

double acf_delayed(const Langevin1D& l, double t, double tau) {
    return acf_linear(l, t) + acf_delay_correction(l, t, tau);
}

double temperature_from_variance(const Langevin1D& l, double position_variance) {
    return l.mass * l.omega0 * l.omega0 * position_variance / constants::k_boltzmann;
}

double delayed_temperature(const Langevin1D& l, double tau) {
    return temperature_from_variance(l, acf_delayed(l, 0.0, tau));
}

// ===========================================================================
// Diagram quadrature
// ===========================================================================

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

struct PanelSum {
    double value = 0.0;
    double error = 0.0; ///< sum of panel error estimates
    double l1 = 0.0;    ///< integral of |f|
};

/**
 * Integrates f over [upper - span, upper] panel by panel, walking down from
 * the upper limit. Panels end at every break point inside the range. The walk
 * stops early once panel contributions have decayed below 1e-3 rel_tol of the
 * running L1 mass for four panels in a row.
 */
template <class F>
PanelSum integrate_down(F&& f, double upper, double panel, double span, std::vector<double> breaks,
                        double rel_tol, std::size_t& evaluations) {
    std::sort(breaks.begin(), breaks.end(), std::greater<>());
    const double lower = upper - span;
    PanelSum out;
    int quiet = 0;
    double b = upper;
    std::size_t next_break = 0;
    while (next_break < breaks.size() && breaks[next_break] >= upper) ++next_break;
    while (b > lower) {
        double a = std::max(b - panel, lower);
        if (next_break < breaks.size() && breaks[next_break] > a) a = breaks[next_break++];
        double err = 0.0, pl1 = 0.0;
        out.value += GK::integrate(
            [&](double x) {
                ++evaluations;
                return f(x);
            },
            a, b, 4, rel_tol, &err, &pl1);
        out.error += err;
        out.l1 += pl1;
        b = a;
        const bool pending_break = next_break < breaks.size() && breaks[next_break] > lower;
        if (!pending_break && pl1 <= 1e-3 * rel_tol * out.l1) {
            if (++quiet >= 4) break;
        } else {
            quiet = 0;
        }
    }
    return out;
}

} // namespace

QuadratureResult diagram_quadrature(const Langevin1D& l, double t, double tau,
                                    const QuadratureOptions& opts) {
    require_damping(l);
    if (!(tau >= 0.0)) throw ParameterError("delay must be >= 0");
    QuadratureResult res;
    if (l.gain == 0.0) return res;
    const double w = damped_omega(l);
    const double span = opts.span_factor / l.gamma_m;
    const double panel = std::min(0.5 * constants::pi / w, 1.0 / l.gamma_m);
    const double tol = opts.rel_tol;
    auto gf = [&](double x) { return green_function(l, x); };

    // Inner loop J(a, b) = int_{-inf}^{min(a,b)} G(a - s) G(b - s) ds depends only on
    // x = |b - a|. Splitting G(x + u) with the sine addition theorem leaves two
    // x-independent integrals over u = -v, which are done numerically once:
    //   J(x) = e^{-gamma x / 2} (sin(w x) i_c + cos(w x) i_s).
    const double half_g = 0.5 * l.gamma_m;
    const PanelSum ic = integrate_down(
        [&](double v) { return gf(-v) * std::cos(w * v) * std::exp(half_g * v) / w; }, 0.0, panel,
        span, {}, tol, res.evaluations);
    const PanelSum is = integrate_down(
        [&](double v) { return -gf(-v) * std::sin(w * v) * std::exp(half_g * v) / w; }, 0.0, panel,
        span, {}, tol, res.evaluations);
    const double inner_rel = (ic.error + is.error) / std::max(ic.l1 + is.l1, 1e-300);
    auto pair_integral = [&](double a, double b) {
        const double x = std::abs(b - a);
        return std::exp(-half_g * x) * (std::sin(w * x) * ic.value + std::cos(w * x) * is.value);
    };
    const double k_self = pair_integral(0.0, 0.0);

    // Leg on G(t - t1) with the loop through G(-s1), and the swapped leg.
    const PanelSum term1 = integrate_down(
        [&](double t1) { return gf(t - t1) * pair_integral(0.0, t1 - tau); }, t, panel, span,
        {tau}, tol, res.evaluations);
    const PanelSum term2 = integrate_down(
        [&](double t1) { return gf(-t1) * pair_integral(t, t1 - tau); }, 0.0, panel, span,
        {t + tau}, tol, res.evaluations);

    const double constant = -3.0 * (l.gain / l.mass) * l.diffusion * l.diffusion;
    res.value = constant * k_self * (term1.value + term2.value);
    const double scale = std::abs(constant * k_self) * (term1.l1 + term2.l1);
    const double outer_rel = (term1.error + term2.error) / std::max(term1.l1 + term2.l1, 1e-300);
    // Every integrand decays at least as e^{-gamma_m |s|}.
    const double tail = std::exp(-opts.span_factor);
    res.error_estimate = scale * (outer_rel + 3.0 * inner_rel + tail);
    if (!std::isfinite(res.value) || res.error_estimate > 10.0 * tol * scale)
        throw ConvergenceError("diagram quadrature did not reach the requested accuracy",
                               res.error_estimate);
    return res;
}

// ===========================================================================
// Spectra and frequency shift
// ===========================================================================

double psd_linear(const Langevin1D& l, double omega) {
    const double w2 = omega * omega;
    const double det = w2 - l.omega0 * l.omega0;
    return l.diffusion / (l.gamma_m * l.gamma_m * w2 + det * det);
}

double psd_correction(const Langevin1D& l, double omega) {
    require_damping(l);
    const double w2 = omega * omega;
    const double w0sq = l.omega0 * l.omega0;
    const double det = w2 - w0sq;
    const double den = l.gamma_m * l.gamma_m * w2 + det * det;
    return 3.0 * (l.gain / l.mass) * l.diffusion * l.diffusion / (l.gamma_m * w0sq) * det / (den * den);
}

double psd_shifted(const Langevin1D& l, double omega) {
    Langevin1D shifted = l;
    shifted.omega0 = l.omega0 + 2.0 * constants::pi * frequency_shift(l).shift_hz;
    return psd_linear(shifted, omega);
}

FrequencyShift frequency_shift(const Langevin1D& l) {
    require_damping(l);
    const double kt = l.thermal_energy();
    FrequencyShift out;
    out.kappa = 3.0 * kt / (4.0 * constants::pi * l.mass * l.mass * l.omega0 * l.omega0 * l.omega0);
    out.shift_hz = out.kappa * l.gain;
    out.bound = validity_bound(l.mass, l.omega0, kt / constants::k_boltzmann);
    out.outside_validity = std::abs(l.gain) >= out.bound;
    return out;
}

std::string_view to_string(AcfOrder o) { return o == AcfOrder::linear ? "linear" : "first_order"; }

AcfResult acf_curve(const Langevin1D& l, std::span<const double> lags, AcfOrder order, double tau) {
    AcfResult out;
    out.order = order;
    out.tau = tau;
    out.lags.assign(lags.begin(), lags.end());
    out.values.reserve(lags.size());
    for (double t : lags)
        out.values.push_back(order == AcfOrder::linear ? acf_linear(l, t) : acf_delayed(l, t, tau));
    return out;
}

} // namespace optolev
