#include "optolev/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include <fftw3.h>
#include <unsupported/Eigen/NonLinearOptimization>

namespace optolev {

namespace {
constexpr double two_pi = 2.0 * 3.14159265358979323846;
std::mutex fftw_planner_mutex; // FFTW's planner is not thread-safe
} // namespace

Window parse_window(std::string_view name) {
    if (name == "hann") return Window::hann;
    if (name == "rectangular") return Window::rectangular;
    throw ConfigError("unknown window '" + std::string(name) + "' (expected hann or rectangular)");
}

std::string_view to_string(Window w) { return w == Window::hann ? "hann" : "rectangular"; }

double Psd::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * df();
}

// ===========================================================================
// Welch
// ===========================================================================

struct WelchAccumulator::Impl {
    std::size_t n = 0, hop = 0;
    double dt = 0.0;
    Window window = Window::hann;
    std::vector<double> w;
    double w_energy = 0.0;
    std::vector<double> ring;
    std::size_t pos = 0;   // next write index in ring
    std::size_t count = 0; // samples seen
    std::size_t next_emit = 0;
    std::size_t segments = 0;
    std::vector<double> acc;
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;

    ~Impl() {
        std::lock_guard lock(fftw_planner_mutex);
        if (plan) fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }

    void process() {
        double mean = 0.0;
        for (double v : ring) mean += v;
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = ring[(pos + i) % n];
            in[i] = (x - mean) * w[i];
        }
        fftw_execute(plan);
        for (std::size_t k = 0; k < acc.size(); ++k)
            acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        ++segments;
    }
};

WelchAccumulator::WelchAccumulator(std::size_t segment_len, double dt, double overlap,
                                   Window window)
    : impl_(std::make_unique<Impl>()) {
    if (segment_len < 8) throw ParameterError("Welch segment length must be >= 8");
    if (!(dt > 0.0)) throw ParameterError("sampling interval must be > 0");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ParameterError("overlap must be in [0, 1)");
    Impl& m = *impl_;
    m.n = segment_len;
    m.dt = dt;
    m.window = window;
    const auto ov = static_cast<std::size_t>(std::llround(overlap * static_cast<double>(segment_len)));
    m.hop = std::max<std::size_t>(1, segment_len - ov);
    m.w.resize(segment_len);
    for (std::size_t i = 0; i < segment_len; ++i)
        m.w[i] = window == Window::hann
                     ? 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(i) / static_cast<double>(segment_len))
                     : 1.0;
    for (double v : m.w) m.w_energy += v * v;
    m.ring.assign(segment_len, 0.0);
    m.next_emit = segment_len;
    m.acc.assign(segment_len / 2 + 1, 0.0);
    m.in = fftw_alloc_real(segment_len);
    m.out = fftw_alloc_complex(segment_len / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex);
    m.plan = fftw_plan_dft_r2c_1d(static_cast<int>(segment_len), m.in, m.out, FFTW_ESTIMATE);
    if (!m.plan) throw NumericError("FFTW plan creation failed");
}

WelchAccumulator::~WelchAccumulator() = default;
WelchAccumulator::WelchAccumulator(WelchAccumulator&&) noexcept = default;
WelchAccumulator& WelchAccumulator::operator=(WelchAccumulator&&) noexcept = default;

void WelchAccumulator::push(double x) {
    Impl& m = *impl_;
    m.ring[m.pos] = x;
    m.pos = m.pos + 1 == m.n ? 0 : m.pos + 1;
    if (++m.count == m.next_emit) {
        m.process();
        m.next_emit += m.hop;
    }
}

void WelchAccumulator::push(std::span<const double> xs) {
    for (double x : xs) push(x);
}

std::size_t WelchAccumulator::segments() const { return impl_->segments; }

Psd WelchAccumulator::result() const {
    const Impl& m = *impl_;
    if (m.segments == 0)
        throw ParameterError("signal shorter than one Welch segment (" + std::to_string(m.n) +
                             " samples)");
    Psd p;
    p.n_segments = m.segments;
    p.window = m.window;
    p.dt = m.dt;
    p.segment_len = m.n;
    const double fs = 1.0 / m.dt;
    const double scale = 1.0 / (fs * m.w_energy * static_cast<double>(m.segments));
    p.freqs.resize(m.acc.size());
    p.values.resize(m.acc.size());
    for (std::size_t k = 0; k < m.acc.size(); ++k) {
        p.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(m.n);
        const bool edge = k == 0 || (m.n % 2 == 0 && k == m.n / 2);
        p.values[k] = m.acc[k] * scale * (edge ? 1.0 : 2.0);
    }
    return p;
}

Psd welch_psd(std::span<const double> signal, double dt, std::size_t segment_len, double overlap,
              Window window) {
    if (signal.size() < segment_len)
        throw ParameterError("signal of " + std::to_string(signal.size()) +
                             " samples is shorter than the segment length " +
                             std::to_string(segment_len));
    WelchAccumulator acc(segment_len, dt, overlap, window);
    acc.push(signal);
    return acc.result();
}

Psd average(std::span<const Psd> psds) {
    if (psds.empty()) throw ParameterError("nothing to average");
    Psd out = psds.front();
    std::fill(out.values.begin(), out.values.end(), 0.0);
    out.n_segments = 0;
    for (const Psd& p : psds) {
        if (p.values.size() != out.values.size() || p.segment_len != out.segment_len || p.dt != out.dt)
            throw ParameterError("PSDs on different frequency grids cannot be averaged");
        const double w = static_cast<double>(p.n_segments);
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * p.values[k];
        out.n_segments += p.n_segments;
    }
    for (double& v : out.values) v /= static_cast<double>(out.n_segments);
    return out;
}

// ===========================================================================
// Lorentzian fit
// ===========================================================================

double lorentzian(double omega, double d_amp, double gamma, double omega0) {
    const double w2 = omega * omega;
    const double det = w2 - omega0 * omega0;
    return d_amp / (gamma * gamma * w2 + det * det);
}

double LorentzianFit::center_hz() const { return omega0 / two_pi; }
double LorentzianFit::center_sigma_hz() const { return std::sqrt(covariance(2, 2)) / two_pi; }

namespace {

struct Bins {
    std::vector<double> omega;
    std::vector<double> value;
};

Bins select_bins(const Psd& psd, FreqWindow window) {
    Bins b;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        const double f = psd.freqs[k];
        if (f < window.f_min_hz || f > window.f_max_hz || f <= 0.0) continue;
        if (!(psd.values[k] > 0.0)) continue;
        b.omega.push_back(two_pi * f);
        b.value.push_back(psd.values[k]);
    }
    return b;
}

// Parameters x = (ln D - ln D0, ln gamma - ln gamma0, (omega0 - w_ref) / gamma0).
struct LorentzFunctor {
    using Scalar = double;
    const Bins* bins;
    double weight;
    FitSpace space;
    double ln_d0, ln_g0, g0, w_ref;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(bins->omega.size()); }

    void unpack(const Eigen::VectorXd& x, double& d, double& g, double& w0) const {
        d = std::exp(ln_d0 + x[0]);
        g = std::exp(ln_g0 + x[1]);
        w0 = w_ref + g0 * x[2];
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        double d, g, w0;
        unpack(x, d, g, w0);
        for (int i = 0; i < values(); ++i) {
            const double m = lorentzian(bins->omega[i], d, g, w0);
            const double y = bins->value[i];
            f[i] = space == FitSpace::linear ? weight * (y / m - 1.0) : weight * std::log(y / m);
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
        double d, g, w0;
        unpack(x, d, g, w0);
        for (int i = 0; i < values(); ++i) {
            const double w = bins->omega[i];
            const double w2 = w * w;
            const double det = w2 - w0 * w0;
            const double den = g * g * w2 + det * det;
            // d ln m / dx
            const double l0 = 1.0;
            const double l1 = -2.0 * g * g * w2 / den;
            const double l2 = 4.0 * w0 * det / den * g0;
            const double pre = space == FitSpace::linear
                                   ? -weight * bins->value[i] / lorentzian(w, d, g, w0)
                                   : -weight;
            j(i, 0) = pre * l0;
            j(i, 1) = pre * l1;
            j(i, 2) = pre * l2;
        }
        return 0;
    }
};

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

} // namespace

double lorentzian_cost(const Psd& psd, FreqWindow window, double d_amp, double gamma,
                       double omega0, FitSpace space) {
    const Bins b = select_bins(psd, window);
    const double weight = std::sqrt(static_cast<double>(std::max<std::size_t>(1, psd.n_segments)));
    double s = 0.0;
    for (std::size_t i = 0; i < b.omega.size(); ++i) {
        const double ratio = b.value[i] / lorentzian(b.omega[i], d_amp, gamma, omega0);
        const double r = space == FitSpace::linear ? weight * (ratio - 1.0) : weight * std::log(ratio);
        s += r * r;
    }
    return s;
}

LorentzianFit fit_lorentzian(const Psd& psd, FreqWindow window, FitSpace space) {
    const Bins bins = select_bins(psd, window);
    const std::size_t n = bins.omega.size();
    if (n < 50)
        throw FitError("Lorentzian fit needs at least 50 positive bins in the window, got " +
                           std::to_string(n),
                       0.0);

    // Initial guess from the peak and its half-maximum width.
    const auto peak_it = std::max_element(bins.value.begin(), bins.value.end());
    const std::size_t ip = static_cast<std::size_t>(peak_it - bins.value.begin());
    const double s_peak = *peak_it;
    const double contrast = s_peak / median(bins.value);
    if (contrast < 3.0 || ip < 2 || ip + 2 >= n)
        throw FitError("no resolvable peak inside the fit window (peak/median = " +
                           std::to_string(contrast) + ")",
                       0.0);
    std::size_t lo = ip, hi = ip;
    while (lo > 0 && bins.value[lo] > 0.5 * s_peak) --lo;
    while (hi + 1 < n && bins.value[hi] > 0.5 * s_peak) ++hi;
    const double dw = bins.omega[1] - bins.omega[0];
    const double w_peak = bins.omega[ip];
    const double g_guess = std::max(bins.omega[hi] - bins.omega[lo], 2.0 * dw);
    const double d_guess = s_peak * g_guess * g_guess * w_peak * w_peak;

    LorentzFunctor fn{&bins,
                      std::sqrt(static_cast<double>(std::max<std::size_t>(1, psd.n_segments))),
                      space,
                      std::log(d_guess),
                      std::log(g_guess),
                      g_guess,
                      w_peak};
    Eigen::LevenbergMarquardt<LorentzFunctor> lm(fn);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-12;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    const auto status = lm.minimize(x);

    Eigen::VectorXd f(n);
    fn(x, f);
    const double chi2 = f.squaredNorm();
    using LS = Eigen::LevenbergMarquardtSpace::Status;
    const bool ok = status == LS::RelativeReductionTooSmall || status == LS::RelativeErrorTooSmall ||
                    status == LS::RelativeErrorAndReductionTooSmall || status == LS::CosinusTooSmall ||
                    status == LS::XtolTooSmall || status == LS::FtolTooSmall;
    if (!ok || !x.allFinite())
        throw FitError("Lorentzian fit did not converge (status " + std::to_string(static_cast<int>(status)) + ")",
                       std::sqrt(chi2));

    LorentzianFit out;
    fn.unpack(x, out.d_amp, out.gamma, out.omega0);
    out.n_bins = n;
    out.evaluations = static_cast<int>(lm.nfev);
    out.reduced_chi2 = chi2 / static_cast<double>(n - 3);
    out.converged = true;

    const double w_lo = bins.omega.front(), w_hi = bins.omega.back();
    if (!(out.omega0 > w_lo && out.omega0 < w_hi) || out.gamma > w_hi - w_lo)
        throw FitError("fitted peak lies outside the fit window", std::sqrt(chi2));

    Eigen::MatrixXd j(n, 3);
    fn.df(x, j);
    const Eigen::Matrix3d jtj = j.transpose() * j;
    const Eigen::Matrix3d cov_x = jtj.inverse() * out.reduced_chi2;
    const Eigen::Matrix3d t = Eigen::Vector3d(out.d_amp, out.gamma, fn.g0).asDiagonal();
    out.covariance = t * cov_x * t;
    return out;
}

// ===========================================================================
// Driven PSD and gain chain
// ===========================================================================

double driven_psd(const Langevin1D& l, double drive_force, double drive_omega, double duration,
                  double omega) {
    if (!(duration > 0.0)) throw ParameterError("drive duration must be > 0");
    const double tau_el = 0.5 * duration;
    const double arg = (omega - drive_omega) * tau_el;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double coherent = drive_force * drive_force * tau_el * sinc * sinc / (l.mass * l.mass);
    const double w2 = omega * omega;
    const double det = w2 - l.omega0 * l.omega0;
    return (l.diffusion + coherent) / (l.gamma_m * l.gamma_m * w2 + det * det);
}

Psd driven_psd_model(const Langevin1D& l, double drive_force, double drive_omega, double duration,
                     std::span<const double> freqs_hz) {
    Psd p;
    p.freqs.assign(freqs_hz.begin(), freqs_hz.end());
    p.values.reserve(freqs_hz.size());
    for (double f : freqs_hz) p.values.push_back(driven_psd(l, drive_force, drive_omega, duration, two_pi * f));
    if (freqs_hz.size() >= 2) {
        p.segment_len = freqs_hz.size();
        p.dt = 1.0 / ((freqs_hz[1] - freqs_hz[0]) * static_cast<double>(p.segment_len));
    }
    return p;
}

double compose_feedback_gain(double c_nv, double a2, double a_digital, double a1, double c_mv) {
    if (!(c_nv > 0.0 && a2 > 0.0 && a_digital > 0.0 && a1 > 0.0 && c_mv > 0.0))
        throw ParameterError("every factor of the feedback-gain chain must be positive");
    return c_nv * a2 * a_digital * (a1 * a1 * a1) * (c_mv * c_mv * c_mv);
}

} // namespace optolev
