#include "optolev/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "optolev/constants.hpp"
#include "optolev/errors.hpp"

namespace optolev::cli {

using nlohmann::json;

namespace {

constexpr double two_pi = 2.0 * constants::pi;

/// Reads keys from one JSON object and remembers which ones were used.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("'" + name_ + "' must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    double number(const std::string& key, double fallback) {
        return has(key) ? number_at(key) : (seen_.insert(key), fallback);
    }
    std::optional<double> optional_number(const std::string& key) {
        if (!has(key)) return seen_.insert(key), std::nullopt;
        return number_at(key);
    }
    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return seen_.insert(key), fallback;
        const json& v = use(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return seen_.insert(key), fallback;
        const json& v = use(key);
        if (!v.is_boolean()) fail(key, "true or false");
        return v.get<bool>();
    }
    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return seen_.insert(key), fallback;
        const json& v = use(key);
        if (!v.is_string()) fail(key, "a string");
        return v.get<std::string>();
    }
    std::optional<std::vector<double>> list(const std::string& key) {
        if (!has(key)) return seen_.insert(key), std::nullopt;
        const json& v = use(key);
        if (!v.is_array()) fail(key, "an array of numbers");
        std::vector<double> out;
        for (const json& e : v) {
            if (!e.is_number()) fail(key, "an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    const json& require(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError("missing required key '" + qualified(key) + "'");
        return use(key);
    }

    /// Rejects every key that no getter asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown key '" + qualified(it.key()) + "'");
    }

    std::string qualified(const std::string& key) const {
        return name_.empty() ? key : name_ + "." + key;
    }
    [[noreturn]] void fail(const std::string& key, const std::string& expected) const {
        throw ConfigError("key '" + qualified(key) + "' must be " + expected);
    }

    template <class F>
    auto convert(const std::string& key, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            throw ConfigError("key '" + qualified(key) + "': " + e.what());
        }
    }

private:
    const json& use(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }
    double number_at(const std::string& key) {
        const json& v = use(key);
        if (!v.is_number()) fail(key, "a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "finite");
        return x;
    }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

PhysicalParams read_params(Section& s) {
    PhysicalParams p;
    p.radius = s.number("radius", p.radius);
    p.density = s.number("density", p.density);
    p.pressure = s.number("pressure", p.pressure);
    p.gas_temperature = s.number("gas_temperature", p.gas_temperature);
    p.gas_molecule_mass = s.number("gas_molecule_mass", p.gas_molecule_mass);
    const std::string speed = s.text("gas_speed", "mean");
    p.gas_speed = s.convert("gas_speed", [&] { return parse_gas_speed(speed); });
    p.mech_freq = two_pi * s.number("mech_freq_hz", p.mech_freq / two_pi);
    p.cavity_linewidth = two_pi * s.number("cavity_linewidth_hz", p.cavity_linewidth / two_pi);
    p.detuning = two_pi * s.number("detuning_hz", p.detuning / two_pi);
    p.coupling = two_pi * s.number("coupling_hz", p.coupling / two_pi);
    p.backaction_psd = s.number("backaction_psd", p.backaction_psd);
    p.detection_efficiency = s.number("detection_efficiency", p.detection_efficiency);
    p.effective_temperature = s.number("effective_temperature", p.effective_temperature);
    p.gamma_override = s.optional_number("gamma_m");
    p.mean_phonon_override = s.optional_number("mean_phonon");
    s.finish();
    try {
        validate(p);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("params: ") + e.what());
    }
    return p;
}

template <class Enum, class Parse>
Enum read_enum(Section& s, const std::string& key, const std::string& fallback, Parse&& parse) {
    const std::string v = s.text(key, fallback);
    return s.convert(key, [&] { return parse(v); });
}

Numerics read_numerics(Section& s) {
    Numerics n;
    n.model = read_enum<ModelKind>(s, "model", "langevin", [](const std::string& v) {
        if (v == "linear") return ModelKind::linear;
        if (v == "langevin") return ModelKind::langevin;
        throw ConfigError("expected 'linear' or 'langevin', got '" + v + "'");
    });
    if (!s.has("seed")) throw ConfigError("missing required key 'numerics.seed'");
    n.seed = s.count("seed", 0);
    n.threads = static_cast<unsigned>(s.count("threads", n.threads));

    n.dt = s.number("dt", n.dt);
    n.steps = s.count("steps", n.steps);
    n.noise_method = read_enum<NoiseMethod>(s, "noise_method", "van_loan",
                                            [](const std::string& v) { return parse_noise_method(v); });
    n.measured = read_enum<MeasuredComponent>(s, "measured", "Z", [](const std::string& v) {
        return parse_measured_component(v);
    });
    n.measurement_noise = s.number("measurement_noise", n.measurement_noise);
    n.cavity_input_noise = s.flag("cavity_input_noise", n.cavity_input_noise);
    n.kalman = s.flag("kalman", n.kalman);
    n.closed_loop = s.flag("closed_loop", n.closed_loop);
    n.covariance_update = read_enum<CovarianceUpdate>(s, "covariance_update", "standard",
                                                      [](const std::string& v) {
        if (v == "standard") return CovarianceUpdate::standard;
        if (v == "joseph") return CovarianceUpdate::joseph;
        throw ConfigError("expected 'standard' or 'joseph', got '" + v + "'");
    });
    if (auto q = s.list("lqr_q")) {
        if (q->size() != 4) s.fail("lqr_q", "4 diagonal weights");
        n.lqr_q = *q;
    }
    n.lqr_r = s.number("lqr_r", n.lqr_r);
    n.lqr_tol = s.number("lqr_tol", n.lqr_tol);
    n.cost_horizon = s.count("cost_horizon", n.cost_horizon);
    n.cost_runs = s.count("cost_runs", n.cost_runs);
    n.covariance_mode = read_enum<CovarianceMode>(s, "covariance_mode", "discrete",
                                                  [](const std::string& v) {
        if (v == "discrete") return CovarianceMode::discrete;
        if (v == "continuous") return CovarianceMode::continuous;
        throw ConfigError("expected 'discrete' or 'continuous', got '" + v + "'");
    });
    n.covariance_substeps = static_cast<int>(s.count("covariance_substeps", 8));

    n.langevin_dt = s.optional_number("langevin_dt");
    n.steps_per_period = s.number("steps_per_period", n.steps_per_period);
    n.duration = s.number("duration", n.duration);
    n.gain = s.number("gain", n.gain);
    n.gain_rel = s.optional_number("gain_rel");
    n.delay = s.number("delay", n.delay);
    n.delay_rel = s.optional_number("delay_rel");
    n.record_every = s.count("record_every", n.record_every);

    n.decimate = s.count("decimate", n.decimate);
    n.segment_len = s.count("segment_len", n.segment_len);
    n.overlap = s.number("overlap", n.overlap);
    n.window = read_enum<Window>(s, "window", "hann", [](const std::string& v) { return parse_window(v); });
    n.burn_in = s.number("burn_in", n.burn_in);
    n.fit_window_hz = s.list("fit_window_hz");
    n.fit_space = read_enum<FitSpace>(s, "fit_space", "linear", [](const std::string& v) {
        if (v == "linear") return FitSpace::linear;
        if (v == "log") return FitSpace::log;
        throw ConfigError("expected 'linear' or 'log', got '" + v + "'");
    });
    n.batches = s.count("batches", n.batches);

    n.gains_rel = s.list("gains_rel").value_or(std::vector<double>{});
    n.delays_rel = s.list("delays_rel").value_or(std::vector<double>{});

    n.acf_t_max = s.optional_number("acf_t_max");
    n.acf_points = s.count("acf_points", n.acf_points);
    n.spectrum_points = s.count("spectrum_points", n.spectrum_points);
    n.acf_order = read_enum<AcfOrder>(s, "acf_order", "first_order", [](const std::string& v) {
        if (v == "linear") return AcfOrder::linear;
        if (v == "first_order") return AcfOrder::first_order;
        throw ConfigError("expected 'linear' or 'first_order', got '" + v + "'");
    });
    s.finish();

    auto positive = [&](double v, const char* key) {
        if (!(v > 0.0)) s.fail(key, "> 0");
    };
    positive(n.dt, "dt");
    positive(n.measurement_noise, "measurement_noise");
    positive(n.lqr_r, "lqr_r");
    positive(n.lqr_tol, "lqr_tol");
    positive(n.steps_per_period, "steps_per_period");
    positive(n.duration, "duration");
    if (n.langevin_dt) positive(*n.langevin_dt, "langevin_dt");
    if (n.steps < 1) s.fail("steps", ">= 1");
    if (n.threads < 1) s.fail("threads", ">= 1");
    if (n.record_every < 1) s.fail("record_every", ">= 1");
    if (n.decimate < 1) s.fail("decimate", ">= 1");
    if (n.batches < 1) s.fail("batches", ">= 1");
    if (!(n.overlap >= 0.0 && n.overlap < 1.0)) s.fail("overlap", "in [0, 1)");
    if (!(n.burn_in >= 0.0 && n.burn_in < 10.0)) s.fail("burn_in", "in [0, 10)");
    if (n.delay < 0.0) s.fail("delay", ">= 0");
    if (n.delay_rel && *n.delay_rel < 0.0) s.fail("delay_rel", ">= 0");
    if (n.fit_window_hz && (n.fit_window_hz->size() != 2 || !((*n.fit_window_hz)[0] < (*n.fit_window_hz)[1])))
        s.fail("fit_window_hz", "[f_min, f_max] with f_min < f_max");
    for (std::size_t i = 0; i < n.lqr_q.size(); ++i)
        if (n.lqr_q[i] < 0.0) s.fail("lqr_q", "non-negative");
    for (double d : n.delays_rel)
        if (d < 0.0) s.fail("delays_rel", "non-negative");
    return n;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    column = col;
    return line;
}

} // namespace

json parse_config_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t col = 0;
        const std::size_t line = line_of(text, e.byte, col);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON syntax error: " + e.what());
    }
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string value(assignment.substr(eq + 1));
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    if (!doc.is_object()) throw ConfigError("config document must be an object");
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            return;
        }
        json& child = (*node)[part];
        if (child.is_null()) child = json::object();
        if (!child.is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        node = &child;
        start = dot + 1;
    }
}

RunConfig parse_config(const json& doc) {
    Section top(doc, "");
    RunConfig cfg;
    const json& exp = top.require("experiment");
    if (!exp.is_string() || exp.get<std::string>().empty()) top.fail("experiment", "a non-empty string");
    cfg.experiment = exp.get<std::string>();
    Section params(top.require("params"), "params");
    cfg.params = read_params(params);
    Section numerics(top.require("numerics"), "numerics");
    cfg.numerics = read_numerics(numerics);
    const json& out = top.require("output_dir");
    if (!out.is_string() || out.get<std::string>().empty()) top.fail("output_dir", "a non-empty string");
    cfg.output_dir = out.get<std::string>();
    top.finish();
    cfg.raw = doc;
    return cfg;
}

json default_config() {
    const PhysicalParams p;
    return {
        {"experiment", "default"},
        {"output_dir", "out"},
        {"params",
         {{"radius", p.radius},
          {"density", p.density},
          {"pressure", p.pressure},
          {"gas_temperature", p.gas_temperature},
          {"gas_molecule_mass", p.gas_molecule_mass},
          {"gas_speed", "mean"},
          {"mech_freq_hz", p.mech_freq / two_pi},
          {"cavity_linewidth_hz", p.cavity_linewidth / two_pi},
          {"detuning_hz", p.detuning / two_pi},
          {"coupling_hz", p.coupling / two_pi},
          {"backaction_psd", p.backaction_psd},
          {"detection_efficiency", p.detection_efficiency},
          {"effective_temperature", p.effective_temperature}}},
        {"numerics", {{"model", "langevin"}, {"seed", 1}}},
    };
}

} // namespace optolev::cli
