#include "optolev/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>

#include "optolev/errors.hpp"

namespace optolev {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : out_(path, std::ios::binary | std::ios::trunc), header_(std::move(header)) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out_ << ',';
        out_ << header_[i];
    }
    out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
    line_.clear();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) line_ += ',';
        line_ += format_double(values[i]);
    }
    line_ += '\n';
    out_ << line_;
}

void CsvWriter::row(std::span<const double> values, const std::string& tail) {
    line_.clear();
    for (double v : values) {
        line_ += format_double(v);
        line_ += ',';
    }
    line_ += tail;
    line_ += '\n';
    out_ << line_;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

nlohmann::json to_json(const ContinuousModel& c) {
    return {{"A", matrix_to_json(c.drift)},
            {"B", vector_to_json(c.input)},
            {"C", vector_to_json(c.observe.transpose())},
            {"Q_c", matrix_to_json(c.process_noise)},
            {"R", c.measure_noise},
            {"u_op", vector_to_json(c.optical_input_mean)}};
}

nlohmann::json to_json(const DiscreteModel& d) {
    nlohmann::json j = {{"a_d", matrix_to_json(d.a_d)},
                        {"b_d", vector_to_json(d.b_d)},
                        {"q_d", matrix_to_json(d.q_d)},
                        {"C", vector_to_json(d.observe.transpose())},
                        {"r_d", d.r_d},
                        {"dt", d.dt},
                        {"input_series_fallback", d.input_series_fallback}};
    if (d.offset.size()) j["offset"] = vector_to_json(d.offset);
    return j;
}

nlohmann::json to_json(const LqrDesign& design) {
    return {{"S", matrix_to_json(design.s)},
            {"gain", vector_to_json(design.gain.transpose())},
            {"Q", matrix_to_json(design.q_weight)},
            {"r", design.r_weight},
            {"residual", design.residual},
            {"iterations", design.iterations},
            {"closed_loop_spectral_radius", design.closed_loop_radius}};
}

nlohmann::json to_json(const LorentzianFit& fit) {
    return {{"d_amp", fit.d_amp},
            {"gamma", fit.gamma},
            {"omega0", fit.omega0},
            {"center_hz", fit.center_hz()},
            {"center_sigma_hz", fit.center_sigma_hz()},
            {"covariance", matrix_to_json(fit.covariance)},
            {"reduced_chi2", fit.reduced_chi2},
            {"converged", fit.converged},
            {"n_bins", fit.n_bins}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

std::string config_hash(const nlohmann::json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    return out;
}

} // namespace optolev
