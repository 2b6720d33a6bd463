// Text output: shortest round-trip number formatting, CSV tables and JSON
// views of models, designs and fits.
#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "optolev/control.hpp"
#include "optolev/discretize.hpp"
#include "optolev/spectral.hpp"
#include "optolev/statespace.hpp"

namespace optolev {

/// Shortest decimal text that parses back to exactly @p x.
std::string format_double(double x);

/// Writes rows of numbers under a fixed header; throws Error if the file cannot be opened.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

    void row(std::span<const double> values);
    void row(std::initializer_list<double> values) { row(std::span(values.begin(), values.size())); }
    /// Row whose last field is text (used for status columns).
    void row(std::span<const double> values, const std::string& tail);
    std::size_t columns() const { return header_.size(); }

private:
    std::ofstream out_;
    std::vector<std::string> header_;
    std::string line_;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);

nlohmann::json to_json(const ContinuousModel& c);
nlohmann::json to_json(const DiscreteModel& d);
nlohmann::json to_json(const LqrDesign& design);
nlohmann::json to_json(const LorentzianFit& fit);

/// Pretty-printed with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// 64-bit FNV-1a of the compact, key-sorted dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

} // namespace optolev
