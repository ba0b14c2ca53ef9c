#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace icl_ttc {

struct ResultRow {
    std::string experiment;
    std::size_t d = 0;
    std::size_t n = 0;
    std::size_t k = 0;
    double sigma_eps = 0.0;
    double sigma = 0.0;
    double eta = 0.0;
    std::size_t t = 0;
    std::size_t N = 0;
    std::string method;
    std::size_t trial = 0;
    std::string metric_name;
    double metric_value = 0.0;
    std::uint64_t seed = 0;
};

const std::vector<std::string>& csv_header();

std::string csv_escape(const std::string& field);

std::string to_csv(const std::vector<ResultRow>& rows);

// Parses text produced by to_csv (RFC 4180 quoting). Throws ParseError.
std::vector<ResultRow> parse_csv(const std::string& text);

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label, bool log_x);

std::string run_id(const std::string& config_text, std::uint64_t seed);

}  // namespace icl_ttc
