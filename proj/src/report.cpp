#include "icl_ttc/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "icl_ttc/config.hpp"
#include "icl_ttc/errors.hpp"

namespace icl_ttc {

const std::vector<std::string>& csv_header() {
    static const std::vector<std::string> h{"experiment", "d", "n", "k", "sigma_eps", "sigma", "eta",
                                            "t", "N", "method", "trial", "metric_name", "metric_value", "seed"};
    return h;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out;
    const auto& h = csv_header();
    for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
    out += "\r\n";
    for (const auto& r : rows) {
        const std::string fields[] = {csv_escape(r.experiment), std::to_string(r.d), std::to_string(r.n),
                                      std::to_string(r.k), format_double(r.sigma_eps), format_double(r.sigma),
                                      format_double(r.eta), std::to_string(r.t), std::to_string(r.N),
                                      csv_escape(r.method), std::to_string(r.trial), csv_escape(r.metric_name),
                                      format_double(r.metric_value), std::to_string(r.seed)};
        for (std::size_t i = 0; i < std::size(fields); ++i) out += (i ? "," : "") + fields[i];
        out += "\r\n";
    }
    return out;
}

namespace {

std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                record.push_back(std::move(field));
                records.push_back(std::move(record));
            }
            record.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw ParseError(records.size() + 1, "", "unterminated quoted field");
    if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const std::string& column) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
        throw ParseError(line, column, "bad numeric field '" + s + "'");
    return v;
}

}  // namespace

std::vector<ResultRow> parse_csv(const std::string& text) {
    const auto records = split_records(text);
    if (records.empty() || records.front() != csv_header())
        throw ParseError(1, "", "results table header does not match the expected columns");
    std::vector<ResultRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& f = records[i];
        const std::size_t line = i + 1;
        if (f.size() != csv_header().size())
            throw ParseError(line, "", "expected " + std::to_string(csv_header().size()) + " fields");
        ResultRow r;
        r.experiment = f[0];
        r.d = parse_number<std::size_t>(f[1], line, "d");
        r.n = parse_number<std::size_t>(f[2], line, "n");
        r.k = parse_number<std::size_t>(f[3], line, "k");
        r.sigma_eps = parse_number<double>(f[4], line, "sigma_eps");
        r.sigma = parse_number<double>(f[5], line, "sigma");
        r.eta = parse_number<double>(f[6], line, "eta");
        r.t = parse_number<std::size_t>(f[7], line, "t");
        r.N = parse_number<std::size_t>(f[8], line, "N");
        r.method = f[9];
        r.trial = parse_number<std::size_t>(f[10], line, "trial");
        r.metric_name = f[11];
        r.metric_value = parse_number<double>(f[12], line, "metric_value");
        r.seed = parse_number<std::uint64_t>(f[13], line, "seed");
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label, bool log_x) {
    const double W = 640, H = 420, left = 70, right = 160, top = 20, bottom = 50;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0)) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
    if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
      << xml_escape(x_label) << (log_x ? " (log scale)" : "") << "</text>\n";
    o << "<text x=\"15\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
    o << "<text x=\"" << left << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"start\">"
      << tick(log_x ? std::pow(10.0, xmin) : xmin) << "</text>\n";
    o << "<text x=\"" << left + pw << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"end\">"
      << tick(log_x ? std::pow(10.0, xmax) : xmax) << "</text>\n";
    o << "<text x=\"" << left - 5 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">" << tick(ymin) << "</text>\n";
    o << "<text x=\"" << left - 5 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << tick(ymax) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].y[i]) || (log_x && series[s].x[i] <= 0)) continue;
            o << (first ? "" : " ") << fixed(px(series[s].x[i])) << "," << fixed(py(series[s].y[i]));
            first = false;
        }
        o << "\"/>\n";
        o << "<text x=\"" << W - right + 10 << "\" y=\"" << top + 15 + 16 * static_cast<double>(s)
          << "\" fill=\"" << color << "\">" << xml_escape(series[s].label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string run_id(const std::string& config_text, std::uint64_t seed) {
    // FNV-1a over the canonical config text followed by the seed bytes.
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](unsigned char c) {
        h ^= c;
        h *= 0x100000001b3ull;
    };
    for (char c : config_text) mix(static_cast<unsigned char>(c));
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace icl_ttc
