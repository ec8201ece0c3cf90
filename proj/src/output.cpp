#include "ewi/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ewi {

namespace {

std::ofstream open_for_write(const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path)
{
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_header(std::ostream& out, const nlohmann::json& meta)
{
    out << "# ewi " << EWI_VERSION << "\n";
    for (const char* key : {"route", "p0", "k", "recoil", "t_end", "averaged", "estimator"}) {
        if (!meta.is_object() || !meta.contains(key)) continue;
        const auto& v = meta.at(key);
        out << "# " << key << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }
    out << "# meta_hash: " << metadata_hash(meta) << "\n";
}

std::string escape_xml(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace

std::string metadata_hash(const nlohmann::json& meta)
{
    const std::string text = meta.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

void write_spectrum_table(const std::string& path, const MomentumDistribution& dist)
{
    auto out = open_for_write(path);
    write_header(out, dist.meta());
    out << "# norm: " << (dist.convention() == NormConvention::UnitIntegral ? "unit_integral" : "raw") << "\n";
    out << "# columns: p density\n";
    for (std::size_t i = 0; i < dist.size(); ++i)
        out << format_number(dist.p()[i]) << ' ' << format_number(dist.density()[i]) << '\n';
    finish(out, path);
}

void write_table(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& columns, const nlohmann::json& meta)
{
    if (names.size() != columns.size() || columns.empty())
        throw DomainError("write_table: need one name per column and at least one column");
    for (const auto& c : columns)
        if (c.size() != columns.front().size()) throw DomainError("write_table: columns differ in length");
    auto out = open_for_write(path);
    write_header(out, meta);
    out << "# columns:";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
    for (std::size_t i = 0; i < columns.front().size(); ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? " " : "") << format_number(columns[c][i]);
        out << '\n';
    }
    finish(out, path);
}

void write_json(const std::string& path, const nlohmann::json& doc)
{
    auto out = open_for_write(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series, const PlotOptions& opts)
{
    constexpr double W = 720, H = 440, L = 70, R = 20, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y1 = 0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            if (std::isfinite(s.y[i])) y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) x1 = x0 + 1;
    if (!(y1 > 0)) y1 = 1;
    y1 *= 1.05;
    auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double y) { return H - B - y / y1 * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                   "#17becf", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(opts.title)
       << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double x = x0 + (x1 - x0) * i / 5;
        const double y = y1 * i / 5;
        os << "<text x=\"" << sx(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << short_number(x)
           << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << short_number(y)
           << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
       << escape_xml(opts.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (T + H - B) / 2 << ")\">" << escape_xml(opts.y_label) << "</text>\n";
    for (double m : opts.markers) {
        if (m < x0 || m > x1) continue;
        os << "<line x1=\"" << sx(m) << "\" y1=\"" << T << "\" x2=\"" << sx(m) << "\" y2=\"" << H - B
           << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % (sizeof colors / sizeof *colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            os << short_number(sx(s.x[i])) << ',' << short_number(sy(s.y[i])) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 16 + 15 * k << "\" text-anchor=\"end\" fill=\"" << color
           << "\">" << escape_xml(s.label) << "</text>\n";
    }
    os << "</svg>\n";

    auto out = open_for_write(path);
    out << os.str();
    finish(out, path);
}

nlohmann::json error_record(const std::string& type, const std::string& message,
                            const std::vector<std::string>& violations)
{
    return {{"error", {{"type", type}, {"message", message}, {"violations", violations}}}};
}

} // namespace ewi
