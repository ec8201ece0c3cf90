#pragma once

// Artifact writers. Tables are plain text: '#' header lines (including the
// hash of the metadata sidecar) followed by whitespace-separated columns in
// %.16e, so identical runs give byte-identical files.

#include <string>
#include <vector>

#include "ewi/core.hpp"

namespace ewi {

/// FNV-1a 64-bit hash of the compact JSON dump, as 16 hex digits.
std::string metadata_hash(const nlohmann::json& meta);

/// Fixed 17-significant-digit scientific notation.
std::string format_number(double v);

/// "# key: value" header, then "p density" rows.
void write_spectrum_table(const std::string& path, const MomentumDistribution& dist);

/// Table with a shared first column and named data columns.
void write_table(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& columns, const nlohmann::json& meta);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::string& path, const nlohmann::json& doc);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label = "p";
    std::string y_label = "density";
    std::vector<double> markers; ///< vertical guide lines
};

/// Static SVG line plot; series are scaled into a common frame.
void write_svg_plot(const std::string& path, const std::vector<PlotSeries>& series, const PlotOptions& opts);

/// {"error": {"type", "message", "violations"}}.
nlohmann::json error_record(const std::string& type, const std::string& message,
                            const std::vector<std::string>& violations = {});

} // namespace ewi
