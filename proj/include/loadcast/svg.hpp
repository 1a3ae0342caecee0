#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "loadcast/error.hpp"

namespace loadcast {

// Dependency-free static SVG writers for the report plots: a bar chart for
// sweeps and daily-error strips, and a two-series overlay for forecasts.

namespace detail {
inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
} // namespace detail

inline void svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::string& y_label,
                          const std::string& path) {
    if (labels.size() != values.size()) throw Error("svg_bar_chart: label/value count mismatch");
    const double w = 900, h = 420, ml = 70, mr = 20, mt = 50, mb = 70;
    const double plot_w = w - ml - mr, plot_h = h - mt - mb;
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<text x='16' y='" << mt + plot_h / 2
        << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 " << mt + plot_h / 2
        << ")'>" << y_label << "</text>\n";
    for (int g = 0; g <= 4; ++g) {
        const double y = mt + plot_h - plot_h * g / 4;
        out << "<line x1='" << ml << "' y1='" << y << "' x2='" << w - mr << "' y2='" << y
            << "' stroke='#ddd'/>\n";
        out << "<text x='" << ml - 6 << "' y='" << y + 4 << "' text-anchor='end' font-size='10'>"
            << detail::svg_num(vmax * g / 4) << "</text>\n";
    }
    const std::size_t n = values.size();
    const double slot = plot_w / static_cast<double>(n);
    const double bar = slot * 0.7;
    const bool sparse_labels = n > 40;
    for (std::size_t i = 0; i < n; ++i) {
        const double bh = plot_h * values[i] / vmax;
        const double x = ml + slot * static_cast<double>(i) + (slot - bar) / 2;
        out << "<rect x='" << x << "' y='" << mt + plot_h - bh << "' width='" << bar
            << "' height='" << bh << "' fill='#4878a8'/>\n";
        if (!sparse_labels || i % (n / 20 + 1) == 0)
            out << "<text x='" << x + bar / 2 << "' y='" << h - mb + 16
                << "' text-anchor='end' font-size='9' transform='rotate(-45 " << x + bar / 2 << " "
                << h - mb + 16 << ")'>" << labels[i] << "</text>\n";
    }
    out << "<line x1='" << ml << "' y1='" << mt + plot_h << "' x2='" << w - mr << "' y2='"
        << mt + plot_h << "' stroke='black'/>\n";
    out << "</svg>\n";
}

/// Two series over a shared x axis (hour index), e.g. actual vs forecast.
inline void svg_overlay(const std::string& title, const std::string& name_a,
                        const std::vector<double>& a, const std::string& name_b,
                        const std::vector<double>& b, const std::string& path) {
    if (a.size() != b.size() || a.empty()) throw Error("svg_overlay: series must match");
    const double w = 1100, h = 420, ml = 70, mr = 20, mt = 50, mb = 40;
    const double plot_w = w - ml - mr, plot_h = h - mt - mb;
    double lo = a[0], hi = a[0];
    for (double v : a) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : b) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (hi <= lo) hi = lo + 1.0;

    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    auto emit = [&](const std::vector<double>& s, const char* color) {
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1' points='";
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double x = ml + plot_w * static_cast<double>(i) / static_cast<double>(s.size() - 1);
            const double y = mt + plot_h - plot_h * (s[i] - lo) / (hi - lo);
            out << detail::svg_num(x) << ',' << detail::svg_num(y) << ' ';
        }
        out << "'/>\n";
    };
    emit(a, "#303030");
    emit(b, "#c04040");
    out << "<text x='" << ml << "' y='" << h - 8 << "' font-size='12' fill='#303030'>" << name_a
        << "</text>\n";
    out << "<text x='" << ml + 160 << "' y='" << h - 8 << "' font-size='12' fill='#c04040'>"
        << name_b << "</text>\n";
    for (int g = 0; g <= 4; ++g) {
        const double y = mt + plot_h - plot_h * g / 4;
        out << "<text x='" << ml - 6 << "' y='" << y + 4 << "' text-anchor='end' font-size='10'>"
            << detail::svg_num(lo + (hi - lo) * g / 4) << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace loadcast
