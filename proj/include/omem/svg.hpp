#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace omem {

struct ChartSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, y), pre-sorted by x
};

/// Minimal line chart used for the success/size/time curves. One fixed
/// canvas, axis ticks at the data extremes, one polyline per series.
inline std::string render_line_chart(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<ChartSeries>& series) {
    constexpr double width = 640.0, height = 420.0;
    constexpr double left = 70.0, right = 610.0, top = 50.0, bottom = 360.0;
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                x_min = x_max = x;
                y_min = y_max = y;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    const auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
    const auto sy = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * (bottom - top); };

    std::ostringstream out;
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 35
        << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
        << (top + bottom) / 2 << ")\">" << y_label << "</text>\n";
    for (double frac : {0.0, 0.5, 1.0}) {
        const double xv = x_min + frac * (x_max - x_min);
        const double yv = y_min + frac * (y_max - y_min);
        out << "<text x=\"" << sx(xv) << "\" y=\"" << bottom + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << xv << "</text>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << sy(yv) + 4
            << "\" text-anchor=\"end\" font-size=\"10\">" << yv << "</text>\n";
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = palette[i % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : series[i].points) out << sx(x) << "," << sy(y) << " ";
        out << "\"/>\n";
        for (const auto& [x, y] : series[i].points) {
            out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color
                << "\"/>\n";
        }
        out << "<text x=\"" << right - 4 << "\" y=\"" << top + 16.0 * static_cast<double>(i)
            << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
            << series[i].label << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace omem
