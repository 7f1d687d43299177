#pragma once

// Minimal SVG line plots: axes with ticks, optional log scales, legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "stoch_euler/errors.hpp"

namespace stoch_euler::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct LinePlot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace detail

/// Points that are non-finite, or nonpositive on a log axis, are skipped.
inline std::string render(const LinePlot& plot) {
    constexpr double kW = 720, kH = 480, kLeft = 80, kRight = 180, kTop = 40, kBottom = 60;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!plot.log_x || x > 0) && (!plot.log_y || y > 0);
    };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;

    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto px = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return kTop + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::escape(plot.title) << "</text>\n";
    o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        const double fx = x0 + (x1 - x0) * i / 5.0, fy = y0 + (y1 - y0) * i / 5.0;
        const double sx = kLeft + pw * i / 5.0, sy = kTop + ph - ph * i / 5.0;
        const std::string lx = plot.log_x ? "1e" + detail::num(fx) : detail::num(fx);
        const std::string ly = plot.log_y ? "1e" + detail::num(fy) : detail::num(fy);
        o << "<line x1=\"" << sx << "\" y1=\"" << kTop + ph << "\" x2=\"" << sx << "\" y2=\"" << kTop + ph + 5
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << sx << "\" y=\"" << kTop + ph + 20 << "\" text-anchor=\"middle\">" << lx << "</text>\n";
        o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << sy << "\" x2=\"" << kLeft << "\" y2=\"" << sy
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << ly << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">"
      << detail::escape(plot.xlabel) << "</text>\n";
    o << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">" << detail::escape(plot.ylabel) << "</text>\n";

    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (usable(s.x[i], s.y[i])) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        o << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 35 << "\" y2=\""
          << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << kW - kRight + 40 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

inline void write(const LinePlot& plot, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("svg: cannot open " + path);
    f << render(plot);
}

}  // namespace stoch_euler::svg
