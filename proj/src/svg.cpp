// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0

#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "error.hpp"

namespace sparsetrain {

namespace {

constexpr int kW = 720, kH = 480;
constexpr int kL = 80, kR = 24, kT = 48, kB = 64;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                         "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

} // namespace

void write_svg_xy(const std::string& path, const std::string& title, const std::string& x_label,
                  const std::string& y_label, const std::vector<SvgSeries>& series, bool log_x) {
    std::ofstream f(path);
    if (!f) fail(Error::Code::io, "cannot create " + path);

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(std::max(s.x[i], 1e-12)) : s.x[i];
            xmin = std::min(xmin, xv);
            xmax = std::max(xmax, xv);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
    if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) {
        const double v = log_x ? std::log10(std::max(x, 1e-12)) : x;
        return kL + (v - xmin) / (xmax - xmin) * (kW - kL - kR);
    };
    auto py = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << esc(title)
      << "</text>\n";
    f << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR << "' y2='" << kH - kB
      << "' stroke='black'/>\n";
    f << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='" << kH - kB
      << "' stroke='black'/>\n";
    f << "<text x='" << kW / 2 << "' y='" << kH - 16 << "' text-anchor='middle' font-size='12'>"
      << esc(x_label) << "</text>\n";
    f << "<text x='20' y='" << kH / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 20 "
      << kH / 2 << ")'>" << esc(y_label) << "</text>\n";

    // y ticks
    for (int i = 0; i <= 4; ++i) {
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        f << "<line x1='" << kL - 4 << "' y1='" << py(yv) << "' x2='" << kL << "' y2='" << py(yv)
          << "' stroke='black'/><text x='" << kL - 8 << "' y='" << py(yv) + 4
          << "' text-anchor='end' font-size='10'>" << yv << "</text>\n";
    }

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = kColors[si % 8];
        // connect points sorted by x
        std::vector<size_t> idx(s.x.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return s.x[a] < s.x[b]; });
        f << "<polyline fill='none' stroke='" << col << "' stroke-width='1.5' points='";
        for (size_t i : idx) f << px(s.x[i]) << "," << py(s.y[i]) << " ";
        f << "'/>\n";
        for (size_t i = 0; i < s.x.size(); ++i)
            f << "<circle cx='" << px(s.x[i]) << "' cy='" << py(s.y[i]) << "' r='3.5' fill='" << col
              << "'/>\n";
        f << "<rect x='" << kW - kR - 170 << "' y='" << kT + 18 * si << "' width='10' height='10' fill='"
          << col << "'/><text x='" << kW - kR - 154 << "' y='" << kT + 18 * si + 9
          << "' font-size='11'>" << esc(s.label) << "</text>\n";
    }
    f << "</svg>\n";
}

void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& categories,
                    const std::vector<SvgSeries>& series) {
    std::ofstream f(path);
    if (!f) fail(Error::Code::io, "cannot create " + path);
    double ymax = 0.0;
    for (const auto& s : series)
        for (double v : s.y) ymax = std::max(ymax, v);
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;

    const size_t ngroups = categories.size();
    const size_t nseries = std::max<size_t>(series.size(), 1);
    const double group_w = double(kW - kL - kR) / double(std::max<size_t>(ngroups, 1));
    const double bar_w = group_w * 0.8 / double(nseries);
    auto py = [&](double y) { return kH - kB - y / ymax * (kH - kT - kB); };

    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' font-size='16'>" << esc(title)
      << "</text>\n";
    f << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR << "' y2='" << kH - kB
      << "' stroke='black'/>\n";
    f << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='" << kH - kB
      << "' stroke='black'/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = ymax * i / 4.0;
        f << "<line x1='" << kL - 4 << "' y1='" << py(yv) << "' x2='" << kL << "' y2='" << py(yv)
          << "' stroke='black'/><text x='" << kL - 8 << "' y='" << py(yv) + 4
          << "' text-anchor='end' font-size='10'>" << yv << "</text>\n";
    }
    for (size_t g = 0; g < ngroups; ++g) {
        const double gx = kL + group_w * (double(g) + 0.1);
        for (size_t si = 0; si < series.size(); ++si) {
            if (g >= series[si].y.size()) continue;
            const double v = series[si].y[g];
            f << "<rect x='" << gx + bar_w * double(si) << "' y='" << py(v) << "' width='"
              << bar_w * 0.92 << "' height='" << (kH - kB) - py(v) << "' fill='"
              << kColors[si % 8] << "'/>\n";
        }
        f << "<text x='" << gx + group_w * 0.4 << "' y='" << kH - kB + 16
          << "' text-anchor='middle' font-size='10'>" << esc(categories[g]) << "</text>\n";
    }
    for (size_t si = 0; si < series.size(); ++si)
        f << "<rect x='" << kW - kR - 170 << "' y='" << kT + 18 * si << "' width='10' height='10' fill='"
          << kColors[si % 8] << "'/><text x='" << kW - kR - 154 << "' y='" << kT + 18 * si + 9
          << "' font-size='11'>" << esc(series[si].label) << "</text>\n";
    f << "</svg>\n";
}

} // namespace sparsetrain
