// Copyright (c) 2026 sparsetrain contributors
// SPDX-License-Identifier: Apache-2.0
//
// Just enough SVG to render the report plots.

#pragma once

#include <string>
#include <vector>

namespace sparsetrain {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Scatter + line plot with log-scaled x when requested.
void write_svg_xy(const std::string& path, const std::string& title, const std::string& x_label,
                  const std::string& y_label, const std::vector<SvgSeries>& series, bool log_x);

// Grouped bar chart: one group per category, one bar per series.
void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<std::string>& categories,
                    const std::vector<SvgSeries>& series);

} // namespace sparsetrain
