/*
 * Copyright (C) 2026 The chemoviro authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "chemoviro/errors.hpp"

namespace chemoviro::io {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Axis labels carry their units, e.g. "time (days)".
struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

namespace detail {

inline constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                     "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Round-valued ticks (1, 2 or 5 times a power of ten) covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double unit = raw / mag;
    const double step = mag * (unit < 1.5 ? 1.0 : unit < 3.5 ? 2.0 : unit < 7.5 ? 5.0 : 10.0);
    std::vector<double> ticks;
    for (double k = std::ceil(lo / step - 1e-9); k * step <= hi + 1e-9 * step; k += 1.0) {
        ticks.push_back(k * step == 0.0 ? 0.0 : k * step);
    }
    return ticks;
}

/// Whole decades in log10 space, thinned to at most seven.
inline std::vector<double> decade_ticks(double lo, double hi) {
    const double first = std::ceil(lo - 1e-9), last = std::floor(hi + 1e-9);
    const double stride = std::max(1.0, std::ceil((last - first) / 6.0));
    std::vector<double> ticks;
    for (double d = first; d <= last; d += stride) ticks.push_back(d);
    return ticks;
}

inline std::string decade_label(double d) {
    char buf[32];
    if (d >= -3.0 && d <= 4.0) {
        std::snprintf(buf, sizeof buf, "%g", std::pow(10.0, d));
    } else {
        std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(d));
    }
    return buf;
}

inline std::string escape(const std::string& s) {
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

} // namespace detail

/// Renders line series as a self-contained SVG document.
[[nodiscard]] inline std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
    using detail::num;
    if (series.empty()) throw PreconditionError("plot needs at least one series");
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw PreconditionError("series '" + s.label + "' is empty or has mismatched x/y lengths");
        }
    }
    const double floor_y = 1e-12;
    auto ty = [&](double y) { return spec.log_y ? std::log10(std::max(y, floor_y)) : y; };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, ty(s.y[k]));
            y1 = std::max(y1, ty(s.y[k]));
        }
    }
    if (!std::isfinite(x0)) throw PreconditionError("plot has no finite points");
    if (x1 == x0) x1 = x0 + 1.0;
    if (spec.log_y) {
        y0 = std::floor(y0);
        y1 = std::max(std::ceil(y1), y0 + 1.0);
    } else if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }

    const double W = 720, H = 450, L = 80, R = 170, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(L + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
       << detail::escape(spec.title) << "</text>\n";
    os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double xv : detail::linear_ticks(x0, x1)) {
        os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(T + ph) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
           << num(T + ph + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(T + ph + 18) << "\" text-anchor=\"middle\">"
           << detail::tick_label(xv) << "</text>\n";
    }
    for (double yv : spec.log_y ? detail::decade_ticks(y0, y1) : detail::linear_ticks(y0, y1)) {
        os << "<line x1=\"" << num(L - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(L) << "\" y2=\""
           << num(py(yv)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(L - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
           << (spec.log_y ? detail::decade_label(yv) : detail::tick_label(yv)) << "</text>\n";
    }
    os << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << num(H - 15) << "\" text-anchor=\"middle\">"
       << detail::escape(spec.x_label) << "</text>\n";
    os << "<text x=\"18\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << num(T + ph / 2) << ")\">" << detail::escape(spec.y_label) << (spec.log_y ? " (log scale)" : "")
       << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* colour = detail::kPalette[i % detail::kPalette.size()];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            os << (first ? "" : " ") << num(px(s.x[k])) << ',' << num(py(ty(s.y[k])));
            first = false;
        }
        os << "\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(i);
        os << "<line x1=\"" << num(W - R + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(W - R + 40)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(W - R + 46) << "\" y=\"" << num(ly + 4) << "\">" << detail::escape(s.label)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Writes the plot to `path`; throws PreconditionError on empty input.
inline void emit_plot(const std::vector<Series>& series, const PlotSpec& spec, const std::string& path) {
    const auto svg = render_svg(series, spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write plot '" + path + "'");
    out << svg;
}

} // namespace chemoviro::io
