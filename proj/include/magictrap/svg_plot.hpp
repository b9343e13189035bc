#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "io.hpp"

namespace magictrap::svg {

enum class Style { Line, Markers };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    Style style = Style::Line;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s)
{
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

inline std::string num(double v) { return io::format_number(v, 6); }

/// Tick positions at 1/2/5 x 10^k spacing covering [lo, hi].
inline std::vector<double> ticks(double lo, double hi, int target = 6)
{
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
        out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

inline constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                          "#8c564b"};

} // namespace detail

/// Renders a static line/marker plot as a self-contained SVG document.
inline std::string render(const Plot& plot)
{
    constexpr double width = 640, height = 420;
    constexpr double left = 80, right = 20, top = 40, bottom = 60;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series) {
        magictrap::detail::require(s.x.size() == s.y.size(), ErrorCode::InvalidArgument,
                                   "svg: series x/y length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
    using detail::num;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\""
           + num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
           + detail::escape(plot.title) + "</text>\n";
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw)
           + "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : detail::ticks(xmin, xmax)) {
        out += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(px(t))
               + "\" y2=\"" + num(top + ph + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + ph + 20)
               + "\" text-anchor=\"middle\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    for (double t : detail::ticks(ymin, ymax)) {
        out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(left)
               + "\" y2=\"" + num(py(t)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(t) + 4)
               + "\" text-anchor=\"end\" font-size=\"11\">" + num(t) + "</text>\n";
    }
    out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(height - 15)
           + "\" text-anchor=\"middle\" font-size=\"13\">" + detail::escape(plot.x_label)
           + "</text>\n";
    out += "<text transform=\"translate(18," + num(top + ph / 2)
           + ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">"
           + detail::escape(plot.y_label) + "</text>\n";

    std::size_t k = 0;
    for (const auto& s : plot.series) {
        const char* color = detail::palette[k % std::size(detail::palette)];
        if (s.style == Style::Line) {
            std::string pts;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
            out += "<polyline fill=\"none\" stroke=\"" + std::string(color)
                   + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        } else {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
                    out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i]))
                           + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        }
        const double ly = top + 16 + 16 * static_cast<double>(k);
        out += "<text x=\"" + num(left + pw - 8) + "\" y=\"" + num(ly)
               + "\" text-anchor=\"end\" font-size=\"11\" fill=\"" + color + "\">"
               + detail::escape(s.label) + "</text>\n";
        ++k;
    }
    out += "</svg>\n";
    return out;
}

} // namespace magictrap::svg
