// Minimal SVG writer for the report stage: line/scatter plots (optionally
// log-log) and cell heatmaps. No external plotting dependency.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "levyflow/errors.hpp"
#include "levyflow/io.hpp"

namespace levyflow {

struct PlotSeries {
    std::string label;
    std::string color = "#1f77b4";
    bool points_only = false;
    std::vector<double> x, y;
};

namespace svgdetail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;
    bool log = false;

    double map(double v, double px0, double px1) const {
        double a = lo, b = hi, x = v;
        if (log) {
            a = std::log10(lo);
            b = std::log10(hi);
            x = std::log10(v);
        }
        if (b <= a) b = a + 1.0;
        return px0 + (x - a) / (b - a) * (px1 - px0);
    }

    std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            const int e0 = static_cast<int>(std::floor(std::log10(lo)));
            const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
            for (int e = e0; e <= e1; ++e) {
                const double v = std::pow(10.0, e);
                if (v >= lo * 0.999 && v <= hi * 1.001) t.push_back(v);
            }
            if (t.size() < 2) {
                t = {lo, hi};
            }
            return t;
        }
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        for (double m : {1.0, 2.0, 5.0, 10.0}) {
            if (raw <= m * mag) {
                step = m * mag;
                break;
            }
        }
        const double first = std::ceil(lo / step) * step;
        for (double v = first; v <= hi + 1e-12 * span; v += step) t.push_back(v);
        return t;
    }
};

}  // namespace svgdetail

inline void svg_plot(const fs::path& path, const std::string& title, const std::string& xlabel,
                     const std::string& ylabel, const std::vector<PlotSeries>& series,
                     bool logx = false, bool logy = false) {
    const double W = 720, H = 480, L = 70, R = 20, T = 40, Bo = 50;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& s : series) {
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    if (!(xlo < xhi)) {
        xlo -= 0.5;
        xhi += 0.5;
    }
    if (!(ylo < yhi)) {
        ylo -= 0.5;
        yhi += 0.5;
    }
    if (!logx) {
        const double pad = 0.02 * (xhi - xlo);
        xlo -= pad;
        xhi += pad;
    }
    if (!logy) {
        const double pad = 0.06 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
    }
    svgdetail::Axis ax{xlo, xhi, logx}, ay{ylo, yhi, logy};

    std::string s;
    s += "<svg xmlns='http://www.w3.org/2000/svg' width='" + svgdetail::num(W) + "' height='" +
         svgdetail::num(H) + "' font-family='sans-serif' font-size='12'>\n";
    s += "<rect width='100%' height='100%' fill='white'/>\n";
    s += "<text x='" + svgdetail::num(W / 2) + "' y='20' text-anchor='middle' font-size='15'>" +
         title + "</text>\n";

    auto px = [&](double v) { return ax.map(v, L, W - R); };
    auto py = [&](double v) { return ay.map(v, H - Bo, T); };

    for (double t : ax.ticks()) {
        const double x = px(t);
        s += "<line x1='" + svgdetail::num(x) + "' y1='" + svgdetail::num(T) + "' x2='" +
             svgdetail::num(x) + "' y2='" + svgdetail::num(H - Bo) +
             "' stroke='#dddddd' stroke-width='1'/>\n";
        s += "<text x='" + svgdetail::num(x) + "' y='" + svgdetail::num(H - Bo + 18) +
             "' text-anchor='middle'>" + svgdetail::num(t) + "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        s += "<line x1='" + svgdetail::num(L) + "' y1='" + svgdetail::num(y) + "' x2='" +
             svgdetail::num(W - R) + "' y2='" + svgdetail::num(y) +
             "' stroke='#dddddd' stroke-width='1'/>\n";
        s += "<text x='" + svgdetail::num(L - 8) + "' y='" + svgdetail::num(y + 4) +
             "' text-anchor='end'>" + svgdetail::num(t) + "</text>\n";
    }
    s += "<rect x='" + svgdetail::num(L) + "' y='" + svgdetail::num(T) + "' width='" +
         svgdetail::num(W - L - R) + "' height='" + svgdetail::num(H - T - Bo) +
         "' fill='none' stroke='black'/>\n";
    s += "<text x='" + svgdetail::num((L + W - R) / 2) + "' y='" + svgdetail::num(H - 12) +
         "' text-anchor='middle'>" + xlabel + "</text>\n";
    s += "<text x='16' y='" + svgdetail::num((T + H - Bo) / 2) + "' text-anchor='middle' transform='rotate(-90 16 " +
         svgdetail::num((T + H - Bo) / 2) + ")'>" + ylabel + "</text>\n";

    double ly = T + 14;
    for (const auto& sr : series) {
        if (!sr.points_only) {
            std::string pts;
            for (std::size_t i = 0; i < sr.x.size(); ++i)
                pts += svgdetail::num(px(sr.x[i])) + "," + svgdetail::num(py(sr.y[i])) + " ";
            s += "<polyline points='" + pts + "' fill='none' stroke='" + sr.color +
                 "' stroke-width='1.8'/>\n";
        } else {
            for (std::size_t i = 0; i < sr.x.size(); ++i)
                s += "<circle cx='" + svgdetail::num(px(sr.x[i])) + "' cy='" +
                     svgdetail::num(py(sr.y[i])) + "' r='3' fill='" + sr.color + "'/>\n";
        }
        if (!sr.label.empty()) {
            s += "<rect x='" + svgdetail::num(W - R - 150) + "' y='" + svgdetail::num(ly - 9) +
                 "' width='10' height='10' fill='" + sr.color + "'/>\n";
            s += "<text x='" + svgdetail::num(W - R - 135) + "' y='" + svgdetail::num(ly) + "'>" +
                 sr.label + "</text>\n";
            ly += 16;
        }
    }
    s += "</svg>\n";
    atomic_write_file(path, s);
}

// values row-major over ny rows and nx columns; row 0 at y0 (bottom).
inline void svg_heatmap(const fs::path& path, const std::string& title,
                        const std::vector<double>& values, int nx, int ny, double x0, double x1,
                        double y0, double y1) {
    if (nx < 1 || ny < 1 || values.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
        throw ValidationError("heatmap: size mismatch");
    const double W = 640, H = 560, L = 70, R = 90, T = 40, Bo = 50;
    double vlo = values[0], vhi = values[0];
    for (double v : values) {
        vlo = std::min(vlo, v);
        vhi = std::max(vhi, v);
    }
    if (!(vlo < vhi)) vhi = vlo + 1.0;

    auto color = [&](double v) {
        // blue -> white -> red
        double t = (v - vlo) / (vhi - vlo);
        t = std::clamp(t, 0.0, 1.0);
        int r, g, b;
        if (t < 0.5) {
            const double u = t / 0.5;
            r = static_cast<int>(59 + u * (255 - 59));
            g = static_cast<int>(76 + u * (255 - 76));
            b = static_cast<int>(192 + u * (255 - 192));
        } else {
            const double u = (t - 0.5) / 0.5;
            r = static_cast<int>(255 - u * (255 - 180));
            g = static_cast<int>(255 - u * (255 - 4));
            b = static_cast<int>(255 - u * (255 - 38));
        }
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };

    std::string s;
    s += "<svg xmlns='http://www.w3.org/2000/svg' width='" + svgdetail::num(W) + "' height='" +
         svgdetail::num(H) + "' font-family='sans-serif' font-size='12'>\n";
    s += "<rect width='100%' height='100%' fill='white'/>\n";
    s += "<text x='" + svgdetail::num(W / 2) + "' y='20' text-anchor='middle' font-size='15'>" +
         title + "</text>\n";
    const double cw = (W - L - R) / nx, ch = (H - T - Bo) / ny;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v = values[static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
                                    static_cast<std::size_t>(i)];
            const double x = L + i * cw;
            const double y = H - Bo - (j + 1) * ch;
            s += "<rect x='" + svgdetail::num(x) + "' y='" + svgdetail::num(y) + "' width='" +
                 svgdetail::num(cw + 0.5) + "' height='" + svgdetail::num(ch + 0.5) + "' fill='" +
                 color(v) + "'/>\n";
        }
    }
    s += "<rect x='" + svgdetail::num(L) + "' y='" + svgdetail::num(T) + "' width='" +
         svgdetail::num(W - L - R) + "' height='" + svgdetail::num(H - T - Bo) +
         "' fill='none' stroke='black'/>\n";
    // axis extremes and a simple color bar
    s += "<text x='" + svgdetail::num(L) + "' y='" + svgdetail::num(H - Bo + 18) + "'>" +
         svgdetail::num(x0) + "</text>\n";
    s += "<text x='" + svgdetail::num(W - R) + "' y='" + svgdetail::num(H - Bo + 18) +
         "' text-anchor='end'>" + svgdetail::num(x1) + "</text>\n";
    s += "<text x='" + svgdetail::num(L - 8) + "' y='" + svgdetail::num(H - Bo) +
         "' text-anchor='end'>" + svgdetail::num(y0) + "</text>\n";
    s += "<text x='" + svgdetail::num(L - 8) + "' y='" + svgdetail::num(T + 10) +
         "' text-anchor='end'>" + svgdetail::num(y1) + "</text>\n";
    const int nbar = 60;
    const double bx = W - R + 20, bw = 18, bh = (H - T - Bo);
    for (int k = 0; k < nbar; ++k) {
        const double v = vlo + (vhi - vlo) * (k + 0.5) / nbar;
        const double y = H - Bo - bh * (k + 1.0) / nbar;
        s += "<rect x='" + svgdetail::num(bx) + "' y='" + svgdetail::num(y) + "' width='" +
             svgdetail::num(bw) + "' height='" + svgdetail::num(bh / nbar + 0.5) + "' fill='" +
             color(v) + "'/>\n";
    }
    s += "<text x='" + svgdetail::num(bx + bw + 4) + "' y='" + svgdetail::num(H - Bo) + "'>" +
         svgdetail::num(vlo) + "</text>\n";
    s += "<text x='" + svgdetail::num(bx + bw + 4) + "' y='" + svgdetail::num(T + 10) + "'>" +
         svgdetail::num(vhi) + "</text>\n";
    s += "</svg>\n";
    atomic_write_file(path, s);
}

}  // namespace levyflow
