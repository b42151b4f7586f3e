#include "bladerom/svg.hpp"

#include "bladerom/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace bladerom::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 50.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi == lo) {
            const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.05;
            lo -= pad;
            hi += pad;
        }
    }
};

class Mapper {
public:
    Mapper(Range x, Range y, bool log_y) : x_(x), y_(y), log_y_(log_y) {}

    [[nodiscard]] double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
    [[nodiscard]] double py(double v) const {
        const double t = log_y_ ? std::log10(v) : v;
        return kHeight - kBottom - (t - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
    }
    [[nodiscard]] bool usable(double y) const { return std::isfinite(y) && (!log_y_ || y > 0.0); }

private:
    Range x_;
    Range y_;
    bool log_y_;
};

} // namespace

std::string palette(std::size_t index) {
    static constexpr std::array<const char*, 8> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                       "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    return colors[index % colors.size()];
}

std::string render(const Plot& plot) {
    Range xr;
    Range yr;
    auto add_y = [&](double v) {
        if (plot.log_y) {
            if (v > 0.0) yr.add(std::log10(v));
        } else {
            yr.add(v);
        }
    };
    for (const auto& l : plot.lines) {
        for (double v : l.x) xr.add(v);
        for (double v : l.y) add_y(v);
    }
    for (const auto& b : plot.bands) {
        for (double v : b.x) xr.add(v);
        for (double v : b.lower) add_y(v);
        for (double v : b.upper) add_y(v);
    }
    for (const auto& b : plot.bars) {
        for (double v : b.edges) xr.add(v);
        for (double v : b.counts) add_y(v);
        if (!plot.log_y) yr.add(0.0);
    }
    xr.finish();
    yr.finish();
    const Mapper m(xr, yr, plot.log_y);

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(plot.title) +
         "</text>\n";

    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    s += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y0 - y1) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        const double xp = m.px(xv);
        const double yp = y0 - (y0 - y1) * i / 4.0;
        s += "<text x=\"" + num(xp) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\" font-size=\"11\">" +
             tick(xv) + "</text>\n";
        s += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(yp + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
             (plot.log_y ? "1e" + tick(yv) : tick(yv)) + "</text>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) + "\" text-anchor=\"middle\" font-size=\"13\">" +
         escape(plot.x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " +
         num((y0 + y1) / 2) + ")\">" + escape(plot.y_label) + "</text>\n";

    for (const auto& b : plot.bands) {
        std::string pts;
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            if (!m.usable(b.upper[i])) continue;
            pts += num(m.px(b.x[i])) + "," + num(m.py(b.upper[i])) + " ";
        }
        for (std::size_t i = b.x.size(); i-- > 0;) {
            if (!m.usable(b.lower[i])) continue;
            pts += num(m.px(b.x[i])) + "," + num(m.py(b.lower[i])) + " ";
        }
        s += "<polygon points=\"" + pts + "\" fill=\"" + b.color + "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
    }
    for (const auto& b : plot.bars) {
        const double base = plot.log_y ? std::pow(10.0, yr.lo) : 0.0;
        for (std::size_t i = 0; i < b.counts.size(); ++i) {
            if (!m.usable(b.counts[i])) continue;
            const double xa = m.px(b.edges[i]);
            const double xb = m.px(b.edges[i + 1]);
            const double ya = m.py(b.counts[i]);
            const double yb = m.py(base);
            s += "<rect x=\"" + num(xa) + "\" y=\"" + num(std::min(ya, yb)) + "\" width=\"" + num(xb - xa) +
                 "\" height=\"" + num(std::abs(yb - ya)) + "\" fill=\"" + b.color +
                 "\" fill-opacity=\"0.5\" stroke=\"" + b.color + "\"/>\n";
        }
    }
    for (const auto& l : plot.lines) {
        if (l.markers) {
            for (std::size_t i = 0; i < l.x.size(); ++i) {
                if (!m.usable(l.y[i])) continue;
                s += "<circle cx=\"" + num(m.px(l.x[i])) + "\" cy=\"" + num(m.py(l.y[i])) + "\" r=\"1.5\" fill=\"" +
                     l.color + "\"/>\n";
            }
            continue;
        }
        std::string pts;
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!m.usable(l.y[i])) continue;
            pts += num(m.px(l.x[i])) + "," + num(m.py(l.y[i])) + " ";
        }
        s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + l.color + "\" stroke-width=\"1.2\"/>\n";
    }

    double legend_y = y1 + 14;
    auto legend = [&](const std::string& label, const std::string& color) {
        if (label.empty()) return;
        s += "<rect x=\"" + num(x1 - 150) + "\" y=\"" + num(legend_y - 9) + "\" width=\"12\" height=\"10\" fill=\"" +
             color + "\"/>\n";
        s += "<text x=\"" + num(x1 - 134) + "\" y=\"" + num(legend_y) + "\" font-size=\"11\">" + escape(label) +
             "</text>\n";
        legend_y += 15;
    };
    for (const auto& b : plot.bars) legend(b.label, b.color);
    for (const auto& l : plot.lines) legend(l.label, l.color);
    s += "</svg>\n";
    return s;
}

void write(const std::filesystem::path& path, const Plot& plot) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << render(plot);
}

} // namespace bladerom::svg
