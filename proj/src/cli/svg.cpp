#include "cdslice/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace cdslice::cli::svg {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

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
        if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-12) {
            const double pad = std::max(std::abs(lo) * 0.05, 1e-6);
            lo -= pad;
            hi += pad;
        }
    }
};

class Canvas {
public:
    Canvas(const Axes& axes, Range xr, Range yr) : axes_(axes) {
        xr.finish();
        yr.finish();
        xt_ = nice_ticks(xr.lo, xr.hi);
        yt_ = nice_ticks(yr.lo, yr.hi);
        x0_ = std::min(xr.lo, xt_.front());
        x1_ = std::max(xr.hi, xt_.back());
        y0_ = std::min(yr.lo, yt_.front());
        y1_ = std::max(yr.hi, yt_.back());
        body_ = fmt::format(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
            "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            kWidth, kHeight);
        frame();
    }

    double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }
    double y_lo() const { return y0_; }
    double x_lo() const { return x0_; }
    double x_hi() const { return x1_; }
    double y_hi() const { return y1_; }

    void add(const std::string& element) { body_ += element; }
    std::string finish() { return body_ + "</svg>\n"; }

private:
    void frame() {
        const double l = kLeft, r = kWidth - kRight, t = kTop, b = kHeight - kBottom;
        for (double v : xt_) {
            body_ += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"#e5e5e5\"/>\n", px(v), t, b);
            body_ += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(v), b + 16,
                                 fmt::format("{:.4g}", v));
        }
        for (double v : yt_) {
            body_ += fmt::format("<line x1=\"{1}\" y1=\"{0:.2f}\" x2=\"{2}\" y2=\"{0:.2f}\" stroke=\"#e5e5e5\"/>\n", py(v), l, r);
            body_ += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", l - 6, py(v) + 4,
                                 fmt::format("{:.4g}", v));
        }
        body_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", l,
                             t, r - l, b - t);
        body_ += fmt::format("<text class=\"title\" x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                             kWidth / 2, escape(axes_.title));
        body_ += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (l + r) / 2, kHeight - 12,
                             escape(axes_.x_label));
        body_ += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                             (t + b) / 2, escape(axes_.y_label));
    }

    Axes axes_;
    std::vector<double> xt_, yt_;
    double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
    std::string body_;
};

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int target) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    const double first = std::floor(lo / step) * step;
    for (double v = first; v <= hi + step * 0.5 && ticks.size() < 50; v += step) ticks.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
    return ticks;
}

std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
    Range xr, yr;
    for (const auto& s : series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(v);
    }
    Canvas c(axes, xr, yr);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                c.add(fmt::format("<polyline class=\"series\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
                                  color, pts));
            pts.clear();
        };
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                flush();
                continue;
            }
            pts += fmt::format("{}{:.2f},{:.2f}", pts.empty() ? "" : " ", c.px(s.x[i]), c.py(s.y[i]));
        }
        flush();
        if (series.size() > 1)
            c.add(fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", kWidth - kRight - 150,
                              kTop + 16 + 16 * static_cast<double>(k), color, escape(s.name)));
    }
    return c.finish();
}

std::string scatter_chart(const Axes& axes, const std::vector<double>& x, const std::vector<double>& y,
                          bool identity_line) {
    Range xr, yr;
    for (double v : x) xr.add(v);
    for (double v : y) yr.add(v);
    if (identity_line) {
        // Shared limits so the reference line is the diagonal.
        Range both;
        both.add(xr.lo), both.add(xr.hi), both.add(yr.lo), both.add(yr.hi);
        xr = yr = both;
    }
    Canvas c(axes, xr, yr);
    if (identity_line) {
        const double lo = std::max(c.x_lo(), c.y_lo()), hi = std::min(c.x_hi(), c.y_hi());
        c.add(fmt::format("<line class=\"identity\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
                          "stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n",
                          c.px(lo), c.py(lo), c.px(hi), c.py(hi)));
    }
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
        c.add(fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n",
                          c.px(x[i]), c.py(y[i])));
    }
    return c.finish();
}

std::string bar_chart(const Axes& axes, const std::vector<double>& edges, const std::vector<double>& values) {
    Range xr, yr;
    for (double e : edges) xr.add(e);
    yr.add(0.0);
    for (double v : values) yr.add(v);
    Canvas c(axes, xr, yr);
    for (std::size_t i = 0; i < values.size() && i + 1 < edges.size(); ++i) {
        if (!std::isfinite(values[i])) continue;
        const double x0 = c.px(edges[i]), x1 = c.px(edges[i + 1]);
        const double ya = c.py(std::max(values[i], 0.0)), yb = c.py(std::min(values[i], 0.0));
        c.add(fmt::format("<rect class=\"bar\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                          "fill=\"#1f77b4\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
                          x0, ya, std::max(x1 - x0, 0.0), std::max(yb - ya, 0.0)));
    }
    if (c.y_lo() < 0.0)
        c.add(fmt::format("<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", kLeft, c.py(0.0),
                          kWidth - kRight, c.py(0.0)));
    return c.finish();
}

}  // namespace cdslice::cli::svg
