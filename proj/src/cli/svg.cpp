#include "flipline/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace flipline::cli {

namespace {

constexpr double kW = 720, kH = 480, kL = 80, kR = 24, kT = 44, kB = 64;
const char* kColors[] = {"#1f4e9c", "#b8321f", "#2a8a3e", "#7a3f9d", "#b07d12", "#333333"};

std::string esc(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(x) < 1e-12 ? 0.0 : x);
    return buf;
}

std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw) {
            step = f * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
    return t;
}

}  // namespace

std::string render_svg(const Plot& p, const std::string& hash) {
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    for (const auto& m : p.markers) {
        xlo = std::min(xlo, m.x);
        xhi = std::max(xhi, m.x);
    }
    if (!(xhi > xlo)) {
        xlo -= 1.0;
        xhi += 1.0;
    }
    if (p.y_hi > p.y_lo) {
        ylo = p.y_lo;
        yhi = p.y_hi;
    } else {
        const double pad = 0.05 * (yhi - ylo);
        ylo -= pad;
        yhi += pad;
        if (!(yhi > ylo)) {
            ylo -= 1.0;
            yhi += 1.0;
        }
    }
    auto sx = [&](double x) { return kL + (x - xlo) / (xhi - xlo) * (kW - kL - kR); };
    auto sy = [&](double y) { return kH - kB - (y - ylo) / (yhi - ylo) * (kH - kT - kB); };

    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" + num(kH) +
         "\" viewBox=\"0 0 " + num(kW) + " " + num(kH) + "\">\n";
    o += "<metadata>config_hash=" + esc(hash) + "</metadata>\n";
    o += "<title>" + esc(p.title) + "</title>\n";
    o += "<rect x=\"0\" y=\"0\" width=\"" + num(kW) + "\" height=\"" + num(kH) + "\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + esc(p.title) +
         "</text>\n";

    // Axes, ticks and labels.
    o += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    o += "<rect x=\"" + num(kL) + "\" y=\"" + num(kT) + "\" width=\"" + num(kW - kL - kR) + "\" height=\"" +
         num(kH - kT - kB) + "\"/>\n";
    for (double t : ticks(xlo, xhi))
        o += "<line x1=\"" + num(sx(t)) + "\" y1=\"" + num(kH - kB) + "\" x2=\"" + num(sx(t)) + "\" y2=\"" +
             num(kH - kB + 5) + "\"/>\n";
    for (double t : ticks(ylo, yhi))
        o += "<line x1=\"" + num(kL - 5) + "\" y1=\"" + num(sy(t)) + "\" x2=\"" + num(kL) + "\" y2=\"" +
             num(sy(t)) + "\"/>\n";
    o += "</g>\n<g class=\"tick-labels\" font-size=\"11\">\n";
    for (double t : ticks(xlo, xhi))
        o += "<text x=\"" + num(sx(t)) + "\" y=\"" + num(kH - kB + 18) + "\" text-anchor=\"middle\">" +
             tick_label(t) + "</text>\n";
    for (double t : ticks(ylo, yhi))
        o += "<text x=\"" + num(kL - 8) + "\" y=\"" + num(sy(t) + 4) + "\" text-anchor=\"end\">" +
             tick_label(t) + "</text>\n";
    o += "</g>\n";
    o += "<text class=\"xlabel\" x=\"" + num((kL + kW - kR) / 2) + "\" y=\"" + num(kH - 16) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + esc(p.xlabel) + "</text>\n";
    o += "<text class=\"ylabel\" x=\"20\" y=\"" + num((kT + kH - kB) / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " + num((kT + kH - kB) / 2) +
         ")\">" + esc(p.ylabel) + "</text>\n";

    for (const auto& m : p.markers) {
        const double x = sx(m.x);
        if (m.arrow) {
            o += "<g class=\"marker arrow\" data-x=\"" + tick_label(m.x) + "\">\n";
            o += "<line x1=\"" + num(x) + "\" y1=\"" + num(kH - kB - 40) + "\" x2=\"" + num(x) + "\" y2=\"" +
                 num(kH - kB - 6) + "\" stroke=\"black\"/>\n";
            o += "<polygon points=\"" + num(x - 4) + "," + num(kH - kB - 12) + " " + num(x + 4) + "," +
                 num(kH - kB - 12) + " " + num(x) + "," + num(kH - kB - 2) + "\" fill=\"black\"/>\n";
            o += "<text x=\"" + num(x) + "\" y=\"" + num(kH - kB - 44) +
                 "\" text-anchor=\"middle\" font-size=\"10\">" + esc(m.label) + "</text>\n</g>\n";
        } else {
            o += "<g class=\"marker\" data-x=\"" + tick_label(m.x) + "\">\n";
            o += "<line x1=\"" + num(x) + "\" y1=\"" + num(kT) + "\" x2=\"" + num(x) + "\" y2=\"" + num(kH - kB) +
                 "\" stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n";
            o += "<text x=\"" + num(x + 3) + "\" y=\"" + num(kT + 12) + "\" font-size=\"10\">" + esc(m.label) +
                 "</text>\n</g>\n";
        }
    }

    // Curves are broken where they leave the plotting range.
    for (std::size_t k = 0; k < p.series.size(); ++k) {
        const auto& s = p.series[k];
        const char* col = kColors[k % 6];
        o += "<g class=\"curve\" data-label=\"" + esc(s.label) + "\" stroke=\"" + col + "\" fill=\"" +
             (s.markers ? col : "none") + "\">\n";
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                if (std::isfinite(s.y[i]) && s.y[i] >= ylo && s.y[i] <= yhi)
                    o += "<circle cx=\"" + num(sx(s.x[i])) + "\" cy=\"" + num(sy(s.y[i])) + "\" r=\"3\"/>\n";
        } else {
            std::string pts;
            int npts = 0;
            auto flush = [&] {
                if (npts >= 2)
                    o += "<polyline points=\"" + pts + "\" stroke-width=\"1.6\"" +
                         (s.dashed ? std::string(" stroke-dasharray=\"6,4\"") : std::string()) + "/>\n";
                pts.clear();
                npts = 0;
            };
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.y[i]) || s.y[i] < ylo || s.y[i] > yhi) {
                    flush();
                    continue;
                }
                pts += (npts ? " " : "") + num(sx(s.x[i])) + "," + num(sy(s.y[i]));
                ++npts;
            }
            flush();
        }
        o += "</g>\n";
    }

    o += "<g class=\"legend\" font-size=\"11\">\n";
    for (std::size_t k = 0; k < p.series.size(); ++k) {
        const double y = kT + 16 + 16 * double(k);
        const double x = kW - kR - 190;
        o += "<line x1=\"" + num(x) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(x + 24) + "\" y2=\"" + num(y - 4) +
             "\" stroke=\"" + kColors[k % 6] + "\"" +
             (p.series[k].dashed ? std::string(" stroke-dasharray=\"6,4\"") : std::string()) + "/>\n";
        o += "<text x=\"" + num(x + 30) + "\" y=\"" + num(y) + "\">" + esc(p.series[k].label) + "</text>\n";
    }
    o += "</g>\n</svg>\n";
    return o;
}

}  // namespace flipline::cli
