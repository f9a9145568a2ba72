#include "hypobench/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hypobench::cli {

namespace {

constexpr const char* kPalette[] = {"#1b6ca8", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e"};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
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

}  // namespace

std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool diagonal) {
    const double left = 60, top = 40, size = 360, width = left + size + 160, height = top + size + 60;
    auto px = [&](double x) { return fmt("%.2f", left + x * size); };
    auto py = [&](double y) { return fmt("%.2f", top + (1.0 - y) * size); };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const auto& s : series) {
        o << "<!-- data series=\"" << escape(s.name) << "\"\nx,y\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << fmt("%.17g", s.x[i]) << ',' << fmt("%.17g", s.y[i]) << '\n';
        o << "-->\n";
    }
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        o << "<line x1=\"" << px(v) << "\" y1=\"" << py(0) << "\" x2=\"" << px(v) << "\" y2=\"" << fmt("%.2f", top + size + 5)
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << px(v) << "\" y=\"" << top + size + 18 << "\" text-anchor=\"middle\">" << fmt("%.1f", v)
          << "</text>\n";
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << px(0) << "\" y2=\"" << py(v)
          << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << left - 8 << "\" y=\"" << py(v) << "\" text-anchor=\"end\" dominant-baseline=\"middle\">"
          << fmt("%.1f", v) << "</text>\n";
    }
    o << "<text x=\"" << left + size / 2 << "\" y=\"" << top + size + 40 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << top + size / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
    if (diagonal) {
        o << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
          << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << px(s.x[i]) << ',' << py(s.y[i]);
        o << "\"/>\n";
        const double ly = top + 10 + 20.0 * static_cast<double>(k);
        o << "<line x1=\"" << left + size + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + size + 35 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + size + 40 << "\" y=\"" << ly << "\" dominant-baseline=\"middle\">"
          << escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string heatmap_svg(const std::string& title, const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& p) {
    const double left = 120, top = 50, cell = 90;
    const double n = static_cast<double>(names.size());
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + n * cell + 20 << "\" height=\""
      << top + n * cell + 50 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<!-- data p_values\nmodel";
    for (const auto& name : names) o << ',' << escape(name);
    o << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
        o << escape(names[i]);
        for (std::size_t j = 0; j < names.size(); ++j) o << ',' << (std::isnan(p[i][j]) ? "" : fmt("%.17g", p[i][j]));
        o << '\n';
    }
    o << "-->\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + n * cell / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double c = static_cast<double>(i);
        o << "<text x=\"" << left - 8 << "\" y=\"" << top + (c + 0.5) * cell
          << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << escape(names[i]) << "</text>\n";
        o << "<text x=\"" << left + (c + 0.5) * cell << "\" y=\"" << top + n * cell + 20 << "\" text-anchor=\"middle\">"
          << escape(names[i]) << "</text>\n";
        for (std::size_t j = 0; j < names.size(); ++j) {
            const double r = static_cast<double>(j);
            const double v = p[i][j];
            std::string fill = "#eeeeee";
            if (!std::isnan(v)) {
                // Shade saturates at p = 1e-10.
                const double s = std::clamp(-std::log10(std::max(v, 1e-300)) / 10.0, 0.0, 1.0);
                const int g = static_cast<int>(std::lround(255.0 * (1.0 - 0.8 * s)));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x%02xff", g, g);
                fill = buf;
            }
            o << "<rect x=\"" << left + r * cell << "\" y=\"" << top + c * cell << "\" width=\"" << cell
              << "\" height=\"" << cell << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
            if (!std::isnan(v)) {
                o << "<text x=\"" << left + (r + 0.5) * cell << "\" y=\"" << top + (c + 0.5) * cell
                  << "\" text-anchor=\"middle\" dominant-baseline=\"middle\">" << fmt("%.2e", v) << "</text>\n";
            }
        }
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace hypobench::cli
