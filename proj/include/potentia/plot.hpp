#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace potentia {

/// A report CSV read back as text cells.
struct CsvTable {
    std::vector<std::string> comments;  // lines starting with '#', without the marker
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    }
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_cell(const std::string& s) {
    if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        return used == s.size() ? v : std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

inline CsvTable read_csv_table(std::istream& in) {
    CsvTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
            continue;
        }
        auto cells = detail::split_csv(line);
        if (t.header.empty()) t.header = std::move(cells);
        else t.rows.push_back(std::move(cells));
    }
    return t;
}

struct Curve {
    std::string label, column;
    std::vector<std::pair<double, double>> points;  // (x, ratio), sorted by x
};

/// Ratio curves of a report: one per (label, ratio column) with at least two
/// points that can be drawn on a log-x axis.
inline std::vector<Curve> ratio_curves(const CsvTable& t) {
    std::vector<Curve> out;
    const int lc = t.column("label"), xc = t.column("x");
    if (lc < 0 || xc < 0) return out;
    for (const std::string col : {"ratio_solver", "ratio_mc"}) {
        const int rc = t.column(col);
        if (rc < 0) continue;
        std::map<std::string, Curve> by_label;
        std::vector<std::string> order;
        for (const auto& r : t.rows) {
            if (static_cast<int>(r.size()) <= std::max({lc, xc, rc})) continue;
            const double x = detail::parse_cell(r[xc]), y = detail::parse_cell(r[rc]);
            if (!(x > 0) || !std::isfinite(x) || !std::isfinite(y)) continue;
            auto [it, fresh] = by_label.try_emplace(r[lc]);
            if (fresh) {
                order.push_back(r[lc]);
                it->second.label = r[lc];
                it->second.column = col;
            }
            it->second.points.emplace_back(x, y);
        }
        for (const auto& l : order) {
            Curve c = by_label[l];
            std::stable_sort(c.points.begin(), c.points.end());
            if (c.points.size() >= 2) out.push_back(std::move(c));
        }
    }
    return out;
}

/// Self-contained SVG of one ratio curve on a log-x axis with the reference
/// line at 1.
inline std::string render_svg(const Curve& c, const std::string& title) {
    using detail::fmt_short;
    const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = c.points.front().first, x1 = c.points.back().first;
    double y0 = 1, y1 = 1;
    for (auto [x, y] : c.points) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    double lx0 = std::floor(std::log10(x0)), lx1 = std::ceil(std::log10(x1));
    if (lx1 <= lx0) lx1 = lx0 + 1;
    const double pad = 0.1 * std::max(y1 - y0, 1e-3);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    auto num = [](double v) { return fmt_short(v, 6); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (double e = lx0; e <= lx1 + 1e-9; e += 1) {
        const double x = px(std::pow(10.0, e));
        s << "<line x1=\"" << num(x) << "\" y1=\"" << H - B << "\" x2=\"" << num(x) << "\" y2=\"" << H - B + 5
          << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << num(x) << "\" y=\"" << H - B + 20 << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double y = y0 + (y1 - y0) * k / 4.0;
        s << "<text x=\"" << L - 8 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
    }
    s << "<line x1=\"" << L << "\" y1=\"" << num(py(1)) << "\" x2=\"" << W - R << "\" y2=\"" << num(py(1))
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.points.size(); ++i)
        s << (i ? " " : "") << num(px(c.points[i].first)) << ',' << num(py(c.points[i].second));
    s << "\"/>\n";
    for (auto [x, y] : c.points)
        s << "<circle class=\"marker\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"3.5\" fill=\"steelblue\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">x (log scale)</text>\n";
    s << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">"
      << c.column << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

inline std::string plot_file_name(const std::string& stem, const Curve& c) {
    std::string l = c.label;
    for (char& ch : l)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
    return stem + "__" + l + "__" + c.column + ".svg";
}

/// Writes one SVG per ratio curve into `dir`; returns the paths written.
inline std::vector<std::string> write_plots(const CsvTable& t, const std::string& dir, const std::string& stem) {
    std::vector<std::string> out;
    for (const auto& c : ratio_curves(t)) {
        const auto path = (std::filesystem::path(dir) / plot_file_name(stem, c)).string();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write plot '" + path + "'");
        f << render_svg(c, stem + ": " + c.label + " " + c.column);
        out.push_back(path);
    }
    return out;
}

}  // namespace potentia
