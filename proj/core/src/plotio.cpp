// Plot-data emission: whitespace data files (gnuplot-style blocks per
// series) and a minimal static SVG line/scatter rendering with axes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "geolab/harness.hpp"

namespace geolab::harness {

namespace fs = std::filesystem;

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table parse_table(const std::string& csv) {
    Table table;
    std::istringstream in(csv);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            table.header = cells;
            first = false;
        } else {
            table.rows.push_back(cells);
        }
    }
    return table;
}

struct Series {
    std::string label;
    std::vector<double> xs, ys;
};

std::vector<Series> build_series(const Table& table, std::string& xlabel, std::string& ylabel) {
    if (table.header.size() < 2) throw DomainError("emit_plot_data: table needs >= 2 columns");
    std::vector<Series> series;
    if (table.header.size() == 2) {
        xlabel = table.header[0];
        ylabel = table.header[1];
        Series s;
        s.label = ylabel;
        for (const auto& row : table.rows) {
            s.xs.push_back(std::stod(row.at(0)));
            s.ys.push_back(std::stod(row.at(1)));
        }
        series.push_back(std::move(s));
    } else {
        // First column groups the series, second is x, third is y.
        xlabel = table.header[1];
        ylabel = table.header[2];
        std::map<std::string, Series> by_group;
        std::vector<std::string> order;
        for (const auto& row : table.rows) {
            const std::string& g = row.at(0);
            if (!by_group.count(g)) {
                by_group[g].label = table.header[0] + "=" + g;
                order.push_back(g);
            }
            by_group[g].xs.push_back(std::stod(row.at(1)));
            by_group[g].ys.push_back(std::stod(row.at(2)));
        }
        for (const auto& g : order) series.push_back(by_group[g]);
    }
    return series;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_tick(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void write_svg(const std::string& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series) {
    constexpr int W = 640, H = 480, ML = 70, MR = 20, MT = 40, MB = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double x : s.xs) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
        for (double y : s.ys) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;
    const auto px = [&](double x) {
        return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    };
    const auto py = [&](double y) {
        return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
    };

    std::ofstream out(path);
    if (!out) throw IngestionError("emit_plot_data: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << title << "</text>\n";
    // axes
    out << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
        << H - MB << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double x = xmin + (xmax - xmin) * i / 5.0;
        const double y = ymin + (ymax - ymin) * i / 5.0;
        out << "<line x1=\"" << fmt_tick(px(x)) << "\" y1=\"" << H - MB << "\" x2=\""
            << fmt_tick(px(x)) << "\" y2=\"" << H - MB + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt_tick(px(x)) << "\" y=\"" << H - MB + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_tick(x) << "</text>\n";
        out << "<line x1=\"" << ML - 5 << "\" y1=\"" << fmt_tick(py(y)) << "\" x2=\"" << ML
            << "\" y2=\"" << fmt_tick(py(y)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ML - 8 << "\" y=\"" << fmt_tick(py(y) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_tick(y) << "</text>\n";
    }
    out << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n";
    out << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
        << (MT + H - MB) / 2 << ")\">" << ylabel << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
        if (series[s].xs.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < series[s].xs.size(); ++i)
                out << fmt_tick(px(series[s].xs[i])) << "," << fmt_tick(py(series[s].ys[i])) << " ";
            out << "\"/>\n";
        }
        for (std::size_t i = 0; i < series[s].xs.size(); ++i)
            out << "<circle cx=\"" << fmt_tick(px(series[s].xs[i])) << "\" cy=\""
                << fmt_tick(py(series[s].ys[i])) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << W - MR - 8 << "\" y=\"" << MT + 16 * (s + 1)
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">"
            << series[s].label << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace

std::vector<std::string> emit_plot_data(const ExperimentResult& result,
                                        const std::string& table) {
    auto it = result.tables.find(table);
    if (it == result.tables.end()) {
        std::string msg = "emit_plot_data: no table named '" + table + "'. Tables:";
        for (const auto& [name, csv] : result.tables) msg += " " + name;
        throw DomainError(msg);
    }
    const Table parsed = parse_table(it->second);
    if (parsed.rows.empty()) throw DomainError("emit_plot_data: table '" + table + "' is empty");

    std::string xlabel, ylabel;
    const auto series = build_series(parsed, xlabel, ylabel);

    const fs::path dir = result.output_root.empty()
                             ? fs::path("plots")
                             : fs::path(result.output_root) / "plots";
    fs::create_directories(dir);

    const fs::path dat_path = dir / (table + ".dat");
    {
        std::ofstream out(dat_path);
        if (!out) throw IngestionError("emit_plot_data: cannot write " + dat_path.string());
        out << "# " << xlabel << " " << ylabel << "\n";
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (series.size() > 1) out << "# series: " << series[s].label << "\n";
            for (std::size_t i = 0; i < series[s].xs.size(); ++i)
                out << fmt(series[s].xs[i]) << " " << fmt(series[s].ys[i]) << "\n";
            if (s + 1 < series.size()) out << "\n";
        }
    }
    const fs::path svg_path = dir / (table + ".svg");
    write_svg(svg_path.string(), result.experiment + ": " + table, xlabel, ylabel, series);
    return {dat_path.string(), svg_path.string()};
}

}  // namespace geolab::harness
