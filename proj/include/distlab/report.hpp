#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distlab/errors.hpp"

namespace distlab {

/// A CSV/JSON cell: either a number (formatted deterministically) or a label.
struct Cell {
    bool numeric{true};
    double num{0.0};
    std::string text;

    static Cell of(double v) {
        Cell c;
        c.numeric = true;
        c.num = v;
        return c;
    }
    static Cell of(std::string s) {
        Cell c;
        c.numeric = false;
        c.text = std::move(s);
        return c;
    }
};

/// Fixed numeric formatting shared by CSV and SVG output; %.12g keeps the
/// bytes identical across reruns without locale interference.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string format_cell(const Cell& c) { return c.numeric ? format_number(c.num) : c.text; }

struct Report {
    std::string experiment;
    std::uint64_t seed{0};
    double wall_clock_seconds{0.0};  // JSON only; never part of the CSV
    nlohmann::json config_echo;
    nlohmann::json summary;
    std::vector<std::string> notes;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    // chart shape for the SVG emitter
    std::string svg_x;
    std::vector<std::string> svg_y;
    std::string svg_group;  // optional: one polyline per distinct group value

    void add_row(std::vector<Cell> cells) {
        if (cells.size() != columns.size())
            throw DimensionMismatch("Report::add_row: cell count vs columns");
        rows.push_back(std::move(cells));
    }
};

/// Streams rows to disk as they are produced so partial runs stay inspectable.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw IoError("CsvWriter: cannot open " + path);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
        out_.flush();
    }

    void write_row(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_cell(cells[i]);
        }
        out_ << '\n';
        out_.flush();
        if (!out_) throw IoError("CsvWriter: write failed");
    }

private:
    std::ofstream out_;
};

inline std::string report_csv(const Report& r) {
    std::string s;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) s += ',';
        s += r.columns[i];
    }
    s += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) s += ',';
            s += format_cell(row[i]);
        }
        s += '\n';
    }
    return s;
}

inline nlohmann::json report_json(const Report& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& c : row) {
            if (c.numeric) {
                jr.push_back(c.num);
            } else {
                jr.push_back(c.text);
            }
        }
        rows.push_back(std::move(jr));
    }
    return {{"experiment", r.experiment}, {"seed", r.seed},
            {"wall_clock_seconds", r.wall_clock_seconds}, {"config", r.config_echo},
            {"summary", r.summary},       {"notes", r.notes},
            {"columns", r.columns},       {"rows", std::move(rows)}};
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

}  // namespace detail

/// Deterministic line chart: metric vs sweep variable, one polyline per
/// (y column, group value).
inline std::string report_svg(const Report& r) {
    constexpr double width = 640.0, height = 480.0;
    constexpr double ml = 70.0, mr = 160.0, mt = 30.0, mb = 50.0;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    std::size_t x_col = r.columns.size();
    std::size_t group_col = r.columns.size();
    std::vector<std::size_t> y_cols;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (r.columns[i] == r.svg_x) x_col = i;
        if (!r.svg_group.empty() && r.columns[i] == r.svg_group) group_col = i;
        for (const auto& y : r.svg_y) {
            if (r.columns[i] == y) y_cols.push_back(i);
        }
    }

    std::vector<detail::Series> series;
    if (x_col < r.columns.size()) {
        for (std::size_t yc : y_cols) {
            std::vector<std::string> groups;
            if (group_col < r.columns.size()) {
                for (const auto& row : r.rows) {
                    const std::string g = format_cell(row[group_col]);
                    bool seen = false;
                    for (const auto& existing : groups) seen = seen || existing == g;
                    if (!seen) groups.push_back(g);
                }
            } else {
                groups.emplace_back();
            }
            for (const auto& g : groups) {
                detail::Series s;
                s.label = r.columns[yc] + (g.empty() ? "" : " [" + g + "]");
                for (const auto& row : r.rows) {
                    if (!row[x_col].numeric || !row[yc].numeric) continue;
                    if (!g.empty() && format_cell(row[group_col]) != g) continue;
                    s.points.emplace_back(row[x_col].num, row[yc].num);
                }
                if (!s.points.empty()) series.push_back(std::move(s));
            }
        }
    }

    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [px, py] : s.points) {
            if (first) {
                x_lo = x_hi = px;
                y_lo = y_hi = py;
                first = false;
            } else {
                x_lo = std::min(x_lo, px);
                x_hi = std::max(x_hi, px);
                y_lo = std::min(y_lo, py);
                y_hi = std::max(y_hi, py);
            }
        }
    }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;

    auto sx = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * plot_w; };
    auto sy = [&](double v) { return mt + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h; };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">" +
           detail::xml_escape(r.experiment) + "</text>\n";
    // axes
    svg += "<line x1=\"" + format_number(ml) + "\" y1=\"" + format_number(mt + plot_h) +
           "\" x2=\"" + format_number(ml + plot_w) + "\" y2=\"" + format_number(mt + plot_h) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_number(ml) + "\" y1=\"" + format_number(mt) + "\" x2=\"" +
           format_number(ml) + "\" y2=\"" + format_number(mt + plot_h) +
           "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = x_lo + (x_hi - x_lo) * t / 4.0;
        const double fy = y_lo + (y_hi - y_lo) * t / 4.0;
        svg += "<text x=\"" + format_number(sx(fx)) + "\" y=\"" + format_number(mt + plot_h + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::xml_escape(format_number(fx)) + "</text>\n";
        svg += "<text x=\"" + format_number(ml - 6) + "\" y=\"" + format_number(sy(fy) + 3) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::xml_escape(format_number(fy)) + "</text>\n";
    }
    svg += "<text x=\"" + format_number(ml + plot_w / 2) + "\" y=\"" + format_number(height - 10) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           detail::xml_escape(r.svg_x) + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = palette[si % 8];
        std::string pts;
        for (const auto& [px, py] : series[si].points) {
            if (!pts.empty()) pts += ' ';
            pts += format_number(sx(px)) + "," + format_number(sy(py));
        }
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        const double ly = mt + 14.0 * static_cast<double>(si);
        svg += "<rect x=\"" + format_number(ml + plot_w + 8) + "\" y=\"" + format_number(ly) +
               "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + format_number(ml + plot_w + 22) + "\" y=\"" + format_number(ly + 9) +
               "\" font-family=\"sans-serif\" font-size=\"10\">" +
               detail::xml_escape(series[si].label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

enum class ReportFormat { csv, json, svg };

inline std::vector<std::string> emit_report(const Report& r,
                                            const std::vector<ReportFormat>& formats,
                                            const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("emit_report: cannot create " + out_dir + ": " + ec.message());

    auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("emit_report: cannot open " + path);
        out << content;
        if (!out) throw IoError("emit_report: write failed for " + path);
        return path;
    };

    std::vector<std::string> paths;
    for (ReportFormat f : formats) {
        switch (f) {
            case ReportFormat::csv:
                paths.push_back(write_file(r.experiment + ".csv", report_csv(r)));
                break;
            case ReportFormat::json:
                paths.push_back(write_file(r.experiment + ".json", report_json(r).dump(2) + "\n"));
                break;
            case ReportFormat::svg:
                paths.push_back(write_file(r.experiment + ".svg", report_svg(r)));
                break;
        }
    }
    return paths;
}

}  // namespace distlab
