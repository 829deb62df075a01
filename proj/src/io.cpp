// Copyright 2026 The orthospinn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "orthospinn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

namespace {

std::ofstream open_or_throw(const std::string &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write '{}'", path));
    }
    return out;
}

// RFC 4180 style: cells holding a comma or quote are quoted, quotes doubled.
std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(std::move(cell));
    return out;
}

std::string quote_cell(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '\n' ? ' ' : c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + '"';
}

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

// Piecewise-linear approximation of a perceptual blue-green-yellow map.
std::string colour(double t) {
    static constexpr std::array<std::array<double, 3>, 5> kStops = {{
        {68, 1, 84},
        {59, 82, 139},
        {33, 145, 140},
        {94, 201, 98},
        {253, 231, 37},
    }};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (kStops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
    const double f = t - static_cast<double>(i);
    std::array<int, 3> rgb{};
    for (int c = 0; c < 3; ++c) {
        rgb[c] = static_cast<int>(std::lround(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c])));
    }
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

constexpr std::array<const char *, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Frame {
    double left = 70, top = 40, width = 460, height = 320;
};

std::string svg_open(double w, double h) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        w, h);
}

std::string axis_labels(const Frame &f, const std::string &title, const std::string &xl, const std::string &yl) {
    std::string s;
    s += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     f.left + f.width / 2, escape(title));
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", f.left + f.width / 2,
                     f.top + f.height + 36, escape(xl));
    s += fmt::format("<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                     f.top + f.height / 2, escape(yl));
    return s;
}

std::string ticks(const Frame &f, double x0, double x1, double y0, double y1, bool log_y) {
    std::string s;
    for (int k = 0; k <= 4; ++k) {
        const double fx = k / 4.0;
        const double px = f.left + fx * f.width;
        const double py = f.top + f.height - fx * f.height;
        const double yv = log_y ? std::pow(10.0, y0 + fx * (y1 - y0)) : y0 + fx * (y1 - y0);
        s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", px,
                         f.top + f.height, f.top + f.height + 4);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px, f.top + f.height + 18,
                         x0 + fx * (x1 - x0));
        s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", f.left - 4, py,
                         f.left);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n", f.left - 6, py + 4, yv);
    }
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", f.left,
                     f.top, f.width, f.height);
    return s;
}

}  // namespace

CsvWriter::CsvWriter(const std::string &path, std::vector<std::string> columns)
    : out_(open_or_throw(path)), width_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out_ << (i ? "," : "") << quote_cell(columns[i]);
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double> &values) { row_text({}, values); }

void CsvWriter::row_text(const std::vector<std::string> &labels, const std::vector<double> &values) {
    if (labels.size() + values.size() != width_) {
        throw std::invalid_argument(
            fmt::format("CsvWriter: row has {} cells, header has {}", labels.size() + values.size(), width_));
    }
    bool first = true;
    for (const auto &l : labels) {
        out_ << (first ? "" : ",") << quote_cell(l);
        first = false;
    }
    for (double v : values) {
        out_ << (first ? "" : ",") << fmt::format("{:.17g}", v);
        first = false;
    }
    out_ << '\n';
}

std::size_t CsvTable::column(const std::string &name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        throw std::out_of_range(fmt::format("csv: no column '{}'", name));
    }
    return static_cast<std::size_t>(it - columns.begin());
}

double CsvTable::number(std::size_t row, const std::string &name) const {
    const std::string &cell = rows.at(row).at(column(name));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        // from_chars rejects "inf"/"nan" spellings produced by fmt
        if (cell == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (cell == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (cell == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        throw std::runtime_error(fmt::format("csv: '{}' is not a number", cell));
    }
    return v;
}

CsvTable read_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read '{}'", path));
    }
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(fmt::format("csv '{}': missing header", path));
    }
    t.columns = split_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != t.columns.size()) {
            throw std::runtime_error(fmt::format("csv '{}': line {} has {} cells, expected {}", path, line_no,
                                                 cells.size(), t.columns.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_heatmap_svg(const std::string &path, const std::string &title, const Eigen::VectorXd &x,
                       const Eigen::VectorXd &y, const Eigen::MatrixXd &values, const std::string &x_label,
                       const std::string &y_label) {
    if (values.rows() != x.size() || values.cols() != y.size() || x.size() < 2 || y.size() < 2) {
        throw std::invalid_argument("write_heatmap_svg: values must be x.size() by y.size(), both at least 2");
    }
    const Frame f;
    const double vmin = values.minCoeff();
    const double vmax = values.maxCoeff();
    const double span = vmax > vmin ? vmax - vmin : 1.0;
    std::string s = svg_open(f.left + f.width + 110, f.top + f.height + 50);
    s += axis_labels(f, title, x_label, y_label);
    const double cw = f.width / static_cast<double>(x.size());
    const double ch = f.height / static_cast<double>(y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        for (Eigen::Index j = 0; j < y.size(); ++j) {
            s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                             f.left + i * cw, f.top + f.height - (j + 1) * ch, cw + 0.3, ch + 0.3,
                             colour((values(i, j) - vmin) / span));
        }
    }
    s += ticks(f, x[0], x[x.size() - 1], y[0], y[y.size() - 1], false);
    const double bx = f.left + f.width + 20;
    for (int k = 0; k < 64; ++k) {
        s += fmt::format("<rect x=\"{}\" y=\"{:.2f}\" width=\"16\" height=\"{:.2f}\" fill=\"{}\"/>\n", bx,
                         f.top + f.height - (k + 1) * f.height / 64.0, f.height / 64.0 + 0.3, colour(k / 63.0));
    }
    s += fmt::format("<text x=\"{}\" y=\"{}\">{:.3g}</text>\n", bx + 20, f.top + 10, vmax);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{:.3g}</text>\n", bx + 20, f.top + f.height, vmin);
    s += "</svg>\n";
    auto out = open_or_throw(path);
    out << s;
}

void write_line_plot_svg(const std::string &path, const std::string &title, const std::vector<PlotSeries> &series,
                         const std::string &x_label, const std::string &y_label, bool log_y) {
    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
    for (const auto &p : series) {
        if (p.x.size() != p.y.size()) {
            throw std::invalid_argument(fmt::format("write_line_plot_svg: series '{}' has mismatched lengths", p.name));
        }
        for (std::size_t i = 0; i < p.x.size(); ++i) {
            if ((log_y && !(p.y[i] > 0.0)) || !std::isfinite(p.y[i])) {
                continue;
            }
            x0 = std::min(x0, p.x[i]);
            x1 = std::max(x1, p.x[i]);
            y0 = std::min(y0, ty(p.y[i]));
            y1 = std::max(y1, ty(p.y[i]));
        }
    }
    if (!(x1 >= x0)) {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if (x1 == x0) {
        x1 = x0 + 1.0;
    }
    if (y1 == y0) {
        y1 = y0 + 1.0;
    }
    const Frame f;
    std::string s = svg_open(f.left + f.width + 150, f.top + f.height + 50);
    s += axis_labels(f, title, x_label, y_label);
    s += ticks(f, x0, x1, y0, y1, log_y);
    auto px = [&](double v) { return f.left + (v - x0) / (x1 - x0) * f.width; };
    auto py = [&](double v) { return f.top + f.height - (ty(v) - y0) / (y1 - y0) * f.height; };
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &p = series[k];
        const char *c = kPalette[k % kPalette.size()];
        std::string pts;
        for (std::size_t i = 0; i < p.x.size(); ++i) {
            if ((log_y && !(p.y[i] > 0.0)) || !std::isfinite(p.y[i])) {
                continue;
            }
            if (p.markers) {
                s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"1.5\" fill=\"{}\"/>\n", px(p.x[i]),
                                 py(p.y[i]), c);
            } else {
                pts += fmt::format("{:.2f},{:.2f} ", px(p.x[i]), py(p.y[i]));
            }
        }
        if (!p.markers && !pts.empty()) {
            s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", c, pts);
        }
        const double ly = f.top + 14 + 18 * static_cast<double>(k);
        s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"3\" fill=\"{}\"/>\n", f.left + f.width + 12,
                         ly - 4, c);
        s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", f.left + f.width + 30, ly, escape(p.name));
    }
    s += "</svg>\n";
    auto out = open_or_throw(path);
    out << s;
}

}  // namespace orthospinn
