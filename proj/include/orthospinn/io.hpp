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

// CSV tables and static SVG plots.

#pragma once

#include <Eigen/Dense>

#include <fstream>
#include <string>
#include <vector>

namespace orthospinn {

/// Writes a header line then rows of numbers at full precision. Text cells
/// are allowed through row_text for label columns.
class CsvWriter {
  public:
    CsvWriter(const std::string &path, std::vector<std::string> columns);

    void row(const std::vector<double> &values);
    /// Mixed row: `labels` fill the leading columns, `values` the rest.
    void row_text(const std::vector<std::string> &labels, const std::vector<double> &values);

  private:
    std::ofstream out_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    /// Index of a column; throws std::out_of_range if absent.
    std::size_t column(const std::string &name) const;
    double number(std::size_t row, const std::string &name) const;
};

/// Parses a file written by CsvWriter. Throws std::runtime_error on a ragged row.
CsvTable read_csv(const std::string &path);

/// Heatmap of values(i, j) at (x[i], y[j]) with a colour bar.
void write_heatmap_svg(const std::string &path, const std::string &title, const Eigen::VectorXd &x,
                       const Eigen::VectorXd &y, const Eigen::MatrixXd &values, const std::string &x_label,
                       const std::string &y_label);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = false;  // scatter instead of a polyline
};

void write_line_plot_svg(const std::string &path, const std::string &title, const std::vector<PlotSeries> &series,
                         const std::string &x_label, const std::string &y_label, bool log_y = false);

}  // namespace orthospinn
