// CSV emission with %.17g numbers and no clock-dependent fields: identical
// inputs must produce byte-identical files.
#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "rdlab/config.hpp"

namespace rdlab {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path), cols_(header.size()) {
    if (!out_) throw config_error("csv: cannot open " + path + " for writing");
    if (header.empty()) throw config_error("csv: empty header");
    write_cells(header);
  }

  void row(std::initializer_list<double> values) {
    row(std::vector<double>(values));
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(detail::format_g17(v));
    row(cells);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_)
      throw config_error("csv: row width " + std::to_string(cells.size()) + " != header width " +
                         std::to_string(cols_));
    write_cells(cells);
  }

  void flush() { out_.flush(); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t cols_;
};

}  // namespace rdlab
