#include "qwalk/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

#include "qwalk/error.hpp"
#include "qwalk/numeric_format.hpp"

namespace qwalk {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::size_t parse_index(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw InvalidArgument("not a non-negative integer: '" + std::string(text) +
                          "'");
  }
  return value;
}

// Reads lines, stripping a trailing '\r'; checks the header on line 1.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source, std::string_view header)
      : in_(in), source_(std::move(source)) {
    std::string line;
    if (!next(line) || line != header) {
      fail("expected header '" + std::string(header) + "'");
    }
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument(source_ + ":" + std::to_string(line_no_) + ": " +
                          what);
  }

  std::vector<std::string_view> fields(std::string_view line,
                                       std::size_t expected) const {
    auto f = split_fields(line);
    if (f.size() != expected) {
      fail("expected " + std::to_string(expected) + " fields, found " +
           std::to_string(f.size()));
    }
    return f;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

struct Cell {
  std::size_t row;
  std::size_t col;
  double value;
};

GridRecord assemble(double z, const std::vector<Cell>& cells,
                    const CsvReader& reader) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const Cell& c : cells) {
    rows = std::max(rows, c.row + 1);
    cols = std::max(cols, c.col + 1);
  }
  if (cells.size() != rows * cols) {
    reader.fail("grid at z = " + format_double(z) + " has " +
                std::to_string(cells.size()) + " cells for a " +
                std::to_string(rows) + "x" + std::to_string(cols) + " shape");
  }
  std::vector<double> values(rows * cols, 0.0);
  std::vector<bool> seen(rows * cols, false);
  for (const Cell& c : cells) {
    const std::size_t k = c.row * cols + c.col;
    if (seen[k]) {
      reader.fail("duplicate cell (" + std::to_string(c.row) + ", " +
                  std::to_string(c.col) + ")");
    }
    seen[k] = true;
    values[k] = c.value;
  }
  return {z, ProbabilityGrid({rows, cols}, std::move(values))};
}

}  // namespace

void write_grid_csv(std::ostream& out, double z, const ProbabilityGrid& grid) {
  out << "z,row,col,probability\n";
  const std::string zs = format_double(z);
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      out << zs << ',' << r << ',' << c << ','
          << format_double(grid[r * grid.cols() + c]) << '\n';
    }
  }
}

std::vector<GridRecord> read_grid_csv(std::istream& in,
                                      const std::string& source) {
  CsvReader reader(in, source, "z,row,col,probability");
  std::vector<GridRecord> out;
  std::vector<Cell> cells;
  double current_z = 0.0;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.fields(line, 4);
    double z = 0.0;
    Cell cell{};
    try {
      z = parse_double(f[0]);
      cell = {parse_index(f[1]), parse_index(f[2]), parse_double(f[3])};
    } catch (const InvalidArgument& e) {
      reader.fail(e.what());
    }
    if (!cells.empty() && z != current_z) {
      out.push_back(assemble(current_z, cells, reader));
      cells.clear();
    }
    current_z = z;
    cells.push_back(cell);
  }
  if (!cells.empty()) out.push_back(assemble(current_z, cells, reader));
  if (out.empty()) reader.fail("no grid rows");
  return out;
}

void write_series_csv(std::ostream& out, const ObservableSeries& series) {
  out << "z,value\n";
  for (std::size_t k = 0; k < series.values.size(); ++k) {
    out << format_double(series.z_values[k]) << ','
        << format_double(series.values[k]) << '\n';
  }
}

ObservableSeries read_series_csv(std::istream& in, const std::string& source) {
  CsvReader reader(in, source, "z,value");
  ObservableSeries out;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.fields(line, 2);
    try {
      out.z_values.push_back(parse_double(f[0]));
      out.values.push_back(parse_double(f[1]));
    } catch (const InvalidArgument& e) {
      reader.fail(e.what());
    }
  }
  return out;
}

void write_projections_csv(std::ostream& out, double z, const Projections& p) {
  out << "z,axis,index,value\n";
  const std::string zs = format_double(z);
  for (std::size_t c = 0; c < p.x_profile.size(); ++c) {
    out << zs << ",x," << c << ',' << format_double(p.x_profile[c]) << '\n';
  }
  for (std::size_t r = 0; r < p.y_profile.size(); ++r) {
    out << zs << ",y," << r << ',' << format_double(p.y_profile[r]) << '\n';
  }
}

}  // namespace qwalk
