#include "lcsim/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lcsim {

std::string format_double(double x) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

CsvWriter::CsvWriter(std::string path) : path_(std::move(path)) {}

void CsvWriter::comment(const std::string& line) {
  buffer_ += "# ";
  buffer_ += line;
  buffer_ += '\n';
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += cells[i];
  }
  buffer_ += '\n';
}

void CsvWriter::flush() {
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path_ + "' for writing");
  }
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out) {
    throw std::runtime_error("short write to '" + path_ + "'");
  }
  flushed_ = true;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double CsvTable::num(size_t row, int col) const {
  return std::strtod(cell(row, col).c_str(), nullptr);
}

const std::string& CsvTable::cell(size_t row, int col) const {
  return rows.at(row).at(static_cast<size_t>(col));
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.columns = std::move(cells);
      have_header = true;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace lcsim
