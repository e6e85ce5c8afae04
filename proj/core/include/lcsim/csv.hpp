#pragma once

#include <string>
#include <vector>

namespace lcsim {

// Shortest decimal form that round-trips the double exactly.
std::string format_double(double x);

// Minimal CSV with '#'-prefixed comment header lines. Every run artifact
// uses this: comments carry the manifest fingerprint plus a one-line
// summary per arm, the first non-comment line is the column header.
class CsvWriter {
 public:
  explicit CsvWriter(std::string path);

  void comment(const std::string& line);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  // Writes the accumulated bytes; throws std::runtime_error on I/O failure.
  void flush();

  const std::string& buffer() const { return buffer_; }

 private:
  std::string path_;
  std::string buffer_;
  bool flushed_ = false;
};

struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  double num(size_t row, int col) const;
  const std::string& cell(size_t row, int col) const;
};

// Reads a CSV written by CsvWriter.
CsvTable read_csv(const std::string& path);

}  // namespace lcsim
