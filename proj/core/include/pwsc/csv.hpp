#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pwsc {

// 17 significant digits, enough for an exact double round trip.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Cells are written verbatim; use format_double for numbers.
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes text to path, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pwsc
