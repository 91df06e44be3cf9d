#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace bmap::cli {

// Shortest round-trip text for a double; "nan", "inf" and "-inf" otherwise.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::size_t v);
  CsvWriter& cell(std::string_view v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
};

// Plain comma-separated files without quoting, as written by CsvWriter.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace bmap::cli
