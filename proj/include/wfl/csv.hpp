#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wfl {

/// 17 significant digits, locale-independent; NaN as "nan", infinities as "inf"/"-inf".
std::string format_number(double value);

/// Comma-separated rows with a fixed header. Rows are buffered and written
/// in one pass by `save`, so a file has exactly one writer.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }

  /// Throws std::invalid_argument if the cell count differs from the header.
  void add_row(std::vector<std::string> cells);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace wfl
