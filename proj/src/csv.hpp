#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harm::csv {

// Minimal RFC-4180-ish reader: comma separated, optional double quotes,
// CRLF tolerated. Enough for the score/prediction schemas.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  // Index of a named column or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  // Index of a required column; throws MissingColumn.
  std::size_t require(std::string_view name) const;

  // Next non-empty data row; false at EOF.
  bool next(std::vector<std::string>& fields);
  // 1-based data row number of the row last returned by next().
  std::size_t row_number() const { return row_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t row_ = 0;
};

std::vector<std::string> split_line(std::string_view line);
std::string quote(std::string_view field);
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);
// Shortest text that round-trips the double exactly.
std::string format_double(double value);

}  // namespace harm::csv
