#include "csv.hpp"

#include <charconv>
#include <fmt/format.h>

#include "harmctl/error.hpp"

namespace harm::csv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.emplace_back(trim(field));
  return out;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string format_double(double value) { return fmt::format("{}", value); }

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::string line;
  if (!std::getline(in_, line)) {
    throw Error(ErrorCode::MissingColumn, fmt::format("{}: missing header", path.string()));
  }
  // Strip a UTF-8 BOM if present.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  header_ = split_line(line);
}

std::optional<std::size_t> Reader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Reader::require(std::string_view name) const {
  if (auto idx = column(name)) return *idx;
  throw Error(ErrorCode::MissingColumn,
              fmt::format("{}: missing column '{}'", path_.string(), name));
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    if (trim(line).empty()) continue;
    ++row_;
    fields = split_line(line);
    if (fields.size() != header_.size()) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("{}: row {} has {} fields, header has {}", path_.string(), row_,
                              fields.size(), header_.size()));
    }
    return true;
  }
  return false;
}

}  // namespace harm::csv
