#pragma once

// Minimal CSV reading/writing for the engine's fixed-header file contracts.
// Numbers are written in shortest round-trip form so that export followed by
// import reproduces every double bit for bit.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "trs/error.hpp"

namespace trs::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    // trim blanks
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Reads a file and checks that its header equals `expected` exactly.
inline Table read(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file", 1);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  t.header = split_line(line);
  if (t.header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw FormatError(path.string() + ": expected header '" + want + "'", 1);
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (fields.size() != expected.size())
      throw FormatError(path.string() + ": expected " + std::to_string(expected.size()) + " columns, got " +
                            std::to_string(fields.size()),
                        row);
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline double parse_double(const std::string& s, std::size_t row, std::string_view column) {
  double v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty())
    throw FormatError("non-numeric value '" + s + "' in column " + std::string(column), row);
  return v;
}

inline std::int64_t parse_int(const std::string& s, std::size_t row, std::string_view column) {
  std::int64_t v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw FormatError("non-integer value '" + s + "' in column " + std::string(column), row);
  return v;
}

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw InvalidInput("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << render(fields)), ...);
    out_ << '\n';
  }

 private:
  static std::string render(double v) { return format_double(v); }
  static std::string render(const std::string& s) { return s; }
  static std::string render(const char* s) { return s; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string render(I v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

}  // namespace trs::csv
