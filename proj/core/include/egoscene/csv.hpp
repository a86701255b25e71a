#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "egoscene/errors.hpp"

namespace egoscene::csv {

// Whole file in memory; `lines` are views into `buffer`. LF line endings,
// a trailing CR per line is tolerated and stripped.
struct FileLines {
  std::string buffer;
  std::vector<std::string_view> lines;
};

FileLines read_lines(const std::filesystem::path& path);

void split(std::string_view line, std::vector<std::string_view>& out,
           char delim = ',');

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& what);

inline double parse_double(std::string_view field,
                           const std::filesystem::path& path,
                           std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(path, line_no, "bad number '" + std::string(field) + "'");
  }
  return v;
}

inline float parse_float(std::string_view field,
                         const std::filesystem::path& path,
                         std::size_t line_no) {
  float v = 0.0f;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(path, line_no, "bad number '" + std::string(field) + "'");
  }
  return v;
}

inline std::int64_t parse_i64(std::string_view field,
                              const std::filesystem::path& path,
                              std::size_t line_no) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(path, line_no, "bad integer '" + std::string(field) + "'");
  }
  return v;
}

// Output buffer with shortest-round-trip float formatting; keeps report
// writing deterministic and exact.
class Writer {
 public:
  void field(std::string_view s);
  void field(std::int64_t v);
  void field(std::uint64_t v);
  void field(float v);
  void field(double v);
  void end_row();
  void raw(std::string_view s) { buf_ += s; }

  const std::string& str() const { return buf_; }
  // Writes atomically: temp file + rename.
  void save(const std::filesystem::path& path) const;

 private:
  void sep();
  std::string buf_;
  bool row_open_ = false;
};

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

}  // namespace egoscene::csv
