#include "egoscene/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace egoscene::csv {

FileLines read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  FileLines out;
  in.seekg(0, std::ios::end);
  out.buffer.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(out.buffer.data(), static_cast<std::streamsize>(out.buffer.size()));

  std::string_view rest(out.buffer);
  while (!rest.empty()) {
    std::size_t nl = rest.find('\n');
    std::string_view line = nl == std::string_view::npos ? rest : rest.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  // a trailing newline does not produce an empty last record
  if (!out.lines.empty() && out.lines.back().empty()) out.lines.pop_back();
  return out;
}

void split(std::string_view line, std::vector<std::string_view>& out, char delim) {
  out.clear();
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
}

void fail(const std::filesystem::path& path, std::size_t line_no,
          const std::string& what) {
  throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + what);
}

void Writer::sep() {
  if (row_open_) buf_ += ',';
  row_open_ = true;
}

void Writer::field(std::string_view s) {
  sep();
  buf_ += s;
}

void Writer::field(std::int64_t v) {
  sep();
  char tmp[24];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf_.append(tmp, ptr);
}

void Writer::field(std::uint64_t v) {
  sep();
  char tmp[24];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf_.append(tmp, ptr);
}

void Writer::field(float v) {
  sep();
  char tmp[64];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf_.append(tmp, ptr);
}

void Writer::field(double v) {
  sep();
  char tmp[64];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof tmp, v);
  buf_.append(tmp, ptr);
}

void Writer::end_row() {
  buf_ += '\n';
  row_open_ = false;
}

void Writer::save(const std::filesystem::path& path) const {
  write_file_atomic(path, buf_);
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw IoError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace egoscene::csv
