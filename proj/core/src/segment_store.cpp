#include "egoscene/segment_store.hpp"

#include <cstring>
#include <fstream>

#include "egoscene/csv.hpp"
#include "egoscene/errors.hpp"

namespace egoscene {

namespace {

constexpr char kMagic[4] = {'E', 'G', 'S', 'G'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

void write_segment_store(const std::filesystem::path& path,
                         const std::vector<Segment>& segments) {
  std::string out;
  out.append(kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint64_t>(out, segments.size());
  for (const Segment& s : segments) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.participant_id.size()));
    out += s.participant_id;
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.shift_id.size()));
    out += s.shift_id;
    put_le<std::int64_t>(out, s.start_ts_ms);
    put_le<std::int32_t>(out, s.label ? scene_index(*s.label) : -1);
    put_le<std::uint8_t>(out, s.fg_active ? 1 : 0);
    const std::uint32_t frames =
        static_cast<std::uint32_t>(s.matrix.size() / kFeatureDim);
    put_le<std::uint32_t>(out, frames);
    out.append(reinterpret_cast<const char*>(s.matrix.data()),
               s.matrix.size() * sizeof(float));
  }
  csv::write_file_atomic(path, out);
}

std::vector<Segment> read_segment_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open segment store " + path.string());
  std::string buf;
  in.seekg(0, std::ios::end);
  buf.resize(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));

  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > buf.size()) {
      throw ParseError("corrupt segment store (truncated): " + path.string());
    }
  };
  auto get = [&]<typename T>() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  };
  auto get_str = [&](std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  };

  need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw ParseError("not a segment store (bad magic): " + path.string());
  }
  pos += 4;
  const auto version = get.operator()<std::uint32_t>();
  if (version != kVersion) {
    throw ParseError("unsupported segment store version: " + path.string());
  }
  const auto count = get.operator()<std::uint64_t>();
  std::vector<Segment> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Segment s;
    s.participant_id = get_str(get.operator()<std::uint16_t>());
    s.shift_id = get_str(get.operator()<std::uint16_t>());
    s.start_ts_ms = get.operator()<std::int64_t>();
    const auto label = get.operator()<std::int32_t>();
    if (label >= 0) {
      if (label >= kNumScenes) {
        throw ParseError("corrupt segment store (bad label): " + path.string());
      }
      s.label = scene_from_index(label);
    }
    s.fg_active = get.operator()<std::uint8_t>() != 0;
    const auto frames = get.operator()<std::uint32_t>();
    const std::size_t n = static_cast<std::size_t>(frames) * kFeatureDim;
    need(n * sizeof(float));
    s.matrix.resize(n);
    std::memcpy(s.matrix.data(), buf.data() + pos, n * sizeof(float));
    pos += n * sizeof(float);
    out.push_back(std::move(s));
  }
  if (pos != buf.size()) {
    throw ParseError("corrupt segment store (trailing bytes): " + path.string());
  }
  return out;
}

}  // namespace egoscene
