#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "egoscene/rng.hpp"
#include "egoscene/tensor.hpp"
#include "egoscene/types.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("egoscene_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

template <typename T>
egoscene::nn::Tensor<T> random_tensor(std::vector<std::size_t> shape,
                                      egoscene::Rng& rng, double scale = 1.0) {
  egoscene::nn::Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<T>(rng.normal(0.0, scale));
  }
  return t;
}

// A labeled segment with every frame equal to `fill` except values[0],
// which encodes the class for quick separability.
inline egoscene::Segment make_segment(const std::string& pid,
                                      const std::string& shift,
                                      std::int64_t ts, egoscene::SceneLabel label,
                                      float fill = 0.0f, int frames = 500) {
  egoscene::Segment s;
  s.participant_id = pid;
  s.shift_id = shift;
  s.start_ts_ms = ts;
  s.label = label;
  s.matrix.assign(static_cast<std::size_t>(frames) * egoscene::kFeatureDim, fill);
  return s;
}

}  // namespace testutil
