#include "egoscene/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "egoscene/csv.hpp"

namespace egoscene {

namespace {

constexpr char kMagic[4] = {'E', 'G', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
  out.append(static_cast<const char*>(p), n);
}

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  // host is little-endian on every supported target; memcpy is the layout
  put_bytes(out, buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    in.seekg(0, std::ios::end);
    buf_.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  }

  void read(void* out, std::size_t n) {
    if (pos_ + n > buf_.size()) {
      throw ParseError("corrupt checkpoint (truncated): " + path_.string());
    }
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }

  template <typename T>
  T get() {
    T v;
    read(&v, sizeof(T));
    return v;
  }

  std::string get_string(std::size_t n) {
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::filesystem::path path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

void append_tensor_records(std::string& out,
                           const std::vector<nn::ParamRef<float>>& refs) {
  for (const auto& r : refs) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(r.name.size()));
    put_bytes(out, r.name.data(), r.name.size());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(r.value->rank()));
    for (std::size_t d = 0; d < r.value->rank(); ++d) {
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.value->dim(d)));
    }
    put_bytes(out, r.value->data(), r.value->size() * sizeof(float));
  }
}

}  // namespace

void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  std::string out;
  put_bytes(out, kMagic, 4);
  put_le<std::uint32_t>(out, kVersion);

  std::string spec_block;
  put_le<std::uint8_t>(spec_block, static_cast<std::uint8_t>(model.spec().kind));
  put_le<std::uint32_t>(spec_block, static_cast<std::uint32_t>(model.spec().input_dim));
  put_le<std::uint32_t>(spec_block, static_cast<std::uint32_t>(model.spec().num_classes));
  put_le<std::uint64_t>(spec_block, meta.seed);
  put_le<std::uint32_t>(spec_block, meta.epoch);
  put_le<float>(spec_block, meta.val_loss);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec_block.size()));
  out += spec_block;

  auto params = model.params();
  auto state = model.state_tensors();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + state.size()));
  append_tensor_records(out, params);
  append_tensor_records(out, state);

  csv::write_file_atomic(path, out);
}

Model<float> load_checkpoint(const std::filesystem::path& path,
                             CheckpointMeta* meta,
                             std::optional<ModelKind> expected_kind) {
  Reader in(path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("not a checkpoint (bad magic): " + path.string());
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version) +
                     ": " + path.string());
  }
  const auto spec_len = in.get<std::uint32_t>();
  if (spec_len != 1 + 4 + 4 + 8 + 4 + 4) {
    throw ParseError("corrupt checkpoint (bad spec block): " + path.string());
  }
  const auto kind_raw = in.get<std::uint8_t>();
  if (kind_raw > 2) {
    throw ParseError("corrupt checkpoint (unknown model kind): " + path.string());
  }
  ModelSpec spec;
  spec.kind = static_cast<ModelKind>(kind_raw);
  spec.input_dim = static_cast<int>(in.get<std::uint32_t>());
  spec.num_classes = static_cast<int>(in.get<std::uint32_t>());
  CheckpointMeta m;
  m.seed = in.get<std::uint64_t>();
  m.epoch = in.get<std::uint32_t>();
  m.val_loss = in.get<float>();
  if (meta) *meta = m;

  if (expected_kind && *expected_kind != spec.kind) {
    throw ParseError("checkpoint holds a " +
                     std::string(model_kind_name(spec.kind)) + " model, not " +
                     std::string(model_kind_name(*expected_kind)) + ": " +
                     path.string());
  }

  Rng init_rng(0);
  Model<float> model(spec, init_rng);
  auto params = model.params();
  auto state = model.state_tensors();
  std::vector<nn::ParamRef<float>> all;
  all.insert(all.end(), params.begin(), params.end());
  all.insert(all.end(), state.begin(), state.end());

  const auto count = in.get<std::uint32_t>();
  if (count != all.size()) {
    throw ParseError("checkpoint tensor count " + std::to_string(count) +
                     " does not match " + std::string(model_kind_name(spec.kind)) +
                     " (" + std::to_string(all.size()) + "): " + path.string());
  }
  for (auto& ref : all) {
    const auto name_len = in.get<std::uint16_t>();
    const std::string name = in.get_string(name_len);
    if (name != ref.name) {
      throw ParseError("checkpoint tensor '" + name + "' where '" + ref.name +
                       "' expected: " + path.string());
    }
    const auto rank = in.get<std::uint8_t>();
    if (rank != ref.value->rank()) {
      throw ParseError("checkpoint tensor '" + name + "' has rank " +
                       std::to_string(rank) + ": " + path.string());
    }
    std::size_t total = 1;
    for (std::size_t d = 0; d < rank; ++d) {
      const auto dim = in.get<std::uint32_t>();
      if (dim != ref.value->dim(d)) {
        throw ParseError("checkpoint tensor '" + name + "' shape mismatch: " +
                         path.string());
      }
      total *= dim;
    }
    in.read(ref.value->data(), total * sizeof(float));
  }
  if (!in.at_end()) {
    throw ParseError("corrupt checkpoint (trailing bytes): " + path.string());
  }
  model.mark_bn_stats_loaded();
  return model;
}

}  // namespace egoscene
