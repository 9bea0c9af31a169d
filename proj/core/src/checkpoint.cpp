#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tseg/training.hpp"

namespace tseg {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'E', 'G'};
constexpr const char* kStageTensorName = "meta.stage";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
  put_u32(out, std::uint32_t(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, std::uint32_t(t.ndim()));
  for (int d : t.shape()) put_u32(out, std::uint32_t(d));
  for (float v : t.data()) put_f32(out, v);
}

struct Reader {
  const std::uint8_t* p;
  std::size_t size;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > size) fail(ErrorCode::checkpoint_corrupt, "checkpoint: unexpected end of file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = std::uint32_t(p[pos]) | std::uint32_t(p[pos + 1]) << 8 |
                      std::uint32_t(p[pos + 2]) << 16 | std::uint32_t(p[pos + 3]) << 24;
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[pos + std::size_t(i)]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p + pos), n);
    pos += n;
    return s;
  }
};

std::vector<std::pair<std::string, TensorPtr>> model_manifest(const SegModel& model) {
  std::vector<std::pair<std::string, TensorPtr>> out;
  ParamSet params = model.params();
  for (const auto& entry : params.entries()) out.emplace_back(entry.name, entry.tensor);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const SegModel& model, int stage,
                     const std::array<std::uint64_t, 4>& rng_state) {
  require(stage >= 1 && stage <= 3, ErrorCode::precondition,
          "checkpoint: stage must be 1, 2 or 3");
  const auto manifest = model_manifest(model);

  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  put_u32(bytes, kCheckpointVersion);
  put_u32(bytes, std::uint32_t(manifest.size() + 1));

  auto stage_tensor = Tensor::from_data({1}, {float(stage)});
  put_tensor(bytes, kStageTensorName, *stage_tensor);
  for (const auto& [name, tensor] : manifest) put_tensor(bytes, name, *tensor);
  for (std::uint64_t w : rng_state) put_u64(bytes, w);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "checkpoint: cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(ErrorCode::io, "checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "checkpoint: cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  Reader r{bytes.data(), bytes.size()};

  const std::string magic = r.str(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    fail(ErrorCode::checkpoint_corrupt, "checkpoint: bad magic in " + path);
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    fail(ErrorCode::checkpoint_version, "checkpoint: unsupported format version in " + path);
  }
  const std::uint32_t count = r.u32();
  if (count < 1 || count > 1u << 20) {
    fail(ErrorCode::checkpoint_corrupt, "checkpoint: implausible tensor count in " + path);
  }

  bool have_stage = false;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    if (name_len == 0 || name_len > 4096) {
      fail(ErrorCode::checkpoint_corrupt, "checkpoint: implausible tensor name in " + path);
    }
    const std::string name = r.str(name_len);
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 8) {
      fail(ErrorCode::checkpoint_corrupt, "checkpoint: implausible tensor rank in " + path);
    }
    Shape shape;
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const std::uint32_t extent = r.u32();
      if (extent == 0 || extent > 1u << 28) {
        fail(ErrorCode::checkpoint_corrupt, "checkpoint: implausible tensor extent in " + path);
      }
      shape.push_back(int(extent));
      numel *= extent;
    }
    if (numel > (std::int64_t(1) << 31)) {
      fail(ErrorCode::checkpoint_corrupt, "checkpoint: implausible tensor size in " + path);
    }
    std::vector<float> data(static_cast<std::size_t>(numel), 0.0f);
    for (auto& v : data) v = r.f32();

    if (name == kStageTensorName) {
      if (have_stage || i != 0 || numel != 1) {
        fail(ErrorCode::checkpoint_corrupt, "checkpoint: malformed stage record in " + path);
      }
      ckpt.stage = int(data[0]);
      if (ckpt.stage < 1 || ckpt.stage > 3 || float(ckpt.stage) != data[0]) {
        fail(ErrorCode::checkpoint_corrupt, "checkpoint: invalid stage value in " + path);
      }
      have_stage = true;
      continue;
    }
    ckpt.tensors.emplace_back(name, Tensor::from_data(std::move(shape), std::move(data)));
  }
  if (!have_stage) {
    fail(ErrorCode::checkpoint_corrupt, "checkpoint: missing stage record in " + path);
  }
  for (auto& w : ckpt.rng_state) w = r.u64();
  if (r.pos != bytes.size()) {
    fail(ErrorCode::checkpoint_corrupt, "checkpoint: trailing bytes in " + path);
  }
  return ckpt;
}

void apply_checkpoint(SegModel& model, const Checkpoint& checkpoint) {
  const auto manifest = model_manifest(model);
  if (checkpoint.tensors.size() != manifest.size()) {
    fail(ErrorCode::checkpoint_shape, "checkpoint: tensor count does not match model");
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& [name, loaded] = checkpoint.tensors[i];
    const auto& [want_name, target] = manifest[i];
    if (name != want_name) {
      fail(ErrorCode::checkpoint_shape,
           "checkpoint: tensor '" + name + "' where '" + want_name + "' was expected");
    }
    if (loaded->shape() != target->shape()) {
      fail(ErrorCode::checkpoint_shape,
           "checkpoint: shape mismatch for '" + name + "': file " +
               shape_string(loaded->shape()) + " vs model " + shape_string(target->shape()));
    }
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    manifest[i].second->data() = checkpoint.tensors[i].second->data();
    manifest[i].second->drop_grad();
  }
}

}  // namespace tseg
