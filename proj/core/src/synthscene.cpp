#include "tseg/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "tseg/rng.hpp"

namespace fs = std::filesystem;

namespace tseg {

namespace {

constexpr std::array<std::array<int, 3>, 6> kBaseColor = {{
    {105, 105, 110},  // road
    {185, 183, 178},  // sidewalk
    {96, 152, 84},    // terrain
    {156, 118, 96},   // building
    {176, 52, 48},    // car
    {52, 70, 172},    // person
}};

constexpr int kTextureAmp = 18;  // high-frequency noise amplitude, bytes

// Band boundary rows (building/terrain, terrain/sidewalk, sidewalk/road) are
// drawn per sequence from wide non-overlapping uniform ranges. Inside the
// ranges absolute position does not determine a row's band, so classification
// has to rely on texture, which is exactly what flicker makes ambiguous within
// a single frame. Expected cumulative fractions are the range midpoints:
// 0.24, 0.51, 0.75. Boundaries snap to multiples of 4 so that band edges are
// representable at the networks' output stride.
constexpr double kBandLo[3] = {0.10, 0.42, 0.64};
constexpr double kBandHi[3] = {0.38, 0.60, 0.86};

struct SceneObject {
  std::uint8_t cls = kCar;
  int width = 0, height = 0;
  int y0 = 0;
  double x0 = 0.0, vx = 0.0;
  std::array<int, 3> color{};
  std::uint64_t key = 0;
};

struct SceneSetup {
  std::array<int, 3> bands{};  // boundary rows b1 <= b2 <= b3
  std::vector<SceneObject> objects;
  std::vector<std::uint8_t> car_over_person;  // [num_cars * num_persons]
  std::uint64_t seq_key = 0;
  std::uint64_t world_key = 0;
  int num_cars = 0;
};

int band_class(const SceneSetup& s, int y) {
  if (y < s.bands[0]) return kBuilding;
  if (y < s.bands[1]) return kTerrain;
  if (y < s.bands[2]) return kSidewalk;
  return kRoad;
}

std::uint8_t clamp_byte(long v) { return std::uint8_t(std::clamp(v, 0l, 255l)); }

double hash_normal(std::uint64_t h1, std::uint64_t h2) {
  const double u1 = (double(h1 >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = hash_unit(h2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

SceneSetup build_setup(const SceneSpec& spec, int sequence_index) {
  SceneSetup s;
  s.seq_key = hash_combine(spec.seed, 0x53455155ull, std::uint64_t(sequence_index));
  s.world_key = hash_combine(s.seq_key, 0x7EC5ull);
  s.num_cars = spec.num_cars;
  Rng rng(s.seq_key, /*stream=*/1);

  const int h = spec.height;
  int prev = 0;
  for (int i = 0; i < 3; ++i) {
    const double f = rng.uniform(kBandLo[i], kBandHi[i]);
    int b = 4 * int(std::lround(f * h / 4.0));
    b = std::clamp(b, prev + 4, h - 4 * (3 - i));
    s.bands[i] = b;
    prev = b;
  }

  auto draw_speed = [&rng, &spec]() {
    const double range = double(spec.object_speed_range);
    double mag;
    if (range <= 0.25) {
      mag = range * rng.next_double();
    } else {
      mag = 0.25 + rng.next_double() * (range - 0.25);
    }
    return rng.bernoulli(0.5) ? mag : -mag;
  };

  for (int i = 0; i < spec.num_cars; ++i) {
    SceneObject o;
    o.cls = kCar;
    o.width = kCarWidth;
    o.height = kCarHeight;
    const int road_h = spec.height - s.bands[2];
    o.y0 = s.bands[2] + rng.uniform_int(0, std::max(0, road_h - kCarHeight));
    o.x0 = rng.uniform(-double(o.width), double(spec.width));
    o.vx = draw_speed();
    for (int c = 0; c < 3; ++c) o.color[c] = kBaseColor[kCar][c] + rng.uniform_int(-36, 36);
    o.key = hash_combine(s.seq_key, 0x0B1Aull, std::uint64_t(i));
    s.objects.push_back(o);
  }
  for (int j = 0; j < spec.num_persons; ++j) {
    SceneObject o;
    o.cls = kPerson;
    o.width = kPersonWidth;
    o.height = kPersonHeight;
    const int lo = s.bands[1] - 2;
    const int hi = std::max(lo, s.bands[2] - kPersonHeight + 4);
    o.y0 = rng.uniform_int(lo, hi);
    o.x0 = rng.uniform(-double(o.width), double(spec.width));
    o.vx = draw_speed();
    for (int c = 0; c < 3; ++c) o.color[c] = kBaseColor[kPerson][c] + rng.uniform_int(-36, 36);
    o.key = hash_combine(s.seq_key, 0x0B1Aull, std::uint64_t(spec.num_cars + j));
    s.objects.push_back(o);
  }
  s.car_over_person.resize(std::size_t(spec.num_cars) * spec.num_persons);
  for (auto& bit : s.car_over_person) bit = rng.bernoulli(0.5) ? 1 : 0;
  return s;
}

// Occlusion order: same class -> higher index on top; car vs person -> the
// per-pair bit drawn at sequence setup (fixed for the whole sequence).
bool drawn_over(const SceneSetup& s, int top_idx, int bottom_idx) {
  const SceneObject& a = s.objects[std::size_t(top_idx)];
  const SceneObject& b = s.objects[std::size_t(bottom_idx)];
  if (a.cls == b.cls) return top_idx > bottom_idx;
  const int car = a.cls == kCar ? top_idx : bottom_idx;
  const int person = a.cls == kCar ? bottom_idx : top_idx;
  const bool car_on_top =
      s.car_over_person[std::size_t(car) * (s.objects.size() - std::size_t(s.num_cars)) +
                        std::size_t(person - s.num_cars)] != 0;
  return a.cls == kCar ? car_on_top : !car_on_top;
}

bool covers(const SceneObject& o, int lx, int ly) {
  if (o.cls == kCar) return true;  // rectangle: bbox is the footprint
  const double nx = (lx + 0.5 - o.width * 0.5) / (o.width * 0.5);
  const double ny = (ly + 0.5 - o.height * 0.5) / (o.height * 0.5);
  return nx * nx + ny * ny <= 1.0;
}

void render_frame(const SceneSpec& spec, const SceneSetup& s, int t,
                  std::vector<std::uint8_t>& planar, LabelMask& mask,
                  std::array<bool, 4>& flicker) {
  const int w = spec.width, h = spec.height;
  const std::int64_t plane = std::int64_t(w) * h;
  planar.assign(std::size_t(3 * plane), 0);
  mask = LabelMask(Shape{h, w});

  for (int k = 0; k < 4; ++k) {
    flicker[std::size_t(k)] =
        hash_unit(hash_combine(s.seq_key, 0xF11Cull, std::uint64_t(k), std::uint64_t(t))) <
        double(spec.flicker_prob);
  }

  // Scrolling stuff bands. Labels carry the true class; the displayed texture
  // is the paired class's texture function when the band flickers this frame.
  const std::int64_t camera_x = std::int64_t(spec.camera_speed) * t;
  for (int y = 0; y < h; ++y) {
    const int true_cls = band_class(s, y);
    const int disp = flicker[std::size_t(true_cls)] ? flicker_pair(true_cls) : true_cls;
    std::uint8_t* rows[3] = {planar.data() + 0 * plane + std::int64_t(y) * w,
                             planar.data() + 1 * plane + std::int64_t(y) * w,
                             planar.data() + 2 * plane + std::int64_t(y) * w};
    std::uint8_t* mrow = mask.data.data() + std::int64_t(y) * w;
    for (int x = 0; x < w; ++x) {
      const std::uint64_t wx = std::uint64_t(camera_x + x);
      const double n =
          hash_unit(hash_combine(s.world_key, std::uint64_t(disp), wx, std::uint64_t(y))) - 0.5;
      const long dn = std::lround(n * 2.0 * kTextureAmp);
      for (int c = 0; c < 3; ++c) rows[c][x] = clamp_byte(kBaseColor[disp][c] + dn);
      mrow[x] = std::uint8_t(true_cls);
    }
  }

  // Objects, with per-pixel occlusion resolution.
  std::vector<int> winner(std::size_t(plane), -1);
  std::vector<int> screen_x(s.objects.size(), 0);
  for (std::size_t oi = 0; oi < s.objects.size(); ++oi) {
    const SceneObject& o = s.objects[oi];
    const int sx = int(std::lround(o.x0 + o.vx * t));
    screen_x[oi] = sx;
    for (int ly = 0; ly < o.height; ++ly) {
      const int y = o.y0 + ly;
      if (y < 0 || y >= h) continue;
      for (int lx = 0; lx < o.width; ++lx) {
        const int x = sx + lx;
        if (x < 0 || x >= w) continue;
        if (!covers(o, lx, ly)) continue;
        int& slot = winner[std::size_t(y) * w + x];
        if (slot < 0 || drawn_over(s, int(oi), slot)) slot = int(oi);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int oi = winner[std::size_t(y) * w + x];
      if (oi < 0) continue;
      const SceneObject& o = s.objects[std::size_t(oi)];
      const int lx = x - screen_x[std::size_t(oi)];
      const int ly = y - o.y0;
      const double n =
          hash_unit(hash_combine(o.key, std::uint64_t(lx), std::uint64_t(ly))) - 0.5;
      const long dn = std::lround(n * 2.0 * kTextureAmp);
      for (int c = 0; c < 3; ++c) {
        planar[std::size_t(c * plane + std::int64_t(y) * w + x)] = clamp_byte(o.color[c] + dn);
      }
      mask.data[std::size_t(y) * w + x] = o.cls;
    }
  }

  // Border corruption: 3x3 box blur plus additive gaussian noise on the margin.
  if (spec.border_band > 0) {
    const int b = std::min(spec.border_band, std::max(h, w));
    std::vector<std::pair<int, std::uint8_t>> updates;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (y >= b && y < h - b && x >= b && x < w - b) continue;
        for (int c = 0; c < 3; ++c) {
          long acc = 0;
          for (int dy = -1; dy <= 1; ++dy) {
            const int yy = std::clamp(y + dy, 0, h - 1);
            for (int dx = -1; dx <= 1; ++dx) {
              const int xx = std::clamp(x + dx, 0, w - 1);
              acc += planar[std::size_t(c * plane + std::int64_t(yy) * w + xx)];
            }
          }
          const double z = hash_normal(
              hash_combine(s.seq_key, 0xB02Dull, std::uint64_t(t), std::uint64_t(y),
                           std::uint64_t(x), std::uint64_t(c), 0ull),
              hash_combine(s.seq_key, 0xB02Dull, std::uint64_t(t), std::uint64_t(y),
                           std::uint64_t(x), std::uint64_t(c), 1ull));
          const long v = std::lround(acc / 9.0 + z * double(spec.noise_sigma) * 255.0);
          updates.emplace_back(int(c * plane + std::int64_t(y) * w + x), clamp_byte(v));
        }
      }
    }
    for (const auto& [idx, v] : updates) planar[std::size_t(idx)] = v;
  }
}

std::string fmt_float(float v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", double(v));
  return buf;
}

std::string seq_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%04d", index);
  return buf;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.ppm", index);
  return buf;
}

std::string label_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "label_%05d.pgm", index);
  return buf;
}

void write_sequence(const SceneSpec& spec, int sequence_index, const fs::path& dir) {
  const LabeledSequence seq = generate_sequence(spec, sequence_index);
  fs::create_directories(dir);
  for (int t = 0; t < int(seq.frames.size()); ++t) {
    write_ppm((dir / frame_name(t)).string(), tensor_to_frame(*seq.frames[std::size_t(t)]));
    ImageU8 label = ImageU8::create(spec.width, spec.height, 1);
    label.pixels = seq.masks[std::size_t(t)].data;
    write_pgm((dir / label_name(t)).string(), label);
  }
}

}  // namespace

void SceneSpec::validate() const {
  require(width >= 16 && height >= 16, ErrorCode::precondition,
          "scene: dims must be at least 16");
  require(width % 4 == 0 && height % 4 == 0, ErrorCode::precondition,
          "scene: dims must be divisible by 4");
  require(frames_per_sequence >= 1, ErrorCode::precondition, "scene: need at least one frame");
  require(camera_speed >= 0, ErrorCode::precondition, "scene: camera_speed must be >= 0");
  require(num_cars >= 0 && num_persons >= 0, ErrorCode::precondition,
          "scene: object counts must be >= 0");
  require(object_speed_range >= 0.0f, ErrorCode::precondition,
          "scene: object_speed_range must be >= 0");
  require(flicker_prob >= 0.0f && flicker_prob <= 1.0f, ErrorCode::precondition,
          "scene: flicker_prob must be within [0,1]");
  require(border_band >= 0, ErrorCode::precondition, "scene: border_band must be >= 0");
  require(noise_sigma >= 0.0f, ErrorCode::precondition, "scene: noise_sigma must be >= 0");
}

LabeledSequence generate_sequence(const SceneSpec& spec, int sequence_index) {
  spec.validate();
  require(sequence_index >= 0, ErrorCode::precondition, "scene: sequence_index must be >= 0");
  const SceneSetup setup = build_setup(spec, sequence_index);

  LabeledSequence seq;
  seq.width = spec.width;
  seq.height = spec.height;
  const std::int64_t plane = std::int64_t(spec.width) * spec.height;
  std::vector<std::uint8_t> planar;
  for (int t = 0; t < spec.frames_per_sequence; ++t) {
    LabelMask mask;
    std::array<bool, 4> flicker{};
    render_frame(spec, setup, t, planar, mask, flicker);
    auto tensor = Tensor::create({3, spec.height, spec.width});
    for (std::int64_t i = 0; i < 3 * plane; ++i) {
      tensor->data()[std::size_t(i)] = float(planar[std::size_t(i)]) / 255.0f;
    }
    seq.frames.push_back(std::move(tensor));
    seq.masks.push_back(std::move(mask));
    seq.flicker.push_back(flicker);
  }
  return seq;
}

DatasetManifest generate_dataset(const SceneSpec& spec, int num_train, int num_val,
                                 const std::string& out_dir, bool overwrite) {
  spec.validate();
  require(num_train >= 1 && num_val >= 0, ErrorCode::precondition,
          "dataset: need at least one training sequence");
  const fs::path root(out_dir);
  std::error_code ec;
  if (fs::exists(root) && !fs::is_empty(root, ec)) {
    if (!overwrite) {
      fail(ErrorCode::io, "dataset: output directory is not empty (pass overwrite): " + out_dir);
    }
    fs::remove_all(root, ec);
    if (ec) fail(ErrorCode::io, "dataset: cannot clear output directory: " + out_dir);
  }
  fs::create_directories(root / "train", ec);
  fs::create_directories(root / "val", ec);
  if (!fs::exists(root / "train") || !fs::exists(root / "val")) {
    fail(ErrorCode::io, "dataset: cannot create output directories under " + out_dir);
  }

  for (int i = 0; i < num_train; ++i) {
    write_sequence(spec, i, root / "train" / seq_dir_name(i));
  }
  for (int i = 0; i < num_val; ++i) {
    write_sequence(spec, num_train + i, root / "val" / seq_dir_name(i));
  }

  DatasetManifest manifest{spec, num_train, num_val};
  std::ofstream out(root / "manifest.txt", std::ios::trunc);
  if (!out) fail(ErrorCode::io, "dataset: cannot write manifest under " + out_dir);
  out << "format=tseg-dataset-v1\n";
  out << "width=" << spec.width << "\n";
  out << "height=" << spec.height << "\n";
  out << "num_classes=" << SceneSpec::kNumClasses << "\n";
  out << "ignore_index=" << SceneSpec::kIgnoreIndex << "\n";
  out << "frames_per_sequence=" << spec.frames_per_sequence << "\n";
  out << "camera_speed=" << spec.camera_speed << "\n";
  out << "num_cars=" << spec.num_cars << "\n";
  out << "num_persons=" << spec.num_persons << "\n";
  out << "object_speed_range=" << fmt_float(spec.object_speed_range) << "\n";
  out << "flicker_prob=" << fmt_float(spec.flicker_prob) << "\n";
  out << "border_band=" << spec.border_band << "\n";
  out << "noise_sigma=" << fmt_float(spec.noise_sigma) << "\n";
  out << "seed=" << spec.seed << "\n";
  out << "num_train=" << num_train << "\n";
  out << "num_val=" << num_val << "\n";
  if (!out) fail(ErrorCode::io, "dataset: manifest write failed under " + out_dir);
  return manifest;
}

DatasetManifest read_manifest(const std::string& dataset_dir) {
  const fs::path path = fs::path(dataset_dir) / "manifest.txt";
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "dataset: cannot open manifest: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::io, "dataset: malformed manifest line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&kv, &path](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      fail(ErrorCode::io, std::string("dataset: manifest missing key '") + key + "' in " +
                              path.string());
    }
    return it->second;
  };
  try {
    if (get("format") != "tseg-dataset-v1") {
      fail(ErrorCode::io, "dataset: unsupported manifest format in " + path.string());
    }
    DatasetManifest m;
    m.spec.width = std::stoi(get("width"));
    m.spec.height = std::stoi(get("height"));
    m.spec.frames_per_sequence = std::stoi(get("frames_per_sequence"));
    m.spec.camera_speed = std::stoi(get("camera_speed"));
    m.spec.num_cars = std::stoi(get("num_cars"));
    m.spec.num_persons = std::stoi(get("num_persons"));
    m.spec.object_speed_range = std::stof(get("object_speed_range"));
    m.spec.flicker_prob = std::stof(get("flicker_prob"));
    m.spec.border_band = std::stoi(get("border_band"));
    m.spec.noise_sigma = std::stof(get("noise_sigma"));
    m.spec.seed = std::stoull(get("seed"));
    m.num_train = std::stoi(get("num_train"));
    m.num_val = std::stoi(get("num_val"));
    return m;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::io, "dataset: malformed manifest value in " + path.string() + ": " + e.what());
  }
}

int MemorySequenceSource::frame_count(int sequence_index) const {
  require(sequence_index >= 0 && sequence_index < size(), ErrorCode::precondition,
          "sequence source: index out of range");
  return int(sequences_[std::size_t(sequence_index)].frames.size());
}

LabeledSequence MemorySequenceSource::sequence(int sequence_index) const {
  require(sequence_index >= 0 && sequence_index < size(), ErrorCode::precondition,
          "sequence source: index out of range");
  return sequences_[std::size_t(sequence_index)];
}

LabeledFrame MemorySequenceSource::frame(int sequence_index, int frame_index) const {
  const LabeledSequence& s = sequences_[std::size_t(sequence_index)];
  require(frame_index >= 0 && frame_index < int(s.frames.size()), ErrorCode::precondition,
          "sequence source: frame index out of range");
  return LabeledFrame{s.frames[std::size_t(frame_index)], s.masks[std::size_t(frame_index)]};
}

DiskSequenceSource::DiskSequenceSource(const std::string& dataset_dir, const std::string& split)
    : manifest_(read_manifest(dataset_dir)), root_(dataset_dir), split_(split) {
  require(split == "train" || split == "val", ErrorCode::precondition,
          "dataset: split must be 'train' or 'val'");
  count_ = split == "train" ? manifest_.num_train : manifest_.num_val;
}

std::string DiskSequenceSource::sequence_dir(int sequence_index) const {
  require(sequence_index >= 0 && sequence_index < count_, ErrorCode::precondition,
          "dataset: sequence index out of range");
  return (fs::path(root_) / split_ / seq_dir_name(sequence_index)).string();
}

int DiskSequenceSource::frame_count(int sequence_index) const {
  sequence_dir(sequence_index);  // bounds check
  return manifest_.spec.frames_per_sequence;
}

LabeledSequence DiskSequenceSource::sequence(int sequence_index) const {
  const std::string dir = sequence_dir(sequence_index);
  LabeledSequence seq;
  seq.width = manifest_.spec.width;
  seq.height = manifest_.spec.height;
  for (int t = 0; t < manifest_.spec.frames_per_sequence; ++t) {
    LabeledFrame f = frame(sequence_index, t);
    seq.frames.push_back(std::move(f.image));
    seq.masks.push_back(std::move(f.mask));
  }
  return seq;
}

LabeledFrame DiskSequenceSource::frame(int sequence_index, int frame_index) const {
  const std::string dir = sequence_dir(sequence_index);
  require(frame_index >= 0 && frame_index < manifest_.spec.frames_per_sequence,
          ErrorCode::precondition, "dataset: frame index out of range");
  const ImageU8 img = read_netpbm((fs::path(dir) / frame_name(frame_index)).string());
  if (img.channels != 3 || img.width != manifest_.spec.width ||
      img.height != manifest_.spec.height) {
    fail(ErrorCode::io, "dataset: unexpected frame geometry in " + dir);
  }
  const ImageU8 lab = read_netpbm((fs::path(dir) / label_name(frame_index)).string());
  if (lab.channels != 1 || lab.width != img.width || lab.height != img.height) {
    fail(ErrorCode::io, "dataset: unexpected label geometry in " + dir);
  }
  LabeledFrame out;
  out.image = frame_to_tensor(img);
  out.mask = LabelMask(Shape{img.height, img.width});
  out.mask.data = lab.pixels;
  return out;
}

TensorPtr frame_to_tensor(const ImageU8& image) {
  require(image.channels == 3, ErrorCode::precondition, "frame_to_tensor: expected RGB image");
  auto t = Tensor::create({3, image.height, image.width});
  const std::int64_t plane = std::int64_t(image.width) * image.height;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        t->data()[std::size_t(c * plane + std::int64_t(y) * image.width + x)] =
            float(image.pixels[image.index(y, x, c)]) / 255.0f;
      }
    }
  }
  return t;
}

ImageU8 tensor_to_frame(const Tensor& tensor) {
  require(tensor.ndim() == 3 && tensor.dim(0) == 3, ErrorCode::precondition,
          "tensor_to_frame: expected [3,H,W]");
  const int h = tensor.dim(1), w = tensor.dim(2);
  const std::int64_t plane = std::int64_t(w) * h;
  ImageU8 img = ImageU8::create(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = tensor.data()[std::size_t(c * plane + std::int64_t(y) * w + x)];
        img.pixels[img.index(y, x, c)] =
            clamp_byte(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    }
  }
  return img;
}

}  // namespace tseg
