#include "runconfig.hpp"

#include <fstream>

#include "tseg/error.hpp"

namespace tseg::cli {

namespace {

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    require(used == value.size(), ErrorCode::config, "config: trailing characters");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "config: bad integer for '" + key + "': " + value);
  }
}

float parse_float(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const float v = std::stof(value, &used);
    require(used == value.size(), ErrorCode::config, "config: trailing characters");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "config: bad number for '" + key + "': " + value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    require(used == value.size(), ErrorCode::config, "config: trailing characters");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "config: bad unsigned integer for '" + key + "': " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(ErrorCode::config, "config: bad boolean for '" + key + "': " + value);
}

}  // namespace

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  fail(ErrorCode::config, "config: optimizer must be 'sgd' or 'adam' (got '" + name + "')");
}

SceneSpec RunConfig::scene_spec() const {
  SceneSpec s = scene;
  s.seed = seed;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig m;
  m.feat_channels = feat_channels;
  m.hidden_channels = hidden_channels;
  m.num_classes = num_classes;
  return m;
}

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "width") {
    cfg.scene.width = parse_int(key, value);
  } else if (key == "height") {
    cfg.scene.height = parse_int(key, value);
  } else if (key == "frames_per_sequence") {
    cfg.scene.frames_per_sequence = parse_int(key, value);
  } else if (key == "camera_speed") {
    cfg.scene.camera_speed = parse_int(key, value);
  } else if (key == "num_cars") {
    cfg.scene.num_cars = parse_int(key, value);
  } else if (key == "num_persons") {
    cfg.scene.num_persons = parse_int(key, value);
  } else if (key == "object_speed_range") {
    cfg.scene.object_speed_range = parse_float(key, value);
  } else if (key == "flicker_prob") {
    cfg.scene.flicker_prob = parse_float(key, value);
  } else if (key == "border_band") {
    cfg.scene.border_band = parse_int(key, value);
  } else if (key == "noise_sigma") {
    cfg.scene.noise_sigma = parse_float(key, value);
  } else if (key == "num_train") {
    cfg.num_train = parse_int(key, value);
  } else if (key == "num_val") {
    cfg.num_val = parse_int(key, value);
  } else if (key == "feat_channels") {
    cfg.feat_channels = parse_int(key, value);
  } else if (key == "hidden_channels") {
    cfg.hidden_channels = parse_int(key, value);
  } else if (key == "num_classes") {
    cfg.num_classes = parse_int(key, value);
  } else if (key == "stage") {
    cfg.train.stage = parse_int(key, value);
  } else if (key == "learning_rate") {
    cfg.train.learning_rate = parse_float(key, value);
  } else if (key == "epochs") {
    cfg.train.epochs = parse_int(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_int(key, value);
  } else if (key == "sequence_length") {
    cfg.train.sequence_length = parse_int(key, value);
  } else if (key == "optimizer") {
    cfg.train.optimizer = parse_optimizer(value);
  } else if (key == "grad_clip") {
    cfg.train.grad_clip = parse_float(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_u64(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "data") {
    cfg.data = value;
  } else if (key == "ckpt") {
    cfg.ckpt = value;
  } else if (key == "init") {
    cfg.init = value;
  } else if (key == "seq") {
    cfg.seq = value;
  } else if (key == "split") {
    cfg.split = value;
  } else if (key == "mode") {
    cfg.mode = value;
  } else if (key == "force") {
    cfg.force = parse_bool(key, value);
  } else if (key == "self_eval") {
    cfg.self_eval = parse_bool(key, value);
  } else {
    fail(ErrorCode::config, "config: unknown key '" + key + "'");
  }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "config: cannot open file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Trim surrounding whitespace.
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(first, last - first + 1);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::config,
           "config: malformed line " + std::to_string(line_no) + " in " + path + ": " + body);
    }
    apply_config_key(cfg, body.substr(0, eq), body.substr(eq + 1));
  }
}

}  // namespace tseg::cli
