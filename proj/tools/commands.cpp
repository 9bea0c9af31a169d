#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tseg/eval.hpp"
#include "tseg/metrics.hpp"
#include "tseg/rng.hpp"

namespace fs = std::filesystem;

namespace tseg::cli {

namespace {

void need(bool present, const char* what) {
  if (!present) throw UsageError(std::string("missing required option ") + what);
}

std::array<std::uint64_t, 4> rng_words(std::uint64_t seed) {
  const auto s = Rng(seed).state();
  return {s[0], s[1], 0, 0};
}

SegModel load_model(const RunConfig& cfg, const std::string& path, int* stage_out) {
  const Checkpoint ckpt = load_checkpoint(path);
  SegModel model = SegModel::create(cfg.model_config(), cfg.seed);
  apply_checkpoint(model, ckpt);
  if (stage_out != nullptr) *stage_out = ckpt.stage;
  return model;
}

std::vector<std::string> list_frames(const std::string& dir) {
  require(fs::is_directory(dir), ErrorCode::io, "not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("frame_") && name.ends_with(".ppm")) names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  require(!names.empty(), ErrorCode::io, "no frame_*.ppm files in " + dir);
  return names;
}

std::string numbered(const char* stem, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", stem, index, ext);
  return buf;
}

/// Gate map bytes use floor(v*255): 0 -> 0 (black), 1 -> 255 (white).
ImageU8 gate_to_image(const Tensor& gate_full) {
  const int h = gate_full.dim(2), w = gate_full.dim(3);
  ImageU8 img = ImageU8::create(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = gate_full.data()[std::size_t(y) * w + x];
      img.pixels[img.index(y, x)] = std::uint8_t(std::clamp(int(v * 255.0f), 0, 255));
    }
  }
  return img;
}

void write_report_file(const std::string& path, const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write report: " + path);
  write_metrics_report(out, cm, kClassNames, kStuffClasses);
  if (!out) fail(ErrorCode::io, "report write failed: " + path);
}

}  // namespace

int cmd_gen(const RunConfig& cfg) {
  need(!cfg.out.empty(), "--out");
  const DatasetManifest m =
      generate_dataset(cfg.scene_spec(), cfg.num_train, cfg.num_val, cfg.out, cfg.force);
  std::cout << "dataset written to " << cfg.out << " (" << m.num_train << " train + " << m.num_val
            << " val sequences, " << m.spec.width << "x" << m.spec.height << ", "
            << m.spec.frames_per_sequence << " frames each)\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  need(!cfg.data.empty(), "--data");
  need(!cfg.out.empty(), "--out");
  const TrainConfig tc = cfg.train_config();
  tc.validate();
  if (tc.stage >= 2) need(!cfg.init.empty(), "--init (stages 2 and 3 resume from a checkpoint)");

  DiskSequenceSource train_data(cfg.data, "train");
  SegModel model = SegModel::create(cfg.model_config(), cfg.seed);
  if (tc.stage >= 2) {
    const Checkpoint ckpt = load_checkpoint(cfg.init);
    require(ckpt.stage == tc.stage - 1, ErrorCode::precondition,
            "train: --init checkpoint must come from the previous stage");
    apply_checkpoint(model, ckpt);
  }

  LossReport report;
  switch (tc.stage) {
    case 1: report = train_stage1_appearance(model, train_data, tc); break;
    case 2: report = train_stage2_memory(model, train_data, tc); break;
    case 3: report = train_stage3_gated(model, train_data, tc); break;
  }

  save_checkpoint(cfg.out, model, tc.stage, rng_words(cfg.seed));

  const std::string log_path = cfg.out + ".loss.txt";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) fail(ErrorCode::io, "cannot write loss log: " + log_path);
  for (std::size_t e = 0; e < report.epoch_mean_loss.size(); ++e) {
    char line[96];
    std::snprintf(line, sizeof line, "epoch=%zu mean_loss=%.9g\n", e + 1,
                  report.epoch_mean_loss[e]);
    log << line;
  }
  std::cout << "stage " << tc.stage << " done; checkpoint " << cfg.out << ", final epoch loss "
            << report.final_epoch_loss() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  need(!cfg.data.empty(), "--data");
  DiskSequenceSource data(cfg.data, cfg.split);

  ConfusionMatrix cm(cfg.num_classes);
  if (cfg.self_eval) {
    // Debug path: scores the ground truth against itself.
    for (int i = 0; i < data.size(); ++i) {
      const LabeledSequence seq = data.sequence(i);
      for (const LabelMask& m : seq.masks) cm.accumulate(m, m, SceneSpec::kIgnoreIndex);
    }
  } else {
    need(!cfg.ckpt.empty(), "--ckpt");
    const EvalMode mode = parse_eval_mode(cfg.mode);
    int stage = 0;
    SegModel model = load_model(cfg, cfg.ckpt, &stage);
    if (mode == EvalMode::fused) {
      require(stage == 3, ErrorCode::precondition,
              "eval: fused mode needs a stage-3 checkpoint (gates are trained in stage 3)");
    }
    if (mode == EvalMode::memory_only) {
      require(stage >= 2, ErrorCode::precondition,
              "eval: memory_only mode needs a stage-2 or stage-3 checkpoint");
    }
    const EvalReport report = evaluate_sequences(model, data);
    cm = report.for_mode(mode);
  }

  write_metrics_report(std::cout, cm, kClassNames, kStuffClasses);
  const std::string report_path = cfg.out.empty() ? "metrics_report.txt" : cfg.out;
  write_report_file(report_path, cm);
  return 0;
}

namespace {

int run_inference(const RunConfig& cfg, bool gates) {
  need(!cfg.ckpt.empty(), "--ckpt");
  need(!cfg.seq.empty(), "--seq");
  need(!cfg.out.empty(), "--out");
  SegModel model = load_model(cfg, cfg.ckpt, nullptr);
  const std::vector<std::string> frames = list_frames(cfg.seq);
  fs::create_directories(cfg.out);

  MemoryState state;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const ImageU8 img = read_netpbm((fs::path(cfg.seq) / frames[t]).string());
    require(img.channels == 3, ErrorCode::io, "infer: frames must be RGB PPM");
    auto frame = Tensor::create({1, 3, img.height, img.width});
    frame->data() = frame_to_tensor(img)->data();
    if (t == 0) state = model.reset_state(1, img.height, img.width);
    auto [pred, next] = model.step(nullptr, frame, state);
    state = next;

    if (gates) {
      auto appr = upsample_nearest<float>(nullptr, pred.sigma_appr, kFeatureStride);
      auto mem = upsample_nearest<float>(nullptr, pred.sigma_mem, kFeatureStride);
      write_pgm((fs::path(cfg.out) / numbered("sigma_appr", int(t), "pgm")).string(),
                gate_to_image(*appr));
      write_pgm((fs::path(cfg.out) / numbered("sigma_mem", int(t), "pgm")).string(),
                gate_to_image(*mem));
    } else {
      const LabelMask pred_mask =
          upsample_mask(argmax_channels(*pred.logits_fused), kFeatureStride);
      ImageU8 out_img = ImageU8::create(img.width, img.height, 1);
      out_img.pixels = pred_mask.data;
      write_pgm((fs::path(cfg.out) / numbered("pred", int(t), "pgm")).string(), out_img);
    }
  }
  std::cout << (gates ? "gate maps" : "predictions") << " for " << frames.size()
            << " frames written to " << cfg.out << "\n";
  return 0;
}

}  // namespace

int cmd_infer(const RunConfig& cfg) { return run_inference(cfg, /*gates=*/false); }

int cmd_gates(const RunConfig& cfg) { return run_inference(cfg, /*gates=*/true); }

}  // namespace tseg::cli
