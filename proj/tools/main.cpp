#include <iostream>
#include <string>
#include <string_view>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using tseg::cli::RunConfig;

void add_common_options(CLI::App* sub, RunConfig& cfg, std::string& config_path) {
  sub->add_option("--config", config_path, "key=value config file (flags override it)");
  sub->add_option("--seed", cfg.seed, "seed for generation, initialization and training");
}

void add_scene_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--width", cfg.scene.width);
  sub->add_option("--height", cfg.scene.height);
  sub->add_option("--frames_per_sequence", cfg.scene.frames_per_sequence);
  sub->add_option("--camera_speed", cfg.scene.camera_speed);
  sub->add_option("--num_cars", cfg.scene.num_cars);
  sub->add_option("--num_persons", cfg.scene.num_persons);
  sub->add_option("--object_speed_range", cfg.scene.object_speed_range);
  sub->add_option("--flicker_prob", cfg.scene.flicker_prob);
  sub->add_option("--border_band", cfg.scene.border_band);
  sub->add_option("--noise_sigma", cfg.scene.noise_sigma);
  sub->add_option("--num_train", cfg.num_train);
  sub->add_option("--num_val", cfg.num_val);
}

void add_model_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--feat_channels", cfg.feat_channels);
  sub->add_option("--hidden_channels", cfg.hidden_channels);
  sub->add_option("--num_classes", cfg.num_classes);
}

void add_train_options(CLI::App* sub, RunConfig& cfg, std::string& optimizer_name) {
  sub->add_option("--learning_rate", cfg.train.learning_rate);
  sub->add_option("--epochs", cfg.train.epochs, "0 selects the per-stage default");
  sub->add_option("--batch_size", cfg.train.batch_size);
  sub->add_option("--sequence_length", cfg.train.sequence_length);
  sub->add_option("--optimizer", optimizer_name)->check(CLI::IsMember({"sgd", "adam"}));
  sub->add_option("--grad_clip", cfg.train.grad_clip, "max gradient L2 norm");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file loads before CLI11 assigns flag values, so flags win.
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg(argv[i]);
    std::string path;
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.starts_with("--config=")) {
      path = std::string(arg.substr(9));
    } else {
      continue;
    }
    try {
      tseg::cli::load_config_file(cfg, path);
    } catch (const tseg::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  CLI::App app{"tseg: joint appearance+memory video segmentation on a synthetic benchmark"};
  app.require_subcommand(1);
  std::string config_path;
  std::string optimizer_name;

  CLI::App* gen = app.add_subcommand("gen", "generate a labeled synthetic dataset");
  add_common_options(gen, cfg, config_path);
  add_scene_options(gen, cfg);
  gen->add_option("--out", cfg.out, "output dataset directory")->required();
  gen->add_flag("--force", cfg.force, "overwrite a non-empty output directory");

  CLI::App* train = app.add_subcommand("train", "train one stage (1: appearance stills, "
                                                "2: memory on sequences, 3: gated fusion)");
  add_common_options(train, cfg, config_path);
  add_model_options(train, cfg);
  add_train_options(train, cfg, optimizer_name);
  train->add_option("--stage", cfg.train.stage, "training stage")->check(CLI::Range(1, 3));
  train->add_option("--data", cfg.data, "dataset directory (from gen)");
  train->add_option("--init", cfg.init, "previous-stage checkpoint (stages 2 and 3)");
  train->add_option("--out", cfg.out, "output checkpoint path");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  add_common_options(eval, cfg, config_path);
  add_model_options(eval, cfg);
  eval->add_option("--data", cfg.data, "dataset directory");
  eval->add_option("--ckpt", cfg.ckpt, "checkpoint to evaluate");
  eval->add_option("--split", cfg.split)->check(CLI::IsMember({"train", "val"}));
  eval->add_option("--mode", cfg.mode)
      ->check(CLI::IsMember({"appearance_only", "memory_only", "fused"}));
  eval->add_option("--out", cfg.out, "metrics report path (default metrics_report.txt)");
  eval->add_flag("--self-eval", cfg.self_eval, "debug: score ground truth against itself");

  CLI::App* infer = app.add_subcommand("infer", "write predicted label masks for a sequence");
  add_common_options(infer, cfg, config_path);
  add_model_options(infer, cfg);
  infer->add_option("--ckpt", cfg.ckpt, "checkpoint")->required();
  infer->add_option("--seq", cfg.seq, "directory containing frame_*.ppm")->required();
  infer->add_option("--out", cfg.out, "output directory")->required();

  CLI::App* gates = app.add_subcommand("gates", "write confidence gate maps for a sequence");
  add_common_options(gates, cfg, config_path);
  add_model_options(gates, cfg);
  gates->add_option("--ckpt", cfg.ckpt, "checkpoint")->required();
  gates->add_option("--seq", cfg.seq, "directory containing frame_*.ppm")->required();
  gates->add_option("--out", cfg.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (!optimizer_name.empty()) {
    cfg.train.optimizer = tseg::cli::parse_optimizer(optimizer_name);
  }

  try {
    if (gen->parsed()) return tseg::cli::cmd_gen(cfg);
    if (train->parsed()) return tseg::cli::cmd_train(cfg);
    if (eval->parsed()) return tseg::cli::cmd_eval(cfg);
    if (infer->parsed()) return tseg::cli::cmd_infer(cfg);
    if (gates->parsed()) return tseg::cli::cmd_gates(cfg);
  } catch (const tseg::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const tseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
