#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/util.hpp"
#include "tseg/training.hpp"

using tseg::test::TempDir;
using tseg::test::read_file_bytes;
using tseg::test::trees_equal;

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

// Runs the installed CLI binary and captures exit code + combined output.
RunResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string log = dir.file("cli_output.txt");
  const std::string cmd = std::string(TSEG_CLI_BIN) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

// Small dataset flags shared by the CLI tests.
const char* kGenFlags = "--width 32 --height 32 --num_train 4 --num_val 2 --num_cars 1 "
                        "--num_persons 1 --seed 5";
const char* kModelFlags = "--feat_channels 8 --hidden_channels 8";

std::string parse_report_value(const std::string& text, const std::string& key) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

}  // namespace

TEST_CASE("cli: gen requires --out and exits 2 without it") {
  TempDir dir("cli_usage");
  const RunResult r = run_cli("gen", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: unknown flags and bad enum values exit 2") {
  TempDir dir("cli_unknown");
  CHECK(run_cli("gen --out " + dir.file("d") + " --no_such_flag 1", dir).exit_code == 2);
  CHECK(run_cli("eval --data x --ckpt y --mode bogus", dir).exit_code == 2);
}

TEST_CASE("cli: gen is reproducible and refuses to clobber without --force") {
  TempDir dir("cli_gen");
  const std::string d1 = dir.file("a");
  const std::string d2 = dir.file("b");
  CHECK(run_cli(std::string("gen ") + kGenFlags + " --out " + d1, dir).exit_code == 0);
  CHECK(run_cli(std::string("gen ") + kGenFlags + " --out " + d2, dir).exit_code == 0);
  CHECK(trees_equal(d1, d2));

  CHECK(run_cli(std::string("gen ") + kGenFlags + " --out " + d1, dir).exit_code == 1);
  CHECK(run_cli(std::string("gen ") + kGenFlags + " --out " + d1 + " --force", dir).exit_code == 0);
  CHECK(trees_equal(d1, d2));
}

TEST_CASE("cli: config file values load and command-line flags win") {
  TempDir dir("cli_config");
  {
    std::ofstream cfg(dir.file("run.cfg"));
    cfg << "# comment line\n";
    cfg << "width=32\n";
    cfg << "height=32\n";
    cfg << "num_train=3\n";
    cfg << "num_val=1\n";
    cfg << "num_cars=0\n";
    cfg << "num_persons=0\n";
    cfg << "seed=9\n";
  }
  const std::string out = dir.file("ds");
  const RunResult r =
      run_cli("gen --config " + dir.file("run.cfg") + " --num_train 2 --out " + out, dir);
  CHECK(r.exit_code == 0);
  const tseg::DatasetManifest m = tseg::read_manifest(out);
  CHECK(m.num_train == 2);  // flag overrides file
  CHECK(m.num_val == 1);    // file value
  CHECK(m.spec.width == 32);
  CHECK(m.spec.seed == 9);
}

TEST_CASE("cli: unknown config keys fail fast") {
  TempDir dir("cli_badcfg");
  {
    std::ofstream cfg(dir.file("bad.cfg"));
    cfg << "widht=32\n";  // typo must not pass silently
  }
  const RunResult r = run_cli("gen --config " + dir.file("bad.cfg") + " --out " + dir.file("x"),
                              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("widht") != std::string::npos);
}

TEST_CASE("cli: full staged training pipeline with checkpoints and logs") {
  TempDir dir("cli_train");
  const std::string data = dir.file("data");
  REQUIRE(run_cli(std::string("gen ") + kGenFlags + " --out " + data, dir).exit_code == 0);

  const std::string common = std::string(kModelFlags) + " --seed 3 --epochs 1 --data " + data;

  // Stage 2 without --init is a usage error.
  CHECK(run_cli("train " + common + " --stage 2 --out " + dir.file("x.tseg"), dir).exit_code == 2);

  REQUIRE(run_cli("train " + common + " --stage 1 --out " + dir.file("c1.tseg"), dir).exit_code ==
          0);
  CHECK(std::filesystem::exists(dir.file("c1.tseg.loss.txt")));
  {
    std::ifstream log(dir.file("c1.tseg.loss.txt"));
    std::string line;
    REQUIRE(std::getline(log, line));
    CHECK(line.rfind("epoch=1 mean_loss=", 0) == 0);
  }

  // Determinism: identical invocation gives a byte-identical checkpoint.
  REQUIRE(run_cli("train " + common + " --stage 1 --out " + dir.file("c1b.tseg"), dir).exit_code ==
          0);
  CHECK(read_file_bytes(dir.file("c1.tseg")) == read_file_bytes(dir.file("c1b.tseg")));

  // Stage ordering is enforced through checkpoint provenance.
  CHECK(run_cli("train " + common + " --stage 3 --init " + dir.file("c1.tseg") + " --out " +
                    dir.file("bad.tseg"),
                dir)
            .exit_code == 1);

  REQUIRE(run_cli("train " + common + " --stage 2 --init " + dir.file("c1.tseg") + " --out " +
                      dir.file("c2.tseg"),
                  dir)
              .exit_code == 0);

  // Stage 2 must leave the appearance tensors byte-equal to the stage-1 input.
  {
    const tseg::Checkpoint c1 = tseg::load_checkpoint(dir.file("c1.tseg"));
    const tseg::Checkpoint c2 = tseg::load_checkpoint(dir.file("c2.tseg"));
    REQUIRE(c1.tensors.size() == c2.tensors.size());
    bool memory_changed = false;
    for (std::size_t i = 0; i < c1.tensors.size(); ++i) {
      const auto& [name, t1] = c1.tensors[i];
      const auto& [name2, t2] = c2.tensors[i];
      REQUIRE(name == name2);
      if (name.rfind("appearance.", 0) == 0) {
        CHECK(t1->data() == t2->data());
      } else if (name.rfind("memory.", 0) == 0 && t1->data() != t2->data()) {
        memory_changed = true;
      }
    }
    CHECK(memory_changed);
  }

  REQUIRE(run_cli("train " + common + " --stage 3 --init " + dir.file("c2.tseg") + " --out " +
                      dir.file("c3.tseg"),
                  dir)
              .exit_code == 0);

  // Eval: fused mode demands a stage-3 checkpoint.
  const std::string eval_common =
      std::string("eval ") + kModelFlags + " --data " + data + " --split val ";
  CHECK(run_cli(eval_common + "--ckpt " + dir.file("c2.tseg") + " --mode fused --out " +
                    dir.file("rf.txt"),
                dir)
            .exit_code == 1);
  CHECK(run_cli(eval_common + "--ckpt " + dir.file("c1.tseg") + " --mode memory_only --out " +
                    dir.file("rm.txt"),
                dir)
            .exit_code == 1);

  const RunResult ev = run_cli(
      eval_common + "--ckpt " + dir.file("c3.tseg") + " --mode fused --out " + dir.file("r.txt"),
      dir);
  CHECK(ev.exit_code == 0);
  CHECK(std::filesystem::exists(dir.file("r.txt")));
  // Report keys: one per class plus the three aggregate lines.
  std::ifstream report(dir.file("r.txt"));
  std::stringstream ss;
  ss << report.rdbuf();
  int keys = 0;
  std::istringstream lines(ss.str());
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find('=') != std::string::npos) ++keys;
  }
  CHECK(keys == 9);

  // Ground-truth self-evaluation scores a perfect mean IoU.
  const RunResult self = run_cli(
      eval_common + "--self-eval --out " + dir.file("self.txt"), dir);
  CHECK(self.exit_code == 0);
  CHECK(parse_report_value(self.output, "mean_iou") == "1.000000");
}

TEST_CASE("cli: inference and gate maps") {
  TempDir dir("cli_infer");
  const std::string data = dir.file("data");
  REQUIRE(run_cli(std::string("gen ") + kGenFlags + " --out " + data, dir).exit_code == 0);
  const std::string common = std::string(kModelFlags) + " --seed 4 --epochs 1 --data " + data;
  REQUIRE(run_cli("train " + common + " --stage 1 --out " + dir.file("c1.tseg"), dir).exit_code ==
          0);

  const std::string seq = data + "/val/seq_0000";
  const std::string pred_dir = dir.file("pred");
  REQUIRE(run_cli(std::string("infer ") + kModelFlags + " --ckpt " + dir.file("c1.tseg") +
                      " --seq " + seq + " --out " + pred_dir,
                  dir)
              .exit_code == 0);
  int masks = 0;
  for (const auto& e : std::filesystem::directory_iterator(pred_dir)) {
    if (e.path().filename().string().starts_with("pred_")) ++masks;
  }
  CHECK(masks == 8);  // one mask per input frame

  // Re-running is idempotent.
  const auto before = read_file_bytes(pred_dir + "/pred_00003.pgm");
  REQUIRE(run_cli(std::string("infer ") + kModelFlags + " --ckpt " + dir.file("c1.tseg") +
                      " --seq " + seq + " --out " + pred_dir,
                  dir)
              .exit_code == 0);
  CHECK(read_file_bytes(pred_dir + "/pred_00003.pgm") == before);

  // Gate maps from a stage-1 checkpoint: the gate head is still zero-initialized,
  // so every gate value is exactly 0.5 and every byte floor(0.5*255) = 127.
  const std::string gate_dir = dir.file("gates");
  REQUIRE(run_cli(std::string("gates ") + kModelFlags + " --ckpt " + dir.file("c1.tseg") +
                      " --seq " + seq + " --out " + gate_dir,
                  dir)
              .exit_code == 0);
  const tseg::ImageU8 gate = tseg::read_netpbm(gate_dir + "/sigma_mem_00000.pgm");
  CHECK(gate.width == 32);
  CHECK(gate.height == 32);
  for (std::uint8_t v : gate.pixels) CHECK(int(v) == 127);
}
