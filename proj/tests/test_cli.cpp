#include "kgan/commands.hpp"
#include "kgan/config.hpp"
#include "kgan/plot.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace kgan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("kgan_cli_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

ExperimentConfig tiny_config(const fs::path& out_dir) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.out_dir = out_dir.string();
  cfg.data.size = 8;
  cfg.data.n_pairs = 6;
  cfg.data.master_seed = 2024;
  cfg.data.train_fraction = 0.5;
  cfg.teacher.train.epochs = 1;
  cfg.teacher.train.batch_size = 3;
  cfg.student.train.epochs = 1;
  cfg.student.train.batch_size = 3;
  return cfg;
}

}  // namespace

TEST_CASE("config: defaults, strict keys, enum parsing") {
  ExperimentConfig cfg = ExperimentConfig::from_json_text("{}");
  CHECK(cfg.data.size == 16);
  CHECK(cfg.data.n_pairs == 300);
  CHECK(cfg.teacher.train.epochs == 10);
  CHECK(cfg.teacher.train.lr_g == 2e-4);
  CHECK(cfg.teacher.train.optimizer == OptimKind::kAdam);
  CHECK(cfg.teacher.train.d_steps_per_g_step == 1);
  CHECK(cfg.distill.temperature == 4.0);
  CHECK(cfg.distill.alpha == 0.7);
  CHECK(cfg.distill.beta == 0.3);
  CHECK(cfg.distill.gamma == 1.0);
  CHECK(cfg.distill.scale == 0.5);

  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"datum": {}})"),
                       doctest::Contains("datum"), ConfigError);
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_json_text(R"({"data": {"sizee": 8}})"),
                       doctest::Contains("sizee"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"data": {"size": 9}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_text(R"({"teacher": {"mode": "wgan"}})"),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"teacher": {"epochs": -1}})"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("not json"), ConfigError);

  // Wasserstein runs default to 5 critic steps per generator step.
  ExperimentConfig wcfg = ExperimentConfig::from_json_text(
      R"({"teacher": {"mode": "wasserstein"}})");
  CHECK(wcfg.teacher.train.d_steps_per_g_step == 5);
  ExperimentConfig wcfg2 = ExperimentConfig::from_json_text(
      R"({"teacher": {"mode": "wasserstein", "d_steps_per_g_step": 2}})");
  CHECK(wcfg2.teacher.train.d_steps_per_g_step == 2);
}

TEST_CASE("config: resolved copy round trips byte-for-byte") {
  ExperimentConfig cfg = ExperimentConfig::from_json_text(
      R"({"data": {"size": 8, "n_pairs": 12}, "teacher": {"epochs": 3}})");
  const std::string text = cfg.to_json_text();
  ExperimentConfig back = ExperimentConfig::from_json_text(text);
  CHECK(back.to_json_text() == text);

  cfg.override_seeds(555);
  CHECK(cfg.data.master_seed == 555);
  CHECK(cfg.teacher.train.seed == 555);
  CHECK(cfg.student.train.seed == 555);
}

TEST_CASE("gen-data writes the dataset and refuses to clobber it") {
  const fs::path dir = temp_dir("gen");
  ExperimentConfig cfg = tiny_config(dir);
  CHECK(cmd_gen_data(cfg, false) == kExitOk);

  const std::string manifest = read_file(fs::path(dataset_dir(cfg)) / "manifest.csv");
  // Header plus one row per pair.
  CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 1 + cfg.data.n_pairs);
  CHECK(fs::exists(fs::path(dataset_dir(cfg)) / "config.json"));

  CHECK_THROWS_WITH_AS(cmd_gen_data(cfg, false), doctest::Contains("--force"),
                       ConfigError);
  CHECK(cmd_gen_data(cfg, true) == kExitOk);
  fs::remove_all(dir);
}

TEST_CASE("train commands: ordering constraints and outputs") {
  const fs::path dir = temp_dir("train");
  ExperimentConfig cfg = tiny_config(dir);

  CHECK_THROWS_WITH_AS(cmd_train(cfg, Role::kTeacher, false, false),
                       doctest::Contains("gen-data"), ConfigError);
  REQUIRE(cmd_gen_data(cfg, false) == kExitOk);

  CHECK_THROWS_WITH_AS(cmd_train(cfg, Role::kStudent, false, false),
                       doctest::Contains("train-teacher"), ConfigError);

  REQUIRE(cmd_train(cfg, Role::kTeacher, false, true) == kExitOk);
  const fs::path tdir = run_dir(cfg, Role::kTeacher);
  CHECK(fs::exists(tdir / "checkpoint.kganp"));
  CHECK(fs::exists(tdir / "checkpoint.json"));
  CHECK(fs::exists(tdir / "history.csv"));
  CHECK(fs::exists(tdir / "config.json"));
  CHECK(fs::exists(tdir / "history.pgm"));  // --plot

  CHECK_THROWS_WITH_AS(cmd_train(cfg, Role::kTeacher, false, false),
                       doctest::Contains("--force"), ConfigError);

  REQUIRE(cmd_train(cfg, Role::kStudent, false, false) == kExitOk);
  CHECK(fs::exists(fs::path(run_dir(cfg, Role::kStudent)) / "checkpoint.kganp"));

  // Checkpoint round trip restores the exact parameter bytes.
  GanModel student = load_checkpoint(run_dir(cfg, Role::kStudent));
  CHECK(student.image_size == 8);
  CHECK(student.scale == 0.5);
  GanModel again = load_checkpoint(
      (fs::path(run_dir(cfg, Role::kStudent)) / "checkpoint.json").string());
  CHECK(serialize_params(student.gen_params) == serialize_params(again.gen_params));
  CHECK(serialize_params(student.disc_params) ==
        serialize_params(again.disc_params));
  CHECK(student.opt_g.t > 0);  // adam state rides along

  REQUIRE(cmd_evaluate(cfg, "", false) == kExitOk);
  const fs::path edir = fs::path(cfg.out_dir) / "eval-student";
  const std::string csv = read_file(edir / "metrics.csv");
  CHECK(csv.rfind("id,sf,ssim,scd\n", 0) == 0);
  CHECK_THROWS_WITH_AS(cmd_evaluate(cfg, "", false), doctest::Contains("--force"),
                       ConfigError);
  CHECK(cmd_evaluate(cfg, "teacher", false) == kExitOk);
  CHECK_THROWS_AS(cmd_evaluate(cfg, "no/such/checkpoint", false), ConfigError);

  fs::remove_all(dir);
}

TEST_CASE("checkpoint loader validates the sidecar") {
  const fs::path dir = temp_dir("ckpt");
  CHECK_THROWS_AS(load_checkpoint(dir.string()), std::runtime_error);
  std::ofstream(dir / "checkpoint.json") << "{broken";
  CHECK_THROWS_AS(load_checkpoint(dir.string()), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("history plot renders a PGM with both curves") {
  TrainingHistory h;
  for (int i = 0; i < 30; ++i)
    h.push_back({i, 1.0 + 0.3 * std::sin(i * 0.4), 1.4 - 0.02 * i, 0.5, 0.5, 0.0});
  const fs::path dir = temp_dir("plot");
  const std::string path = (dir / "loss.pgm").string();
  render_history_plot(h, path);
  ImageGray img = load_pgm(path);
  CHECK(img.width == 480);
  CHECK(img.height == 320);
  CHECK(img.pixels.minCoeff() < 0.1);   // dark curve pixels
  CHECK(img.pixels.maxCoeff() == 1.0);  // white background
  CHECK_THROWS_AS(render_history_plot({}, path), std::invalid_argument);
  fs::remove_all(dir);
}
