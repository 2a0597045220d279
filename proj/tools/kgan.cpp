// kgan: config-driven pipeline driver.
//   kgan gen-data      --config c.json [--force]
//   kgan train-teacher --config c.json [--force] [--plot]
//   kgan train-student --config c.json [--force] [--plot]
//   kgan evaluate      --config c.json [--checkpoint teacher|student|PATH] [--force]
//   kgan gradcheck
// KGAN_SEED_OVERRIDE=<integer> overrides every configured seed.

#include "kgan/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::optional<std::uint64_t> seed_override_from_env() {
  const char* raw = std::getenv("KGAN_SEED_OVERRIDE");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0')
    throw kgan::ConfigError("KGAN_SEED_OVERRIDE must be a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

kgan::ExperimentConfig load_config(const std::string& path) {
  kgan::ExperimentConfig cfg = kgan::ExperimentConfig::from_json_file(path);
  if (auto seed = seed_override_from_env()) cfg.override_seeds(*seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KGAN: teacher/student GAN pipeline on synthetic phantom pairs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint;
  bool force = false;
  bool plot = false;
  bool self_test_fault = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_flag("--force", force, "overwrite existing outputs");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate the phantom dataset");
  add_config(gen);
  CLI::App* teacher = app.add_subcommand("train-teacher", "train the teacher GAN");
  add_config(teacher);
  teacher->add_flag("--plot", plot, "render loss curves to history.pgm");
  CLI::App* student =
      app.add_subcommand("train-student", "distill the student from the teacher");
  add_config(student);
  student->add_flag("--plot", plot, "render loss curves to history.pgm");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint (SF/SSIM/SCD)");
  add_config(evaluate);
  evaluate->add_option("--checkpoint", checkpoint,
                       "teacher, student, or a checkpoint path");
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck
      ->add_flag("--self-test-fault", self_test_fault,
                 "inject a broken conv backward (fixture; must fail)")
      ->group("");  // hidden from help

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kgan::kExitOk : kgan::kExitUsage;
  }

  try {
    if (gen->parsed()) return kgan::cmd_gen_data(load_config(config_path), force);
    if (teacher->parsed())
      return kgan::cmd_train(load_config(config_path), kgan::Role::kTeacher, force,
                             plot);
    if (student->parsed())
      return kgan::cmd_train(load_config(config_path), kgan::Role::kStudent, force,
                             plot);
    if (evaluate->parsed())
      return kgan::cmd_evaluate(load_config(config_path), checkpoint, force);
    if (gradcheck->parsed()) return kgan::cmd_gradcheck(self_test_fault);
  } catch (const kgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kgan::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kgan::kExitRuntime;
  }
  return kgan::kExitUsage;
}
