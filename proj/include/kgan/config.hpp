#pragma once

#include "kgan/distill.hpp"
#include "kgan/gan.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgan {

/// Bad usage or malformed configuration; the CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  int size = 16;
  int n_pairs = 300;
  std::uint64_t master_seed = 12345;
  double train_fraction = 2.0 / 3.0;
};

/// One training run section ("teacher" or "student").
struct RunConfig {
  TrainingConfig train;
  GanMode mode = GanMode::kStandard;
  Conditioning conditioning = Conditioning::kImage;
};

/// Whole-experiment document. Every field has a default; unknown JSON keys
/// are rejected. The resolved form (to_json_text) reproduces the run exactly.
struct ExperimentConfig {
  std::string out_dir = "runs/kgan";
  DataConfig data;
  RunConfig teacher;
  RunConfig student;
  DistillConfig distill;
  std::string eval_checkpoint = "student";  // role name or checkpoint path

  static ExperimentConfig defaults();
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json_text() const;

  /// KGAN_SEED_OVERRIDE support: replaces the data master seed and both
  /// training seeds.
  void override_seeds(std::uint64_t seed);

  void validate() const;
};

const char* to_string(GanMode mode);
const char* to_string(Conditioning c);
const char* to_string(OptimKind o);

}  // namespace kgan
