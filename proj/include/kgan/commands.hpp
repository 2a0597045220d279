#pragma once

#include "kgan/config.hpp"
#include "kgan/gan.hpp"

#include <string>

namespace kgan {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

enum class Role { kTeacher, kStudent };

const char* role_name(Role role);

// Run directories derived from the config.
std::string dataset_dir(const ExperimentConfig& cfg);
std::string run_dir(const ExperimentConfig& cfg, Role role);

/// Generate the phantom dataset (PGMs + manifest + resolved config copy).
int cmd_gen_data(const ExperimentConfig& cfg, bool force);

/// Train the teacher or distill the student; writes checkpoint, history.csv,
/// resolved config copy and optionally a loss plot.
int cmd_train(const ExperimentConfig& cfg, Role role, bool force, bool plot);

/// Evaluate a checkpoint on the test split; writes metrics.csv and prints a
/// one-line summary. `checkpoint` may be "teacher", "student" or a path;
/// empty uses the config's eval section.
int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint,
                 bool force);

/// Finite-difference verification table; exit 0 iff every check passes.
int cmd_gradcheck(bool inject_fault);

// Checkpoint layout: <dir>/checkpoint.kganp (parameters, "g."/"d." prefixes),
// <dir>/checkpoint.json (mode, conditioning, image_size, scale, seed,
// optimizer state file), <dir>/optimizer.kganp (adam moments, if any).
void save_checkpoint(const GanModel& model, const std::string& dir);
GanModel load_checkpoint(const std::string& dir_or_sidecar);

}  // namespace kgan
