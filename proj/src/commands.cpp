#include "kgan/commands.hpp"

#include "kgan/distill.hpp"
#include "kgan/metrics.hpp"
#include "kgan/plot.hpp"
#include "kgan/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace kgan {

using nlohmann::json;

const char* role_name(Role role) {
  return role == Role::kTeacher ? "teacher" : "student";
}

std::string dataset_dir(const ExperimentConfig& cfg) {
  return (fs::path(cfg.out_dir) / "data").string();
}

std::string run_dir(const ExperimentConfig& cfg, Role role) {
  return (fs::path(cfg.out_dir) / role_name(role)).string();
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_config_copy(const ExperimentConfig& cfg, const std::string& dir) {
  write_text((fs::path(dir) / "config.json").string(), cfg.to_json_text());
}

void refuse_unless_force(const std::string& path, bool force) {
  if (!force && fs::exists(path))
    throw ConfigError(path + " already exists; pass --force to overwrite");
}

// Optimizer moments stored in the parameter container format; `t` rides
// along as a one-element tensor.
void append_adam(ParameterSet& out, const AdamState& st, const ParameterSet& params,
                 const std::string& prefix) {
  if (st.m.empty()) return;
  out.add(prefix + "step", full({1}, static_cast<double>(st.t)));
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    out.add(prefix + params.items[i].first + ".m",
            Tensor(params.items[i].second.shape, st.m[i]));
    out.add(prefix + params.items[i].first + ".v",
            Tensor(params.items[i].second.shape, st.v[i]));
  }
}

void restore_adam(const ParameterSet& stored, AdamState& st, const ParameterSet& params,
                  const std::string& prefix) {
  if (!stored.has(prefix + "step")) return;
  st.t = static_cast<long>(stored.at(prefix + "step").scalar());
  st.m.clear();
  st.v.clear();
  for (const auto& [name, t] : params.items) {
    st.m.push_back(stored.at(prefix + name + ".m").data);
    st.v.push_back(stored.at(prefix + name + ".v").data);
  }
}

}  // namespace

void save_checkpoint(const GanModel& model, const std::string& dir) {
  fs::create_directories(dir);
  ParameterSet all;
  for (const auto& [name, t] : model.gen_params.items) all.add("g." + name, t);
  for (const auto& [name, t] : model.disc_params.items) all.add("d." + name, t);
  save_params(all, (fs::path(dir) / "checkpoint.kganp").string());

  ParameterSet opt;
  append_adam(opt, model.opt_g, model.gen_params, "g.");
  append_adam(opt, model.opt_d, model.disc_params, "d.");
  const bool has_opt = !opt.items.empty();
  if (has_opt) save_params(opt, (fs::path(dir) / "optimizer.kganp").string());

  json side;
  side["mode"] = to_string(model.mode);
  side["conditioning"] = to_string(model.conditioning);
  side["image_size"] = model.image_size;
  side["scale"] = model.scale;
  side["seed"] = model.seed;
  side["params_file"] = "checkpoint.kganp";
  side["optimizer_state_file"] = has_opt ? "optimizer.kganp" : "";
  write_text((fs::path(dir) / "checkpoint.json").string(), side.dump(2) + "\n");
}

GanModel load_checkpoint(const std::string& dir_or_sidecar) {
  fs::path side_path(dir_or_sidecar);
  if (fs::is_directory(side_path)) side_path /= "checkpoint.json";
  std::ifstream in(side_path);
  if (!in)
    throw std::runtime_error("missing checkpoint sidecar: " + side_path.string());
  json side;
  try {
    in >> side;
  } catch (const json::exception& e) {
    throw std::runtime_error(side_path.string() + ": " + e.what());
  }

  const int image_size = side.at("image_size").get<int>();
  const double scale = side.at("scale").get<double>();
  const std::uint64_t seed = side.at("seed").get<std::uint64_t>();
  GanModel model = build_student(image_size, seed, scale);
  const std::string mode = side.at("mode").get<std::string>();
  model.mode = mode == "wasserstein" ? GanMode::kWasserstein : GanMode::kStandard;
  const std::string cond = side.at("conditioning").get<std::string>();
  model.conditioning = cond == "noise" ? Conditioning::kNoise : Conditioning::kImage;

  const fs::path dir = side_path.parent_path();
  ParameterSet all =
      load_params((dir / side.at("params_file").get<std::string>()).string());
  for (auto& [name, t] : model.gen_params.items) {
    const Tensor& stored = all.at("g." + name);
    if (stored.shape != t.shape)
      throw std::runtime_error("checkpoint parameter g." + name +
                               " has unexpected shape");
    t = stored;
  }
  for (auto& [name, t] : model.disc_params.items) {
    const Tensor& stored = all.at("d." + name);
    if (stored.shape != t.shape)
      throw std::runtime_error("checkpoint parameter d." + name +
                               " has unexpected shape");
    t = stored;
  }

  const std::string opt_file = side.value("optimizer_state_file", std::string());
  if (!opt_file.empty() && fs::exists(dir / opt_file)) {
    ParameterSet opt = load_params((dir / opt_file).string());
    restore_adam(opt, model.opt_g, model.gen_params, "g.");
    restore_adam(opt, model.opt_d, model.disc_params, "d.");
  }
  return model;
}

int cmd_gen_data(const ExperimentConfig& cfg, bool force) {
  const std::string dir = dataset_dir(cfg);
  refuse_unless_force(manifest_path(dir), force);
  DatasetSplit split =
      make_split(cfg.data.n_pairs, cfg.data.size, cfg.data.master_seed,
                 cfg.data.train_fraction);
  write_dataset(split, dir);
  write_config_copy(cfg, dir);
  std::cout << "generated " << (split.train.size() + split.test.size()) << " pairs ("
            << split.train.size() << " train / " << split.test.size() << " test) in "
            << dir << "\n";
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, Role role, bool force, bool plot) {
  const std::string data_dir = dataset_dir(cfg);
  if (!fs::exists(manifest_path(data_dir)))
    throw ConfigError("dataset not found at " + manifest_path(data_dir) +
                      "; run gen-data first");
  DatasetSplit split = load_dataset(data_dir);

  const std::string dir = run_dir(cfg, role);
  refuse_unless_force((fs::path(dir) / "checkpoint.json").string(), force);
  fs::create_directories(dir);

  GanModel trained;
  TrainingHistory history;
  if (role == Role::kTeacher) {
    GanModel model = build_teacher(cfg.data.size, cfg.teacher.train.seed);
    model.mode = cfg.teacher.mode;
    model.conditioning = cfg.teacher.conditioning;
    std::tie(trained, history) = train_gan(std::move(model), split.train,
                                           cfg.teacher.train);
  } else {
    const std::string teacher_side =
        (fs::path(run_dir(cfg, Role::kTeacher)) / "checkpoint.json").string();
    if (!fs::exists(teacher_side))
      throw ConfigError("student training needs a teacher checkpoint at " +
                        teacher_side + "; run train-teacher first");
    GanModel teacher = load_checkpoint(teacher_side);
    GanModel student =
        build_student(cfg.data.size, cfg.student.train.seed, cfg.distill.scale);
    student.mode = cfg.student.mode;
    student.conditioning = cfg.student.conditioning;
    std::tie(trained, history) = train_student(teacher, std::move(student),
                                               split.train, cfg.student.train,
                                               cfg.distill);
  }

  save_checkpoint(trained, dir);
  write_history_csv(history, (fs::path(dir) / "history.csv").string());
  write_config_copy(cfg, dir);
  if (plot && !history.empty())
    render_history_plot(history, (fs::path(dir) / "history.pgm").string());

  std::cout << role_name(role) << ": " << history.size() << " epochs";
  if (!history.empty()) {
    const EpochRecord& last = history.back();
    std::cout << ", final loss_g=" << format_shortest(last.loss_g)
              << " loss_d=" << format_shortest(last.loss_d)
              << " D(real)=" << format_shortest(last.mean_d_real)
              << " D(fake)=" << format_shortest(last.mean_d_fake);
  }
  std::cout << "\n";
  return kExitOk;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint,
                 bool force) {
  const std::string choice = checkpoint.empty() ? cfg.eval_checkpoint : checkpoint;
  std::string side;
  std::string label;
  if (choice == "teacher" || choice == "student") {
    side = run_dir(cfg, choice == "teacher" ? Role::kTeacher : Role::kStudent);
    label = choice;
  } else {
    side = choice;
    label = "checkpoint";
  }
  if (!fs::exists(side))
    throw ConfigError("checkpoint not found: " + side);

  const std::string data_dir = dataset_dir(cfg);
  if (!fs::exists(manifest_path(data_dir)))
    throw ConfigError("dataset not found at " + manifest_path(data_dir) +
                      "; run gen-data first");
  DatasetSplit split = load_dataset(data_dir);
  if (split.test.empty()) throw ConfigError("dataset has no test split");

  GanModel model = load_checkpoint(side);
  MetricsReport report = evaluate(model, split.test);

  const std::string out_dir = (fs::path(cfg.out_dir) / ("eval-" + label)).string();
  const std::string csv_path = (fs::path(out_dir) / "metrics.csv").string();
  refuse_unless_force(csv_path, force);
  fs::create_directories(out_dir);
  write_metrics_csv(report, csv_path);
  write_config_copy(cfg, out_dir);

  std::cout << "SF=" << format_shortest(report.mean_sf)
            << " SSIM=" << format_shortest(report.mean_ssim)
            << " SCD=" << format_shortest(report.mean_scd) << "\n";
  return kExitOk;
}

int cmd_gradcheck(bool inject_fault) {
  GradcheckReport report = run_gradcheck_suite(inject_fault);
  print_gradcheck_report(report, std::cout);
  return report.all_pass ? kExitOk : kExitRuntime;
}

}  // namespace kgan
