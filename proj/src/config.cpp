#include "kgan/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace kgan {

using nlohmann::json;

const char* to_string(GanMode mode) {
  return mode == GanMode::kStandard ? "standard" : "wasserstein";
}

const char* to_string(Conditioning c) {
  return c == Conditioning::kImage ? "image" : "noise";
}

const char* to_string(OptimKind o) { return o == OptimKind::kAdam ? "adam" : "sgd"; }

namespace {

GanMode mode_from_string(const std::string& s) {
  if (s == "standard") return GanMode::kStandard;
  if (s == "wasserstein") return GanMode::kWasserstein;
  throw ConfigError("unknown mode '" + s + "' (use standard|wasserstein)");
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "image") return Conditioning::kImage;
  if (s == "noise") return Conditioning::kNoise;
  throw ConfigError("unknown conditioning '" + s + "' (use image|noise)");
}

OptimKind optim_from_string(const std::string& s) {
  if (s == "adam") return OptimKind::kAdam;
  if (s == "sgd") return OptimKind::kSgd;
  throw ConfigError("unknown optimizer '" + s + "' (use adam|sgd)");
}

// Strict object view: every lookup is recorded, leftovers are an error.
struct StrictObject {
  const json& obj;
  std::string where;
  std::set<std::string> seen;

  StrictObject(const json& o, std::string w) : obj(o), where(std::move(w)) {
    if (!o.is_object()) throw ConfigError(where + ": expected a JSON object");
  }

  const json* find(const std::string& key) {
    seen.insert(key);
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& into) {
    if (const json* v = find(key)) {
      try {
        into = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
      }
    }
  }

  void finish() const {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!seen.count(it.key()))
        throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
};

void parse_run(StrictObject& o, RunConfig& run) {
  std::string mode = to_string(run.mode);
  std::string conditioning = to_string(run.conditioning);
  std::string optimizer = to_string(run.train.optimizer);
  const bool has_d_steps = o.obj.contains("d_steps_per_g_step");
  o.get("mode", mode);
  o.get("conditioning", conditioning);
  o.get("optimizer", optimizer);
  run.mode = mode_from_string(mode);
  run.conditioning = conditioning_from_string(conditioning);
  run.train.optimizer = optim_from_string(optimizer);
  if (run.mode == GanMode::kWasserstein && !has_d_steps)
    run.train.d_steps_per_g_step = 5;  // the usual critic/generator ratio
  o.get("epochs", run.train.epochs);
  o.get("batch_size", run.train.batch_size);
  o.get("lr_g", run.train.lr_g);
  o.get("lr_d", run.train.lr_d);
  o.get("adam_beta1", run.train.adam_beta1);
  o.get("adam_beta2", run.train.adam_beta2);
  o.get("adam_eps", run.train.adam_eps);
  o.get("clip_w", run.train.clip_w);
  o.get("d_steps_per_g_step", run.train.d_steps_per_g_step);
  o.get("seed", run.train.seed);
  o.get("augment", run.train.augment);
}

json run_to_json(const RunConfig& run) {
  json j;
  j["mode"] = to_string(run.mode);
  j["conditioning"] = to_string(run.conditioning);
  j["optimizer"] = to_string(run.train.optimizer);
  j["epochs"] = run.train.epochs;
  j["batch_size"] = run.train.batch_size;
  j["lr_g"] = run.train.lr_g;
  j["lr_d"] = run.train.lr_d;
  j["adam_beta1"] = run.train.adam_beta1;
  j["adam_beta2"] = run.train.adam_beta2;
  j["adam_eps"] = run.train.adam_eps;
  j["clip_w"] = run.train.clip_w;
  j["d_steps_per_g_step"] = run.train.d_steps_per_g_step;
  j["seed"] = run.train.seed;
  j["augment"] = run.train.augment;
  return j;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.teacher.train.seed = 7;
  cfg.student.train.seed = 8;
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg = defaults();
  StrictObject top(root, "config");
  top.get("out_dir", cfg.out_dir);

  if (const json* j = top.find("data")) {
    StrictObject o(*j, "data");
    o.get("size", cfg.data.size);
    o.get("n_pairs", cfg.data.n_pairs);
    o.get("master_seed", cfg.data.master_seed);
    o.get("train_fraction", cfg.data.train_fraction);
    o.finish();
  }
  if (const json* j = top.find("teacher")) {
    StrictObject o(*j, "teacher");
    parse_run(o, cfg.teacher);
    o.finish();
  }
  if (const json* j = top.find("student")) {
    StrictObject o(*j, "student");
    parse_run(o, cfg.student);
    o.get("temperature", cfg.distill.temperature);
    o.get("alpha", cfg.distill.alpha);
    o.get("beta", cfg.distill.beta);
    o.get("gamma", cfg.distill.gamma);
    o.get("scale", cfg.distill.scale);
    o.finish();
  }
  if (const json* j = top.find("eval")) {
    StrictObject o(*j, "eval");
    o.get("checkpoint", cfg.eval_checkpoint);
    o.finish();
  }
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  json root;
  root["out_dir"] = out_dir;
  root["data"] = {{"size", data.size},
                  {"n_pairs", data.n_pairs},
                  {"master_seed", data.master_seed},
                  {"train_fraction", data.train_fraction}};
  root["teacher"] = run_to_json(teacher);
  json student_j = run_to_json(student);
  student_j["temperature"] = distill.temperature;
  student_j["alpha"] = distill.alpha;
  student_j["beta"] = distill.beta;
  student_j["gamma"] = distill.gamma;
  student_j["scale"] = distill.scale;
  root["student"] = student_j;
  root["eval"] = {{"checkpoint", eval_checkpoint}};
  return root.dump(2) + "\n";
}

void ExperimentConfig::override_seeds(std::uint64_t seed) {
  data.master_seed = seed;
  teacher.train.seed = seed;
  student.train.seed = seed;
}

void ExperimentConfig::validate() const {
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (!phantom_size_supported(data.size))
    throw ConfigError("data.size " + std::to_string(data.size) +
                      " unsupported (use 8/16/32/64/128/256)");
  if (data.n_pairs < 3) throw ConfigError("data.n_pairs must be >= 3");
  if (!(data.train_fraction > 0.0) || !(data.train_fraction < 1.0))
    throw ConfigError("data.train_fraction must lie in (0, 1)");
  try {
    teacher.train.validate(teacher.mode);
    student.train.validate(student.mode);
    distill.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (eval_checkpoint.empty()) throw ConfigError("eval.checkpoint must not be empty");
}

}  // namespace kgan
