#include "pointcopy/cli/run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pointcopy/error.hpp"

namespace pointcopy {
namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const YAML::Node&)> set;
  std::function<void(const RunConfig&, YAML::Emitter&)> emit;
};

template <typename T>
T as(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw InputError("invalid value for " + where);
  }
}

template <typename T, typename Get>
Field field(std::string section, std::string key, Get get) {
  const std::string where = section + "." + key;
  return Field{section, key,
               [get, where](RunConfig& c, const YAML::Node& n) { get(c) = as<T>(n, where); },
               [get](const RunConfig& c, YAML::Emitter& e) {
                 if constexpr (std::is_same_v<T, std::vector<double>> ||
                               std::is_same_v<T, std::vector<std::size_t>>) {
                   e << YAML::Flow;
                 }
                 e << get(const_cast<RunConfig&>(c));
               }};
}

const std::vector<Field>& fields() {
  using Sz = std::size_t;
  static const std::vector<Field> all = {
      field<Sz>("model", "layers", [](RunConfig& c) -> Sz& { return c.model.layers; }),
      field<Sz>("model", "dim", [](RunConfig& c) -> Sz& { return c.model.dim; }),
      field<Sz>("model", "heads", [](RunConfig& c) -> Sz& { return c.model.heads; }),
      field<Sz>("model", "vocab", [](RunConfig& c) -> Sz& { return c.model.vocab; }),
      field<Sz>("model", "max_seq", [](RunConfig& c) -> Sz& { return c.model.max_seq; }),
      field<Sz>("model", "patch_features", [](RunConfig& c) -> Sz& { return c.model.patch_features; }),
      field<double>("train", "lr", [](RunConfig& c) -> double& { return c.train.lr; }),
      field<Sz>("train", "batch", [](RunConfig& c) -> Sz& { return c.train.batch; }),
      field<Sz>("train", "grad_accum", [](RunConfig& c) -> Sz& { return c.train.grad_accum; }),
      field<Sz>("train", "epochs", [](RunConfig& c) -> Sz& { return c.train.epochs; }),
      field<std::uint64_t>("train", "seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }),
      field<double>("train", "weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; }),
      field<double>("decode", "copy_budget_ratio", [](RunConfig& c) -> double& { return c.decode.copy_budget_ratio; }),
      field<Sz>("decode", "max_copies_per_patch", [](RunConfig& c) -> Sz& { return c.decode.max_copies_per_patch; }),
      field<std::string>("decode", "policy", [](RunConfig& c) -> std::string& { return c.decode.policy; }),
      field<double>("decode", "temperature", [](RunConfig& c) -> double& { return c.decode.temperature; }),
      field<Sz>("decode", "max_new", [](RunConfig& c) -> Sz& { return c.decode.max_new; }),
      field<std::uint64_t>("decode", "seed", [](RunConfig& c) -> std::uint64_t& { return c.decode.seed; }),
      field<Sz>("zloss", "k", [](RunConfig& c) -> Sz& { return c.zloss.k; }),
      field<double>("zloss", "lambda", [](RunConfig& c) -> double& { return c.zloss.lambda; }),
      field<bool>("zloss", "squared", [](RunConfig& c) -> bool& { return c.zloss.squared; }),
      field<std::string>("data", "task", [](RunConfig& c) -> std::string& { return c.data.task; }),
      field<Sz>("data", "grid_rows", [](RunConfig& c) -> Sz& { return c.data.grid_rows; }),
      field<Sz>("data", "grid_cols", [](RunConfig& c) -> Sz& { return c.data.grid_cols; }),
      field<Sz>("data", "patch_px", [](RunConfig& c) -> Sz& { return c.data.patch_px; }),
      field<double>("data", "noise_sigma", [](RunConfig& c) -> double& { return c.data.noise_sigma; }),
      field<std::vector<Sz>>("ground", "layers", [](RunConfig& c) -> std::vector<Sz>& { return c.ground.layers; }),
      field<std::vector<double>>("ground", "crop_ratios",
                                 [](RunConfig& c) -> std::vector<double>& { return c.ground.crop_ratios; }),
      field<double>("ground", "eps", [](RunConfig& c) -> double& { return c.ground.eps; }),
      field<std::string>("paths", "metrics", [](RunConfig& c) -> std::string& { return c.paths.metrics; }),
  };
  return all;
}

const Field& find_field(std::string_view section, std::string_view key) {
  for (const Field& f : fields()) {
    if (f.section == section && f.key == key) return f;
  }
  throw InputError("unknown config key '" + std::string(section) + "." + std::string(key) + "'");
}

RunConfig from_node(const YAML::Node& root) {
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  if (!root.IsMap()) throw InputError("config root must be a mapping");
  for (const auto& sec : root) {
    const auto section = sec.first.as<std::string>();
    if (!sec.second.IsMap()) throw InputError("config section '" + section + "' must be a mapping");
    for (const auto& kv : sec.second) find_field(section, kv.first.as<std::string>()).set(cfg, kv.second);
  }
  validate(cfg);
  return cfg;
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

RunConfig parse_run_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1));
  }
  return from_node(root);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw InputError("override must look like section.key=value, got '" + std::string(assignment) + "'");
  }
  const Field& f = find_field(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1));
  YAML::Node value;
  try {
    value = YAML::Load(std::string(assignment.substr(eq + 1)));
  } catch (const YAML::ParserException&) {
    throw InputError("cannot parse override '" + std::string(assignment) + "'");
  }
  if (!value.IsDefined() || value.IsNull()) value = YAML::Node(std::string());
  RunConfig next = cfg;
  f.set(next, value);
  validate(next);
  cfg = std::move(next);
}

std::string dump_run_config(const RunConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  std::string open;
  for (const Field& f : fields()) {
    if (f.section != open) {
      if (!open.empty()) e << YAML::EndMap;
      e << YAML::Key << f.section << YAML::Value << YAML::BeginMap;
      open = f.section;
    }
    e << YAML::Key << f.key << YAML::Value;
    f.emit(cfg, e);
  }
  e << YAML::EndMap << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

void validate(const RunConfig& cfg) {
  cfg.model.validate();
  const auto positive = [](bool ok, const char* what) {
    if (!ok) throw InputError(std::string(what) + " must be positive");
  };
  positive(cfg.train.lr >= 0.0, "train.lr");
  positive(cfg.train.batch > 0, "train.batch");
  positive(cfg.train.grad_accum > 0, "train.grad_accum");
  positive(cfg.train.epochs > 0, "train.epochs");
  if (cfg.train.weight_decay < 0.0) throw InputError("train.weight_decay must be non-negative");
  positive(cfg.decode.copy_budget_ratio > 0.0, "decode.copy_budget_ratio");
  positive(cfg.decode.max_copies_per_patch > 0, "decode.max_copies_per_patch");
  positive(cfg.decode.temperature > 0.0, "decode.temperature");
  if (cfg.decode.policy != "argmax" && cfg.decode.policy != "sample") {
    throw InputError("decode.policy must be argmax or sample");
  }
  positive(cfg.zloss.k > 0, "zloss.k");
  if (cfg.zloss.lambda < 0.0) throw InputError("zloss.lambda must be non-negative");
  if (cfg.data.task != "mixed" && !parse_task_kind(cfg.data.task)) {
    throw InputError("data.task must be lookup, compare, count or mixed");
  }
  positive(cfg.data.patch_px > 0, "data.patch_px");
  if (cfg.data.noise_sigma < 0.0) throw InputError("data.noise_sigma must be non-negative");
  if (cfg.data.grid_rows < 2 || cfg.data.grid_cols < 2 || cfg.data.grid_rows > kMaxGridSide ||
      cfg.data.grid_cols > kMaxGridSide) {
    throw InputError("data grid must be between 2 and " + std::to_string(kMaxGridSide) + " per side");
  }
  if (cfg.ground.crop_ratios.empty()) throw InputError("ground.crop_ratios must not be empty");
  for (double r : cfg.ground.crop_ratios) positive(r > 0.0 && r <= 1.0, "ground.crop_ratios entries");
  for (std::size_t l : cfg.ground.layers) {
    if (l >= cfg.model.layers) throw InputError("ground.layers entry out of range");
  }
  positive(cfg.ground.eps > 0.0, "ground.eps");
}

DecodeConfig decode_config(const RunConfig& cfg) {
  DecodeConfig d;
  d.max_new = cfg.decode.max_new;
  d.policy.kind = cfg.decode.policy == "sample" ? SelectPolicy::Kind::kSample : SelectPolicy::Kind::kArgmax;
  d.policy.temperature = cfg.decode.temperature;
  d.seed = cfg.decode.seed;
  d.copy_budget_ratio = cfg.decode.copy_budget_ratio;
  d.max_copies_per_patch = cfg.decode.max_copies_per_patch;
  return d;
}

TaskOptions task_options(const RunConfig& cfg) {
  TaskOptions o;
  o.grid = GridGeometry{cfg.data.grid_rows, cfg.data.grid_cols, cfg.data.patch_px};
  o.noise_sigma = cfg.data.noise_sigma;
  return o;
}

}  // namespace pointcopy
