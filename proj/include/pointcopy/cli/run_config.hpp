#pragma once

// Run configuration shared by every subcommand. Stored as YAML with the
// sections model, train, decode, zloss, data, ground and paths; any key may be
// overridden from the command line as "section.key=value".

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pointcopy/analysis/grounding.hpp"
#include "pointcopy/data/tasks.hpp"
#include "pointcopy/decode/decode.hpp"
#include "pointcopy/model/model.hpp"
#include "pointcopy/model/trainer.hpp"
#include "pointcopy/pointer/pointer.hpp"

namespace pointcopy {

struct DecodeSettings {
  double copy_budget_ratio = 0.6;
  std::size_t max_copies_per_patch = 2;
  std::string policy = "argmax";  // argmax | sample
  double temperature = 1.0;
  std::size_t max_new = 0;        // 0: enough for the gold target plus slack
  std::uint64_t seed = 0;
};

struct DataSettings {
  std::string task = "lookup";  // lookup | compare | count | mixed
  std::size_t grid_rows = 4;
  std::size_t grid_cols = 4;
  std::size_t patch_px = 16;
  double noise_sigma = 0.1;
};

struct PathSettings {
  std::string metrics;  // JSONL training log; empty disables the file copy
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DecodeSettings decode;
  ZLossConfig zloss;
  DataSettings data;
  GroundingConfig ground;
  PathSettings paths;
};

// Throws ParseError on malformed YAML and InputError on unknown keys or
// invalid values.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view yaml_text);
RunConfig default_run_config();

// "section.key=value"; values are parsed as YAML scalars or flow sequences.
void apply_override(RunConfig& cfg, std::string_view assignment);
std::string dump_run_config(const RunConfig& cfg);

void validate(const RunConfig& cfg);

DecodeConfig decode_config(const RunConfig& cfg);
TaskOptions task_options(const RunConfig& cfg);

}  // namespace pointcopy
