#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pointcopy/cli/run_config.hpp"
#include "pointcopy/data/trace.hpp"
#include "pointcopy/model/model.hpp"

namespace pointcopy {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumeric = 3, kExitShape = 4 };

// Maps the library's exception types onto the exit-code contract.
int exit_code_for(const std::exception& e);

// Per-trace seed for data generation: a splitmix64 step from (seed, index).
std::uint64_t trace_seed(std::uint64_t seed, std::size_t index);

struct GenDataStats {
  std::size_t written = 0;
  std::size_t attempted = 0;
};
GenDataStats cmd_gen_data(const RunConfig& cfg, std::size_t n, std::uint64_t seed,
                          const std::filesystem::path& out, std::ostream& log);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  std::size_t max_steps = 0;  // 0: full schedule
  std::uint64_t init_seed = 0;
};
// Writes one JSON line per optimiser step to `log` (and cfg.paths.metrics).
void cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log);

// Checkpoint holds model parameters plus optimiser state.
void save_training_checkpoint(const std::filesystem::path& path, const Model& model, const OptimState& opt);
Model load_model(const RunConfig& cfg, const std::filesystem::path& checkpoint);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data;
  bool no_pointing = false;
  std::size_t limit = 0;  // 0: every trace
};
// Prints one JSON object with answer and pointer accuracy.
void cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& out);

// Source of the trace a single-task command works on: line `index` of a
// dataset, or a freshly synthesised task.
struct TaskSource {
  std::optional<std::filesystem::path> data;
  std::size_t index = 0;
  std::uint64_t seed = 0;
};
GroundedTrace resolve_task(const RunConfig& cfg, const TaskSource& src);

// Transcript JSON lines, one per emitted token.
void cmd_decode(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                bool no_pointing, std::ostream& out);

// Decodes the task with attention recording and writes the decay and copy
// metrics for every layer as one CSV.
void cmd_analyze(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                 bool no_pointing, const std::filesystem::path& out_csv);

// Prints "x0,y0,x1,y1". Prompts are whitespace separated vocabulary words.
BBox cmd_ground(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                const std::string& description, const std::string& baseline, std::ostream& out);

std::vector<TokenId> parse_prompt_words(const std::string& text);

}  // namespace pointcopy
