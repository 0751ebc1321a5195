#include "pointcopy/cli/commands.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "pointcopy/analysis/csv.hpp"
#include "pointcopy/analysis/grounding.hpp"
#include "pointcopy/analysis/metrics.hpp"
#include "pointcopy/data/dataset.hpp"
#include "pointcopy/data/filter.hpp"
#include "pointcopy/data/grid.hpp"
#include "pointcopy/data/vocab.hpp"
#include "pointcopy/decode/evaluate.hpp"
#include "pointcopy/error.hpp"
#include "pointcopy/numerics/checkpoint.hpp"

namespace pointcopy {
namespace {

using ordered_json = nlohmann::ordered_json;

TaskKind kind_for(const RunConfig& cfg, std::size_t index) {
  if (cfg.data.task == "mixed") {
    static constexpr TaskKind kinds[] = {TaskKind::kLookup, TaskKind::kCompare, TaskKind::kCount};
    return kinds[index % 3];
  }
  return *parse_task_kind(cfg.data.task);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return kExitShape;
  if (dynamic_cast<const TrainingError*>(&e) || dynamic_cast<const GroundingError*>(&e)) return kExitNumeric;
  return kExitUsage;
}

std::uint64_t trace_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

GenDataStats cmd_gen_data(const RunConfig& cfg, std::size_t n, std::uint64_t seed,
                          const std::filesystem::path& out, std::ostream& log) {
  if (n == 0) throw InputError("gen-data needs n >= 1");
  const TaskOptions opts = task_options(cfg);
  std::ofstream f = open_out(out);
  GenDataStats stats;
  while (stats.written < n) {
    const std::size_t i = stats.attempted++;
    FilterResult res = filter_trace(synthesize_raw(trace_seed(seed, i), opts, kind_for(cfg, i)));
    if (!res.kept) {
      spdlog::debug("trace {} rejected: {}", i, reason_name(*res.reason));
      continue;
    }
    f << trace_to_json_line(*res.kept) << '\n';
    ++stats.written;
  }
  if (!f.flush()) throw IoError("failed writing " + out.string());
  log << "retained " << stats.written << " of " << stats.attempted << " traces\n";
  return stats;
}

void save_training_checkpoint(const std::filesystem::path& path, const Model& model, const OptimState& opt) {
  std::vector<NamedTensor> records = model.records();
  for (NamedTensor& r : optimizer_records(opt)) records.push_back(std::move(r));
  save_checkpoint(path, records);
}

Model load_model(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
  return Model::from_records(cfg.model, load_checkpoint(checkpoint));
}

void cmd_train(const RunConfig& cfg, const TrainOptions& opts, std::ostream& log) {
  const std::vector<GroundedTrace> data = read_dataset(opts.data);
  if (data.empty()) throw InputError("dataset " + opts.data.string() + " is empty");

  Model model(cfg.model, opts.init_seed);
  OptimState opt;
  if (opts.resume) {
    const auto records = load_checkpoint(*opts.resume);
    model = Model::from_records(cfg.model, records);
    restore_optimizer(opt, records);
    spdlog::info("resuming from step {}", opt.step);
  }

  std::ofstream metrics;
  if (!cfg.paths.metrics.empty()) metrics = open_out(cfg.paths.metrics);

  train(model, opt, data, cfg.train, cfg.zloss, [&](const StepLog& s) {
    ordered_json j;
    j["step"] = s.step;
    j["epoch"] = s.epoch;
    j["loss"] = s.report.total;
    j["ce"] = s.report.ce;
    j["zloss"] = s.report.zloss;
    j["ptr_acc"] = s.report.ptr_total == 0 ? 0.0
                                           : static_cast<double>(s.report.ptr_correct) /
                                                 static_cast<double>(s.report.ptr_total);
    const std::string line = j.dump();
    log << line << '\n';
    if (metrics.is_open()) metrics << line << '\n';
  }, opts.max_steps);

  save_training_checkpoint(opts.out, model, opt);
  spdlog::info("wrote {} after {} steps", opts.out.string(), opt.step);
}

void cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& out) {
  const Model model = load_model(cfg, opts.checkpoint);
  std::vector<GroundedTrace> data = read_dataset(opts.data);
  if (opts.limit != 0 && data.size() > opts.limit) data.resize(opts.limit);
  DecodeConfig dc = decode_config(cfg);
  dc.pointing = !opts.no_pointing;
  const EvalReport rep = evaluate_decoding(model, data, dc);
  ordered_json j;
  j["tasks"] = rep.tasks;
  j["pointing"] = dc.pointing;
  j["answer_accuracy"] = rep.answer_accuracy();
  j["pointer_accuracy"] = rep.pointer_accuracy();
  j["exact_accuracy"] = rep.exact_accuracy();
  j["answers_correct"] = rep.answers_correct;
  j["ptr_correct"] = rep.ptr_correct;
  j["ptr_total"] = rep.ptr_total;
  out << j.dump() << '\n';
}

GroundedTrace resolve_task(const RunConfig& cfg, const TaskSource& src) {
  if (src.data) {
    std::vector<GroundedTrace> data = read_dataset(*src.data);
    if (src.index >= data.size()) {
      throw InputError("index " + std::to_string(src.index) + " outside dataset of " +
                       std::to_string(data.size()) + " traces");
    }
    return std::move(data[src.index]);
  }
  return synthesize_task(src.seed, task_options(cfg), kind_for(cfg, src.index));
}

void cmd_decode(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                bool no_pointing, std::ostream& out) {
  const Model model = load_model(cfg, checkpoint);
  const GroundedTrace task = resolve_task(cfg, src);
  DecodeConfig dc = decode_config(cfg);
  dc.pointing = !no_pointing;
  if (dc.max_new == 0) dc.max_new = task.target.size() + 4;
  const DecodeResult res = decode(model, task.prompt, task.patches, dc);
  for (std::size_t t = 0; t < res.steps.size(); ++t) out << transcript_line(t, res.steps[t]) << '\n';
}

void cmd_analyze(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                 bool no_pointing, const std::filesystem::path& out_csv) {
  const Model model = load_model(cfg, checkpoint);
  const GroundedTrace task = resolve_task(cfg, src);
  DecodeConfig dc = decode_config(cfg);
  dc.record_attention = true;
  dc.pointing = !no_pointing;
  if (dc.max_new == 0) dc.max_new = task.target.size() + 4;
  const DecodeResult res = decode(model, task.prompt, task.patches, dc);
  const AttentionRecord& rec = res.attention;

  std::vector<std::size_t> bbox;
  if (!task.objects.empty()) bbox = bbox_to_patch_indices(task.objects.front().bbox, task.patches.grid);
  const DecaySeries decay = decay_series(rec, bbox);

  std::vector<Series> columns;
  for (std::size_t l = 0; l < rec.layer_count; ++l) {
    columns.push_back(decay.cumulative[l]);
    if (!decay.ratio.empty()) columns.push_back(decay.ratio[l]);
    CopyAttention ca;
    try {
      ca = copy_vs_input_attention(rec, l);
    } catch (const InputError&) {
      // No copies in this decode: both series are zero at every step.
      ca.input = Series{"input_of_copied", l, {}, {}};
      ca.copy = Series{"copy", l, {}, {}};
      for (const AttentionStep& s : rec.steps) {
        ca.input.steps.push_back(s.step);
        ca.input.values.push_back(0.0);
      }
      ca.copy.steps = ca.input.steps;
      ca.copy.values = ca.input.values;
    }
    columns.push_back(std::move(ca.input));
    columns.push_back(std::move(ca.copy));
  }
  emit_csv(columns, out_csv);
}

std::vector<TokenId> parse_prompt_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<TokenId> out;
  std::string w;
  while (in >> w) {
    const auto id = vocab::lookup(w);
    if (!id) throw InputError("unknown prompt word '" + w + "'");
    out.push_back(*id);
  }
  if (out.empty()) throw InputError("prompt is empty");
  return out;
}

BBox cmd_ground(const RunConfig& cfg, const std::filesystem::path& checkpoint, const TaskSource& src,
                const std::string& description, const std::string& baseline, std::ostream& out) {
  const Model model = load_model(cfg, checkpoint);
  const GroundedTrace task = resolve_task(cfg, src);
  const auto desc = parse_prompt_words(description);
  const auto base = parse_prompt_words(baseline);
  const GroundingResult res = attention_contrast_bbox(model, task.patches, desc, base, cfg.ground);
  out << res.bbox.x0 << ',' << res.bbox.y0 << ',' << res.bbox.x1 << ',' << res.bbox.y1 << '\n';
  return res.bbox;
}

}  // namespace pointcopy
