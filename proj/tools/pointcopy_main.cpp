#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pointcopy/cli/commands.hpp"
#include "pointcopy/error.hpp"

using namespace pointcopy;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("pointcopy");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("POINTCOPY_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

void add_task_source(CLI::App* cmd, TaskSource& src, std::string& data) {
  cmd->add_option("--data", data, "dataset to take the task from");
  cmd->add_option("--index", src.index, "line of the dataset (or task kind slot when synthesising)");
  cmd->add_option("--task-seed", src.seed, "seed for a synthesised task when --data is absent");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"pointcopy: point-and-copy decoding over image patches"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config value, section.key=value")->allow_extra_args(false);

  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "generate a filtered synthetic dataset");
  gen->add_option("-n,--count", gen_n, "number of traces")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("-o,--out", gen_out, "output JSONL")->required();

  TrainOptions topts;
  std::string train_data, train_out, train_resume;
  auto* tr = app.add_subcommand("train", "train a model on a dataset");
  tr->add_option("--data", train_data, "training JSONL")->required();
  tr->add_option("-o,--out", train_out, "checkpoint to write")->required();
  tr->add_option("--resume", train_resume, "checkpoint to continue from");
  tr->add_option("--max-steps", topts.max_steps, "stop after this many optimiser steps in total");
  tr->add_option("--init-seed", topts.init_seed, "parameter initialisation seed");

  EvalOptions eopts;
  std::string eval_ckpt, eval_data;
  auto* ev = app.add_subcommand("eval", "decode a dataset and report accuracy");
  ev->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  ev->add_option("--data", eval_data, "evaluation JSONL")->required();
  ev->add_flag("--no-pointing", eopts.no_pointing, "mask every pointer logit");
  ev->add_option("--limit", eopts.limit, "evaluate at most this many traces");

  std::string dec_ckpt, dec_data;
  TaskSource dec_src;
  bool dec_no_pointing = false;
  auto* dec = app.add_subcommand("decode", "decode one task and print a JSONL transcript");
  dec->add_option("--checkpoint", dec_ckpt, "model checkpoint")->required();
  add_task_source(dec, dec_src, dec_data);
  dec->add_flag("--no-pointing", dec_no_pointing, "mask every pointer logit");

  std::string an_ckpt, an_data, an_out;
  TaskSource an_src;
  bool an_no_pointing = false;
  auto* an = app.add_subcommand("analyze", "write attention decay and copy metrics as CSV");
  an->add_option("--checkpoint", an_ckpt, "model checkpoint")->required();
  add_task_source(an, an_src, an_data);
  an->add_option("-o,--out", an_out, "CSV to write")->required();
  an->add_flag("--no-pointing", an_no_pointing, "mask every pointer logit");

  std::string gr_ckpt, gr_data, gr_desc, gr_base;
  TaskSource gr_src;
  auto* gr = app.add_subcommand("ground", "locate a described object by attention contrast");
  gr->add_option("--checkpoint", gr_ckpt, "model checkpoint")->required();
  add_task_source(gr, gr_src, gr_data);
  gr->add_option("--description", gr_desc, "prompt naming the object, e.g. \"<bos> lookup row2 col3 ?\"")->required();
  gr->add_option("--baseline", gr_base, "the same prompt with the object removed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);

    if (*gen) {
      cmd_gen_data(cfg, gen_n, gen_seed, gen_out, std::cout);
    } else if (*tr) {
      topts.data = train_data;
      topts.out = train_out;
      if (!train_resume.empty()) topts.resume = train_resume;
      cmd_train(cfg, topts, std::cout);
    } else if (*ev) {
      eopts.checkpoint = eval_ckpt;
      eopts.data = eval_data;
      cmd_eval(cfg, eopts, std::cout);
    } else if (*dec) {
      if (!dec_data.empty()) dec_src.data = dec_data;
      cmd_decode(cfg, dec_ckpt, dec_src, dec_no_pointing, std::cout);
    } else if (*an) {
      if (!an_data.empty()) an_src.data = an_data;
      cmd_analyze(cfg, an_ckpt, an_src, an_no_pointing, an_out);
    } else if (*gr) {
      if (!gr_data.empty()) gr_src.data = gr_data;
      cmd_ground(cfg, gr_ckpt, gr_src, gr_desc, gr_base, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}
