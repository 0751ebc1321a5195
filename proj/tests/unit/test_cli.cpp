#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "pointcopy/cli/commands.hpp"
#include "pointcopy/cli/run_config.hpp"
#include "pointcopy/data/dataset.hpp"
#include "pointcopy/error.hpp"
#include "pointcopy/numerics/checkpoint.hpp"
#include "support/planted.hpp"

using namespace pointcopy;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pointcopy_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args, const TempDir& dir) {
  const fs::path out = dir / "stdout.txt";
  const std::string cmd = std::string(POINTCOPY_CLI_PATH) + " " + args + " > " + out.string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> json_lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

}  // namespace

TEST_CASE("run config parsing and overrides") {
  const RunConfig def = default_run_config();
  CHECK(def.train.lr == 3e-5);
  CHECK(def.train.batch == 2);
  CHECK(def.train.grad_accum == 4);
  CHECK(def.train.epochs == 5);
  CHECK(def.zloss.k == 40);
  CHECK(def.zloss.lambda == 1e-5);
  CHECK(def.decode.copy_budget_ratio == 0.6);

  const RunConfig c = parse_run_config("model:\n  dim: 32\ntrain:\n  lr: 0.001\nground:\n  crop_ratios: [0.1, 0.2]\n");
  CHECK(c.model.dim == 32);
  CHECK(c.train.lr == 0.001);
  CHECK(c.ground.crop_ratios == std::vector<double>{0.1, 0.2});

  RunConfig o = c;
  apply_override(o, "decode.policy=sample");
  CHECK(o.decode.policy == "sample");
  apply_override(o, "ground.layers=[0, 1]");
  CHECK(o.ground.layers == std::vector<std::size_t>{0, 1});
  CHECK_THROWS_AS(apply_override(o, "train.bogus=1"), InputError);
  CHECK_THROWS_AS(apply_override(o, "train.lr"), InputError);
  CHECK_THROWS_AS(apply_override(o, "train.batch=0"), InputError);
  CHECK_THROWS_AS(apply_override(o, "model.heads=5"), InputError);
  CHECK(o.train.batch == 2);

  CHECK_THROWS_AS(parse_run_config("nope:\n  x: 1\n"), InputError);
  CHECK_THROWS_AS(parse_run_config("model: [1, 2"), ParseError);
  CHECK(parse_run_config(dump_run_config(o)).ground.layers == o.ground.layers);
  CHECK(dump_run_config(parse_run_config(dump_run_config(o))) == dump_run_config(o));
}

TEST_CASE("gen-data is deterministic and validates its arguments") {
  TempDir dir;
  const auto a = dir / "a.jsonl";
  const auto b = dir / "b.jsonl";
  auto r = run("gen-data -n 10 --seed 7 -o " + a.string(), dir);
  CHECK(r.code == 0);
  CHECK(r.out.find("retained 10") != std::string::npos);
  CHECK(run("gen-data -n 10 --seed 7 -o " + b.string(), dir).code == 0);
  CHECK(read_dataset(a).size() == 10);
  CHECK(slurp(a) == slurp(b));

  CHECK(run("gen-data -n 0 -o " + a.string(), dir).code == 2);
  CHECK(run("gen-data -n 3 -o /nonexistent-dir/x.jsonl", dir).code == 2);
  CHECK(run("gen-data -o " + a.string(), dir).code == 2);
  CHECK(run("frobnicate", dir).code == 2);
  CHECK(run("--set bogus.key=1 gen-data -n 1 -o " + a.string(), dir).code == 2);
}

TEST_CASE("training memorises a single trace") {
  TempDir dir;
  REQUIRE(run("gen-data -n 1 --seed 3 -o " + (dir / "one.jsonl").string(), dir).code == 0);
  const auto r = run("train --data " + (dir / "one.jsonl").string() + " -o " + (dir / "m.ckpt").string() +
                         " --set train.lr=0.003 --set train.epochs=150 --set train.batch=1 --set train.grad_accum=1",
                     dir);
  REQUIRE(r.code == 0);
  const auto lines = json_lines(r.out);
  REQUIRE(lines.size() == 150);
  CHECK(lines.back()["loss"].get<double>() < 0.05);
  CHECK(lines.front().contains("ce"));
  CHECK(lines.front().contains("zloss"));
  CHECK(lines.front().contains("ptr_acc"));
  CHECK(fs::exists(dir / "m.ckpt"));
}

TEST_CASE("zero learning rate keeps the loss constant") {
  TempDir dir;
  REQUIRE(run("gen-data -n 4 --seed 5 -o " + (dir / "d.jsonl").string(), dir).code == 0);
  const auto r = run("train --data " + (dir / "d.jsonl").string() + " -o " + (dir / "m.ckpt").string() +
                         " --set train.lr=0 --set train.epochs=6 --set train.batch=4 --set train.grad_accum=1",
                     dir);
  REQUIRE(r.code == 0);
  const auto lines = json_lines(r.out);
  REQUIRE(lines.size() == 6);
  for (const auto& l : lines) {
    CHECK(std::abs(l["loss"].get<double>() - lines[0]["loss"].get<double>()) <= 1e-12);
  }
}

TEST_CASE("resumed training reproduces the uninterrupted run") {
  TempDir dir;
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(run("gen-data -n 24 --seed 9 -o " + data, dir).code == 0);
  const std::string common = " --set train.lr=0.002 --set train.epochs=2";
  const auto full = run("train --data " + data + " -o " + (dir / "full.ckpt").string() + common, dir);
  REQUIRE(full.code == 0);
  const auto part = run("train --data " + data + " -o " + (dir / "part.ckpt").string() + common + " --max-steps 4", dir);
  REQUIRE(part.code == 0);
  const auto rest = run("train --data " + data + " -o " + (dir / "rest.ckpt").string() + common + " --resume " +
                            (dir / "part.ckpt").string(),
                        dir);
  REQUIRE(rest.code == 0);
  const auto f = json_lines(full.out);
  const auto p = json_lines(part.out);
  const auto q = json_lines(rest.out);
  REQUIRE(f.size() == 6);
  REQUIRE(p.size() == 4);
  REQUIRE(q.size() == 2);
  CHECK(q[0]["step"] == 5);
  CHECK(std::abs(q[0]["loss"].get<double>() - f[4]["loss"].get<double>()) <= 1e-9);
  CHECK(std::abs(q[1]["loss"].get<double>() - f[5]["loss"].get<double>()) <= 1e-9);
}

TEST_CASE("numerical failure exits with 3") {
  TempDir dir;
  REQUIRE(run("gen-data -n 8 --seed 1 -o " + (dir / "d.jsonl").string(), dir).code == 0);
  const auto r = run("train --data " + (dir / "d.jsonl").string() + " -o " + (dir / "m.ckpt").string() +
                         " --set train.lr=1e300 --max-steps 5",
                     dir);
  CHECK(r.code == 3);
  CHECK(slurp(dir / "stderr.txt").find("step") != std::string::npos);
}

TEST_CASE("eval, decode and analyze") {
  TempDir dir;
  const std::string data = (dir / "d.jsonl").string();
  const std::string ckpt = (dir / "m.ckpt").string();
  REQUIRE(run("gen-data -n 16 --seed 2 -o " + data, dir).code == 0);
  REQUIRE(run("train --data " + data + " -o " + ckpt + " --max-steps 2", dir).code == 0);

  auto r = run("eval --checkpoint " + ckpt + " --data " + data, dir);
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["tasks"] == 16);
  CHECK(j["pointing"] == true);
  CHECK(j.contains("answer_accuracy"));
  CHECK(j.contains("pointer_accuracy"));
  r = run("eval --no-pointing --checkpoint " + ckpt + " --data " + data, dir);
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["pointer_accuracy"] == 0.0);

  CHECK(run("eval --checkpoint " + ckpt + " --data " + data + " --set model.dim=32", dir).code == 4);
  CHECK(run("eval --checkpoint " + (dir / "missing.ckpt").string() + " --data " + data, dir).code == 2);

  r = run("decode --checkpoint " + ckpt + " --data " + data + " --index 3", dir);
  REQUIRE(r.code == 0);
  const auto steps = json_lines(r.out);
  REQUIRE(!steps.empty());
  CHECK(steps[0]["t"] == 0);
  CHECK(steps[0]["logit_top5"].size() == 5);
  CHECK(run("decode --checkpoint " + ckpt + " --data " + data + " --index 99", dir).code == 2);

  const auto csv1 = dir / "a1.csv";
  const auto csv2 = dir / "a2.csv";
  REQUIRE(run("analyze --no-pointing --checkpoint " + ckpt + " --data " + data + " -o " + csv1.string(), dir).code == 0);
  REQUIRE(run("analyze --no-pointing --checkpoint " + ckpt + " --data " + data + " -o " + csv2.string(), dir).code == 0);
  const std::string text = slurp(csv1);
  CHECK(text == slurp(csv2));
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("step,cumulative_image.l0,bbox_ratio.l0,input_of_copied.l0,copy.l0", 0) == 0);
  std::vector<std::size_t> copy_cols;
  {
    std::istringstream hs(header);
    std::string cell;
    for (std::size_t i = 0; std::getline(hs, cell, ','); ++i) {
      if (cell.rfind("copy.", 0) == 0 || cell.rfind("input_of_copied.", 0) == 0) copy_cols.push_back(i);
    }
  }
  CHECK(copy_cols.size() == 4);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    for (std::size_t c : copy_cols) {
      REQUIRE(c < cells.size());
      CHECK(cells[c] == "0");
    }
  }
  CHECK(rows > 0);
  CHECK(run("analyze --checkpoint " + ckpt + " --data " + data + " -o /nonexistent-dir/x.csv", dir).code == 2);
}

TEST_CASE("ground prints the planted patch") {
  TempDir dir;
  const Model m = planted::model();
  save_checkpoint(dir / "planted.ckpt", m.records());
  const std::string sets =
      " --set model.heads=1 --set model.max_seq=80 --set data.grid_rows=8 --set data.grid_cols=8";
  const auto r = run("ground --checkpoint " + (dir / "planted.ckpt").string() + " --task-seed 4" + sets +
                         " --description \"<bos> lookup row2 col3 ?\" --baseline \"<bos> lookup ?\"",
                     dir);
  REQUIRE(r.code == 0);
  double x0, y0, x1, y1;
  char c1, c2, c3;
  std::istringstream in(r.out);
  in >> x0 >> c1 >> y0 >> c2 >> x1 >> c3 >> y1;
  REQUIRE(!in.fail());
  CHECK(x0 <= 3 * 16 + 8);
  CHECK(x1 > 3 * 16 + 8);
  CHECK(y0 <= 2 * 16 + 8);
  CHECK(y1 > 2 * 16 + 8);

  CHECK(run("ground --checkpoint " + (dir / "planted.ckpt").string() + sets +
                " --description \"<bos> wat\" --baseline \"<bos>\"",
            dir)
            .code == 2);
}
