#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "pointcopy/data/dataset.hpp"
#include "pointcopy/data/tasks.hpp"
#include "pointcopy/error.hpp"

using namespace pointcopy;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pointcopy_test_" + name);
}

}  // namespace

TEST_CASE("empty dataset") {
  const auto p = temp_file("empty.jsonl");
  write_dataset(p, {});
  CHECK(std::filesystem::file_size(p) == 0);
  CHECK(read_dataset(p).empty());
  std::filesystem::remove(p);
}

TEST_CASE("single trace round trip through a line") {
  TaskOptions opts;
  const GroundedTrace t = synthesize_task(5, opts, TaskKind::kCompare);
  const std::string line = trace_to_json_line(t);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(trace_from_json_line(line) == t);
}

TEST_CASE("random traces round trip through a file") {
  std::mt19937_64 rng(3);
  std::vector<GroundedTrace> traces;
  for (int i = 0; i < 200; ++i) {
    TaskOptions opts;
    opts.grid = GridGeometry{2 + rng() % 7, 2 + rng() % 7, 8 + rng() % 24};
    opts.noise_sigma = 0.3;
    traces.push_back(synthesize_task(rng(), opts, static_cast<TaskKind>(rng() % 3)));
  }
  const auto p = temp_file("roundtrip.jsonl");
  write_dataset(p, traces);
  CHECK(read_dataset(p) == traces);
  std::filesystem::remove(p);
}

TEST_CASE("malformed lines report their line number") {
  TaskOptions opts;
  const auto p = temp_file("bad.jsonl");
  {
    std::ofstream f(p);
    f << trace_to_json_line(synthesize_task(1, opts, TaskKind::kLookup)) << "\n{\"prompt\": [1, 2]\n";
  }
  try {
    read_dataset(p);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).rfind("line 2", 0) == 0);
  }
  std::filesystem::remove(p);
  CHECK_THROWS(read_dataset(p));
}
