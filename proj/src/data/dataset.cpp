#include "pointcopy/data/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "pointcopy/error.hpp"

namespace pointcopy {

using json = nlohmann::ordered_json;

std::string trace_to_json_line(const GroundedTrace& t) {
  json j;
  j["prompt"] = t.prompt;
  j["grid"] = {t.patches.grid.rows, t.patches.grid.cols};
  j["patch_px"] = t.patches.grid.patch_px;
  json patches = json::array();
  for (std::size_t k = 0; k < t.patches.vectors.rows(); ++k) {
    const auto row = t.patches.vectors.row(k);
    patches.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["patches"] = std::move(patches);
  json target = json::array();
  for (const AugToken& a : t.target) {
    json e;
    e[a.is_ptr() ? "p" : "v"] = a.index();
    target.push_back(std::move(e));
  }
  j["target"] = std::move(target);
  json objects = json::array();
  for (const ObjectEntry& o : t.objects) {
    json e;
    e["label"] = o.label;
    e["bbox"] = {o.bbox.x0, o.bbox.y0, o.bbox.x1, o.bbox.y1};
    objects.push_back(std::move(e));
  }
  j["objects"] = std::move(objects);
  return j.dump();
}

GroundedTrace trace_from_json_line(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(what, line_no); };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  }
  try {
    GroundedTrace t;
    t.prompt = j.at("prompt").get<std::vector<TokenId>>();
    const auto grid = j.at("grid").get<std::vector<std::size_t>>();
    if (grid.size() != 2) throw fail("\"grid\" must be [rows, cols]");
    t.patches.grid = {grid[0], grid[1], j.at("patch_px").get<std::size_t>()};
    const auto& patches = j.at("patches");
    if (!patches.is_array() || patches.size() != t.patches.grid.patch_count()) {
      throw fail("expected " + std::to_string(t.patches.grid.patch_count()) + " patch vectors");
    }
    const std::size_t width = patches.empty() ? 0 : patches.front().size();
    t.patches.vectors = Tensor2(patches.size(), width);
    for (std::size_t k = 0; k < patches.size(); ++k) {
      const auto v = patches[k].get<std::vector<double>>();
      if (v.size() != width) throw fail("patch " + std::to_string(k) + " has the wrong width");
      std::copy(v.begin(), v.end(), t.patches.vectors.row(k).begin());
    }
    for (const auto& e : j.at("target")) {
      if (e.size() != 1) throw fail("target entries must be {\"v\": id} or {\"p\": k}");
      if (e.contains("v")) {
        t.target.push_back(AugToken::vocab(e.at("v").get<TokenId>()));
      } else if (e.contains("p")) {
        const auto k = e.at("p").get<std::size_t>();
        if (k >= t.patches.size()) throw fail("pointer " + std::to_string(k) + " outside the image");
        t.target.push_back(AugToken::ptr(k));
      } else {
        throw fail("target entries must be {\"v\": id} or {\"p\": k}");
      }
    }
    for (const auto& e : j.at("objects")) {
      const auto b = e.at("bbox").get<std::vector<double>>();
      if (b.size() != 4) throw fail("bbox must have 4 numbers");
      t.objects.push_back({e.at("label").get<std::string>(), {b[0], b[1], b[2], b[3]}});
    }
    return t;
  } catch (const json::exception& e) {
    throw fail(std::string("bad record: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& path, const std::vector<GroundedTrace>& traces) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open dataset for writing: " + path.string());
  for (const auto& t : traces) os << trace_to_json_line(t) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<GroundedTrace> read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path.string());
  std::vector<GroundedTrace> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    out.push_back(trace_from_json_line(line, n));
  }
  return out;
}

}  // namespace pointcopy
