#include "pointcopy/data/tasks.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <random>

#include "pointcopy/data/filter.hpp"
#include "pointcopy/data/grid.hpp"
#include "pointcopy/data/vocab.hpp"
#include "pointcopy/error.hpp"

namespace pointcopy {

std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kLookup: return "lookup";
    case TaskKind::kCompare: return "compare";
    case TaskKind::kCount: return "count";
  }
  return "?";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) {
  if (name == "lookup") return TaskKind::kLookup;
  if (name == "compare") return TaskKind::kCompare;
  if (name == "count") return TaskKind::kCount;
  return std::nullopt;
}

std::array<double, kAttributeDim> attribute_code(std::size_t color) {
  // Row (color + 1) of the Sylvester-Hadamard matrix H8; row 0 is skipped
  // because it is the all-ones vector.
  std::array<double, kAttributeDim> code{};
  const std::size_t r = color + 1;
  for (std::size_t j = 0; j < kAttributeDim; ++j) code[j] = (std::popcount(r & j) % 2) ? -1.0 : 1.0;
  return code;
}

std::size_t decode_color(std::span<const double> v) {
  std::size_t best = 0;
  double best_score = -1e300;
  for (std::size_t c = 0; c < vocab::kNumColors; ++c) {
    const auto code = attribute_code(c);
    double s = 0.0;
    for (std::size_t j = 0; j < kAttributeDim; ++j) s += code[j] * v[j];
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

namespace {

struct Scene {
  std::vector<std::size_t> colors;  // per patch
  PatchSet patches;
};

Scene make_scene(std::mt19937_64& rng, const TaskOptions& opts) {
  const GridGeometry& g = opts.grid;
  Scene s;
  s.patches.grid = g;
  s.patches.vectors = Tensor2(g.patch_count(), kPatchFeatures);
  std::uniform_int_distribution<std::size_t> color(0, vocab::kNumColors - 1);
  std::normal_distribution<double> noise(0.0, opts.noise_sigma);
  s.colors.resize(g.patch_count());
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const std::size_t k = g.index(r, c);
      s.colors[k] = color(rng);
      auto v = s.patches.vectors.row(k);
      const auto code = attribute_code(s.colors[k]);
      std::copy(code.begin(), code.end(), v.begin());
      v[kAttributeDim + r] = 1.0;
      v[kAttributeDim + kMaxGridSide + c] = 1.0;
      if (opts.noise_sigma > 0.0) {
        for (double& x : v) x += noise(rng);
      }
    }
  }
  return s;
}

// Picks `count` distinct cells, `required` first, and labels them with
// shuffled unique names.
std::vector<ObjectEntry> make_objects(std::mt19937_64& rng, const GridGeometry& g,
                                      const std::vector<std::size_t>& required, std::size_t count) {
  std::vector<std::size_t> cells = required;
  std::vector<std::size_t> pool(g.patch_count());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t k : pool) {
    if (cells.size() >= count) break;
    if (std::find(cells.begin(), cells.end(), k) == cells.end()) cells.push_back(k);
  }
  std::vector<std::size_t> names(cells.size());
  std::iota(names.begin(), names.end(), std::size_t{1});
  std::shuffle(names.begin(), names.end(), rng);
  std::vector<ObjectEntry> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out.push_back({"obj" + std::to_string(names[i]), patch_rect_bbox(g, cells[i] / g.cols, cells[i] % g.cols)});
  }
  return out;
}

std::string word(TokenId id) { return std::string(vocab::name(id)); }

}  // namespace

RawTrace synthesize_raw(std::uint64_t seed, const TaskOptions& opts, TaskKind kind) {
  const GridGeometry& g = opts.grid;
  if (g.rows < 2 || g.cols < 2) throw InputError("task grid must be at least 2x2");
  if (g.rows > kMaxGridSide || g.cols > kMaxGridSide) {
    throw InputError("task grid must be at most " + std::to_string(kMaxGridSide) + " per side");
  }
  if (g.patch_px == 0) throw InputError("patch_px must be positive");
  std::mt19937_64 rng(seed);
  Scene scene = make_scene(rng, opts);
  RawTrace raw;
  raw.patches = std::move(scene.patches);
  std::uniform_int_distribution<std::size_t> pick_cell(0, g.patch_count() - 1);
  std::uniform_int_distribution<std::size_t> extra(0, 2);

  switch (kind) {
    case TaskKind::kLookup: {
      const std::size_t k = pick_cell(rng);
      raw.objects = make_objects(rng, g, {k}, 3 + extra(rng));
      raw.prompt = {vocab::kBos, vocab::kLookup, vocab::row(k / g.cols), vocab::col(k % g.cols), vocab::kQuery};
      raw.reasoning = "<region> [" + raw.objects[0].label + "] " + word(vocab::color(scene.colors[k])) + " <eos>";
      break;
    }
    case TaskKind::kCompare: {
      const std::size_t a = pick_cell(rng);
      std::size_t b = pick_cell(rng);
      while (b == a) b = pick_cell(rng);
      raw.objects = make_objects(rng, g, {a, b}, 3 + extra(rng));
      raw.prompt = {vocab::kBos, vocab::kCompare, vocab::row(a / g.cols), vocab::col(a % g.cols),
                    vocab::row(b / g.cols), vocab::col(b % g.cols), vocab::kQuery};
      const bool same = scene.colors[a] == scene.colors[b];
      raw.reasoning = "<region> [" + raw.objects[0].label + "] <region> [" + raw.objects[1].label + "] " +
                      word(same ? vocab::kYes : vocab::kNo) + " <eos>";
      break;
    }
    case TaskKind::kCount: {
      const std::size_t r = std::uniform_int_distribution<std::size_t>(0, g.rows - 1)(rng);
      const std::size_t color = std::uniform_int_distribution<std::size_t>(0, vocab::kNumColors - 1)(rng);
      std::vector<std::size_t> cells;
      std::size_t n = 0;
      for (std::size_t c = 0; c < g.cols; ++c) {
        cells.push_back(g.index(r, c));
        if (scene.colors[g.index(r, c)] == color) ++n;
      }
      raw.objects = make_objects(rng, g, cells, std::max<std::size_t>(cells.size(), 3));
      raw.prompt = {vocab::kBos, vocab::kCount, vocab::row(r), vocab::color(color), vocab::kQuery};
      for (std::size_t c = 0; c < g.cols; ++c) raw.reasoning += "<region> [" + raw.objects[c].label + "] ";
      raw.reasoning += word(vocab::number(n)) + " <eos>";
      break;
    }
  }
  return raw;
}

GroundedTrace synthesize_task(std::uint64_t seed, const TaskOptions& opts, TaskKind kind) {
  FilterResult res = filter_trace(synthesize_raw(seed, opts, kind));
  if (!res.kept) {
    throw InputError("generated trace failed filtering: " + std::string(reason_name(*res.reason)) + " (" +
                     res.detail + ")");
  }
  return std::move(*res.kept);
}

std::optional<TokenId> answer_token(std::span<const AugToken> target) {
  std::size_t end = target.size();
  if (end > 0 && target[end - 1] == AugToken::vocab(vocab::kEos)) --end;
  if (end == 0 || target[end - 1].is_ptr()) return std::nullopt;
  return static_cast<TokenId>(target[end - 1].index());
}

std::vector<TokenId> answer_choices(TokenId gold) {
  std::vector<TokenId> out;
  if (gold >= vocab::color(0) && gold < vocab::color(0) + vocab::kNumColors) {
    for (std::size_t c = 0; c < vocab::kNumColors; ++c) out.push_back(vocab::color(c));
  } else if (gold == vocab::kYes || gold == vocab::kNo) {
    out = {vocab::kYes, vocab::kNo};
  } else if (gold >= vocab::number(0) && gold <= vocab::number(kMaxGridSide)) {
    for (std::size_t n = 0; n <= kMaxGridSide; ++n) out.push_back(vocab::number(n));
  }
  return out;
}

}  // namespace pointcopy
