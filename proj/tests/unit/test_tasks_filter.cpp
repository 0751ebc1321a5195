#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "pointcopy/data/filter.hpp"
#include "pointcopy/data/grid.hpp"
#include "pointcopy/data/tasks.hpp"
#include "pointcopy/data/vocab.hpp"
#include "pointcopy/error.hpp"
#include "support/corpus.hpp"

using namespace pointcopy;

namespace {

std::size_t pointer_runs(const GroundedTrace& t) {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < t.target.size(); ++i) {
    if (t.target[i].is_ptr() && (i == 0 || !t.target[i - 1].is_ptr())) ++runs;
  }
  return runs;
}

}  // namespace

TEST_CASE("attribute codes are orthogonal and decodable") {
  for (std::size_t a = 0; a < vocab::kNumColors; ++a) {
    const auto ca = attribute_code(a);
    for (std::size_t b = 0; b < vocab::kNumColors; ++b) {
      const auto cb = attribute_code(b);
      double d = 0.0;
      for (std::size_t i = 0; i < kAttributeDim; ++i) d += ca[i] * cb[i];
      CHECK(d == (a == b ? 8.0 : 0.0));
    }
  }
}

TEST_CASE("lookup task points at the named cell and answers its colour") {
  TaskOptions opts;
  const GroundedTrace t = synthesize_task(1, opts, TaskKind::kLookup);
  REQUIRE(t.prompt.size() == 5);
  CHECK(t.prompt[0] == vocab::kBos);
  CHECK(t.prompt[1] == vocab::kLookup);
  const std::size_t row = t.prompt[2] - vocab::row(0);
  const std::size_t col = t.prompt[3] - vocab::col(0);
  const std::size_t k = row * 4 + col;
  REQUIRE(t.target.size() == 4);
  CHECK(t.target[0] == AugToken::vocab(vocab::kRegion));
  CHECK(t.target[1] == AugToken::ptr(k));
  const std::size_t colour = decode_color(t.patches.vectors.row(k));
  CHECK(t.target[2] == AugToken::vocab(vocab::color(colour)));
  CHECK(t.target[3] == AugToken::vocab(vocab::kEos));
  CHECK(answer_token(t.target) == vocab::color(colour));
}

TEST_CASE("task shapes") {
  TaskOptions opts;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const GroundedTrace c = synthesize_task(s, opts, TaskKind::kCompare);
    CHECK(pointer_runs(c) == 2);
    const GroundedTrace n = synthesize_task(s, opts, TaskKind::kCount);
    CHECK(pointer_runs(n) == 4);
    CHECK(c.objects.size() >= 3);
  }
  CHECK(synthesize_task(3, opts, TaskKind::kCount) == synthesize_task(3, opts, TaskKind::kCount));
  CHECK_FALSE(synthesize_task(3, opts, TaskKind::kLookup) == synthesize_task(4, opts, TaskKind::kLookup));
  TaskOptions big;
  big.grid = GridGeometry{9, 9, 16};
  CHECK_THROWS_AS(synthesize_raw(0, big, TaskKind::kLookup), InputError);
}

TEST_CASE("the text alone does not determine the answer") {
  // Same prompt, different images: the answer varies, so a text-only model
  // cannot beat chance.
  TaskOptions opts;
  std::map<std::vector<TokenId>, std::set<TokenId>> answers;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const GroundedTrace t = synthesize_task(s, opts, TaskKind::kLookup);
    answers[t.prompt].insert(*answer_token(t.target));
  }
  std::size_t ambiguous = 0;
  for (const auto& [prompt, set] : answers) ambiguous += set.size() > 1;
  CHECK(ambiguous == answers.size());
}

TEST_CASE("answer choices") {
  CHECK(answer_choices(vocab::color(2)).size() == 4);
  CHECK(answer_choices(vocab::kNo) == std::vector<TokenId>{vocab::kYes, vocab::kNo});
  CHECK(answer_choices(vocab::number(3)).size() == 9);
  CHECK(answer_choices(vocab::kBos).empty());
}

TEST_CASE("filter rules") {
  TaskOptions opts;
  RawTrace base = synthesize_raw(11, opts, TaskKind::kLookup);

  RawTrace ghost = base;
  ghost.reasoning = "<region> [obj3] red <eos>";
  ghost.objects = {{"obj1", base.objects[0].bbox}, {"obj2", base.objects[1].bbox}, {"obj4", base.objects[2].bbox}};
  auto r = filter_trace(ghost);
  CHECK(r.reason == RejectReason::kMismatch);

  RawTrace dup = base;
  dup.objects[0].label = "triangle";
  dup.objects[1].label = "triangle";
  dup.reasoning = "<region> [triangle] red <eos>";
  CHECK(filter_trace(dup).reason == RejectReason::kDuplicateLabel);

  RawTrace few = base;
  few.objects.resize(2);
  CHECK(filter_trace(few).reason == RejectReason::kTooFewObjects);

  RawTrace bad = base;
  bad.reasoning += " zzz";
  CHECK(filter_trace(bad).reason == RejectReason::kIllFormed);

  RawTrace explicit_ptr = base;
  explicit_ptr.reasoning = "<region> <ptr2><ptr3> red <eos>";
  r = filter_trace(explicit_ptr);
  REQUIRE(r.keep());
  CHECK(r.kept->target[1] == AugToken::ptr(2));
  CHECK(r.kept->target[2] == AugToken::ptr(3));

  const auto ok = filter_trace(base);
  REQUIRE(ok.keep());
  CHECK(ok.kept->target[1] == AugToken::ptr(bbox_to_patch_indices(base.objects[0].bbox, opts.grid)[0]));
}

TEST_CASE("planted defect corpus") {
  const auto items = corpus::planted_corpus(1);
  REQUIRE(items.size() == 100);
  std::size_t kept = 0;
  for (const auto& it : items) {
    const FilterResult r = filter_trace(it.raw);
    CHECK(r.keep() == !it.expected.has_value());
    if (it.expected) {
      CHECK(r.reason == it.expected);
    } else {
      ++kept;
    }
  }
  CHECK(kept == 82);
}
