#include <doctest.h>

#include <algorithm>
#include <random>

#include "support/fixtures.hpp"
#include "vmer/errors.hpp"
#include "vmer/postprocess.hpp"

using namespace vmer;
using testing::digit;

namespace {

bool is_subsequence(const std::vector<Detection>& sub, const std::vector<Detection>& of) {
  std::size_t j = 0;
  for (const auto& d : of) {
    if (j < sub.size() && sub[j] == d) ++j;
  }
  return j == sub.size();
}

}  // namespace

TEST_CASE("params validation") {
  CHECK_NOTHROW(validate(PostprocessParams{0, 1}));
  CHECK_THROWS_AS(validate(PostprocessParams{-0.1, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(validate(PostprocessParams{0.5, 1.01}), InvalidArgument);
}

TEST_CASE("confidence filter examples") {
  DetectionSet s{"x", 100, 100, {digit(1, 0, 0, 10, 10, 0.4), digit(2, 20, 0, 30, 10, 0.6)}};
  const auto kept = filter_by_confidence(s, 0.5);
  REQUIRE(kept.detections.size() == 1);
  CHECK(kept.detections[0].confidence == 0.6);
  CHECK(filter_by_confidence(s, 0.0) == s);

  DetectionSet one{"y", 100, 100, {digit(1, 0, 0, 10, 10, 1.0), digit(2, 20, 0, 30, 10, 0.99)}};
  const auto top = filter_by_confidence(one, 1.0);
  REQUIRE(top.detections.size() == 1);
  CHECK(top.detections[0].confidence == 1.0);
}

TEST_CASE("dedup keeps the most confident box regardless of class") {
  // IoU of these two is 0.8.
  DetectionSet s{"x", 100, 100, {digit(1, 0, 0, 10, 10, 0.7), digit(7, 0, 0, 10, 8, 0.9)}};
  REQUIRE(iou(s.detections[0].box, s.detections[1].box) == doctest::Approx(0.8));
  const auto out = dedup_by_iou(s, 0.5);
  REQUIRE(out.detections.size() == 1);
  CHECK(out.detections[0].cls == SymbolClass::k7);
  CHECK(out.detections[0].confidence == 0.9);
}

TEST_CASE("dedup on disjoint boxes is the identity, even at alpha 0") {
  DetectionSet s{"x", 100, 100, {digit(1, 0, 0, 10, 10, 0.7), digit(2, 10, 0, 20, 10, 0.9), digit(3, 40, 40, 50, 50, 0.1)}};
  CHECK(dedup_by_iou(s, 0.0) == s);
  CHECK(dedup_by_iou(s, 0.5) == s);
}

TEST_CASE("identical duplicates collapse to one") {
  DetectionSet s{"x", 100, 100, {digit(4, 5, 5, 20, 20, 0.8), digit(4, 5, 5, 20, 20, 0.8), digit(4, 5, 5, 20, 20, 0.8)}};
  const auto out = dedup_by_iou(s, 0.99);
  CHECK(out.detections.size() == 1);
}

TEST_CASE("chains form one group") {
  // a~b and b~c overlap strongly; a and c do not.
  DetectionSet s{"x", 200, 200,
                 {digit(1, 0, 0, 10, 10, 0.5), digit(2, 2, 0, 12, 10, 0.9), digit(3, 4, 0, 14, 10, 0.6)}};
  REQUIRE(iou(s.detections[0].box, s.detections[2].box) < 0.5);
  const auto out = dedup_by_iou(s, 0.5);
  REQUIRE(out.detections.size() == 1);
  CHECK(out.detections[0].cls == SymbolClass::k2);
}

TEST_CASE("postprocess identity and empty cases") {
  const auto s = testing::scene_15_plus_27();
  CHECK(postprocess(s, {0, 1}) == s);
  DetectionSet empty{"e", 10, 10, {}};
  CHECK(postprocess(empty, {0.5, 0.5}) == empty);
}

TEST_CASE("filter is monotone and postprocess never invents detections") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto s = testing::clustered_detection_set(rng, 15);
    double t1 = unit(rng), t2 = unit(rng);
    if (t1 > t2) std::swap(t1, t2);
    const auto hi = filter_by_confidence(s, t2);
    const auto lo = filter_by_confidence(s, t1);
    CHECK(is_subsequence(hi.detections, lo.detections));
    const auto out = postprocess(s, {unit(rng), unit(rng)});
    CHECK(is_subsequence(out.detections, s.detections));
  }
}

TEST_CASE("dedup is idempotent for alpha >= 0.5") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> alpha(0.5, 1.0);
  for (int i = 0; i < 300; ++i) {
    const auto s = testing::clustered_detection_set(rng, 15);
    const double a = alpha(rng);
    const auto once = dedup_by_iou(s, a);
    CHECK(dedup_by_iou(once, a) == once);
  }
}

TEST_CASE("optimize recovers a perfect cell on noiseless data") {
  const auto anns = testing::synthetic_annotations(20, 3);
  const auto preds = testing::ground_truth_sets(anns);
  const auto r = optimize_params(preds, anns, 11);
  CHECK(r.expression_rate == 1.0);
  CHECK(r.cells_evaluated == 121);
  CHECK(r.map50 == 1.0);
}

TEST_CASE("optimize with g=2 filters a conf-0.3 spurious box") {
  const auto anns = testing::synthetic_annotations(10, 4);
  auto preds = testing::ground_truth_sets(anns);
  std::mt19937_64 rng(4);
  for (auto& p : preds) {
    p.detections.push_back({SymbolClass::k5, testing::free_box(p, rng), 0.3});
  }
  const auto r = optimize_params(preds, anns, 2);
  CHECK(r.params.theta == 1.0);
  CHECK(r.expression_rate == 1.0);
  CHECK(r.cells_evaluated == 4);
}

TEST_CASE("optimize falls back to (0, 0) when every cell scores zero") {
  const auto anns = testing::synthetic_annotations(5, 5);
  std::vector<DetectionSet> preds;
  for (const auto& a : anns) preds.push_back({a.image_id, 320, 320, {}});
  const auto r = optimize_params(preds, anns, 5);
  CHECK(r.params == PostprocessParams{0, 0});
  CHECK(r.expression_rate == 0.0);
}

TEST_CASE("optimize is deterministic across worker counts") {
  const auto anns = testing::synthetic_annotations(12, 6);
  auto preds = testing::ground_truth_sets(anns);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (auto& p : preds) {
    for (auto& d : p.detections) d.confidence = conf(rng);
  }
  const auto a = optimize_params(preds, anns, 6, 1);
  const auto b = optimize_params(preds, anns, 6, 4);
  const auto c = optimize_params(preds, anns, 6, 4);
  CHECK(a.params == b.params);
  CHECK(b.params == c.params);
  CHECK(a.expression_rate == b.expression_rate);
  CHECK(a.map50 == b.map50);
}

TEST_CASE("optimize rejects empty validation data and bad grids") {
  CHECK_THROWS_AS(optimize_params({}, {}, 11), InvalidArgument);
  const auto anns = testing::synthetic_annotations(2, 7);
  CHECK_THROWS_AS(optimize_params(testing::ground_truth_sets(anns), anns, 1), InvalidArgument);
}
