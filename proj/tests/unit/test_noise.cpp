#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"
#include "vmer/errors.hpp"
#include "vmer/evaluation.hpp"
#include "vmer/latex.hpp"
#include "vmer/noise.hpp"
#include "vmer/transcriber.hpp"

using namespace vmer;

TEST_CASE("profile validation") {
  CHECK_NOTHROW(validate(NoiseProfile::none()));
  NoiseProfile p;
  p.drop_prob = 1.5;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = {};
  p.box_jitter_sigma = -1;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
  p = {};
  p.exact_flips = -1;
  CHECK_THROWS_AS(validate(p), InvalidArgument);
}

TEST_CASE("the zero-noise profile is the identity") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 100; ++i) {
    DetectionSet s = testing::random_detection_set(rng, 12);
    for (auto& d : s.detections) d.confidence = 1.0;
    Rng noise(i);
    CHECK(inject_noise(s, NoiseProfile::none(), noise) == s);
  }
  // Confidences are reset to 1.0, nothing else changes.
  DetectionSet s = testing::scene_15_plus_27();
  s.detections[0].confidence = 0.3;
  Rng noise(1);
  const auto out = inject_noise(s, NoiseProfile::none(), noise);
  CHECK(out.detections[0].confidence == 1.0);
  CHECK(out.detections[0].box == s.detections[0].box);
}

TEST_CASE("drop everything") {
  NoiseProfile p = NoiseProfile::none();
  p.drop_prob = 1.0;
  Rng rng(2);
  const auto out = inject_noise(testing::scene_15_plus_27(), p, rng);
  CHECK(out.detections.empty());
  CHECK(out.image_id == "img_15_27");
}

TEST_CASE("flip every label") {
  NoiseProfile p = NoiseProfile::none();
  p.label_flip_prob = 1.0;
  const auto s = testing::scene_15_plus_27();
  Rng rng(3);
  const auto out = inject_noise(s, p, rng);
  REQUIRE(out.detections.size() == s.detections.size());
  for (std::size_t i = 0; i < s.detections.size(); ++i) {
    CHECK(out.detections[i].box == s.detections[i].box);
    CHECK(out.detections[i].cls != s.detections[i].cls);
  }
}

TEST_CASE("exact single-token flips cost exactly k tokens") {
  const auto anns = testing::synthetic_annotations(200, 9);
  for (int k : {1, 2}) {
    NoiseProfile p = NoiseProfile::none();
    p.exact_flips = k;
    p.flip_mode = FlipMode::kSingleToken;
    p.confidence.corrupted_mean = 0.5;
    for (std::size_t i = 0; i < anns.size(); ++i) {
      Rng rng(i);
      const auto noisy = inject_noise(anns[i].ground_truth, p, rng);
      std::size_t changed = 0;
      for (std::size_t j = 0; j < noisy.detections.size(); ++j) {
        changed += noisy.detections[j].cls != anns[i].ground_truth.detections[j].cls;
      }
      CHECK(changed == static_cast<std::size_t>(k));
      const auto pred = tokenize(transcribe(noisy).expression);
      const auto truth = tokenize(parse_latex(anns[i].latex));
      CHECK(symbol_edit_distance(pred, truth) == static_cast<std::size_t>(k));
    }
  }
}

TEST_CASE("duplicates are strictly less confident and drops are roughly calibrated") {
  NoiseProfile p;
  p.duplicate_prob = 1.0;
  p.box_jitter_sigma = 2.0;
  const auto s = testing::scene_15_plus_27();
  Rng rng(4);
  const auto out = inject_noise(s, p, rng);
  REQUIRE(out.detections.size() == 2 * s.detections.size());
  for (std::size_t i = 0; i < out.detections.size(); i += 2) {
    CHECK(out.detections[i + 1].confidence < out.detections[i].confidence);
    CHECK(out.detections[i + 1].cls == out.detections[i].cls);
    CHECK(out.detections[i].box.valid());
  }

  NoiseProfile half = NoiseProfile::none();
  half.drop_prob = 0.5;
  std::size_t kept = 0, total = 0;
  for (int i = 0; i < 400; ++i) {
    Rng r(i);
    kept += inject_noise(s, half, r).detections.size();
    total += s.detections.size();
  }
  CHECK(static_cast<double>(kept) / total == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("noise is a pure function of the seed") {
  NoiseProfile p;
  p.box_jitter_sigma = 3;
  p.label_flip_prob = 0.2;
  p.drop_prob = 0.1;
  p.duplicate_prob = 0.2;
  const auto s = testing::scene_15_plus_27();
  Rng a(7), b(7);
  CHECK(inject_noise(s, p, a) == inject_noise(s, p, b));
}
