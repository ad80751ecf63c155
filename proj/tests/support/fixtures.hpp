#pragma once

// Shared scenes and random generators for the test suites.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "vmer/core.hpp"
#include "vmer/latex.hpp"
#include "vmer/synthgen.hpp"

namespace vmer::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vmer_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = {}) const { return (child.empty() ? path_ : path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Detection det(SymbolClass c, double x1, double y1, double x2, double y2, double conf = 1.0) {
  return {c, {x1, y1, x2, y2}, conf};
}

inline Detection digit(int d, double x1, double y1, double x2, double y2, double conf = 1.0) {
  return det(digit_class(d), x1, y1, x2, y2, conf);
}

/// The hand-traced 15 + 27 = 42 scene with a carry over the 1.
inline DetectionSet scene_15_plus_27(bool with_carry = true) {
  DetectionSet s{"img_15_27", 320, 320, {}};
  if (with_carry) s.detections.push_back(det(SymbolClass::kCarry, 60, 20, 80, 45));
  s.detections.push_back(digit(1, 55, 50, 85, 110));
  s.detections.push_back(digit(5, 105, 50, 135, 110));
  s.detections.push_back(det(SymbolClass::kPlus, 10, 130, 45, 170));
  s.detections.push_back(digit(2, 55, 130, 85, 190));
  s.detections.push_back(digit(7, 105, 130, 135, 190));
  s.detections.push_back(det(SymbolClass::kEquals, 40, 210, 150, 225));
  s.detections.push_back(digit(4, 55, 240, 85, 300));
  s.detections.push_back(digit(2, 105, 240, 135, 300));
  return s;
}

inline Expression expr_15_plus_27() {
  return {{{1, true}, {5, false}}, Operator::kPlus, {{2, false}, {7, false}}, {4, 2}};
}

inline BBox random_box(std::mt19937_64& rng, double extent = 320.0, double max_side = 80.0) {
  std::uniform_real_distribution<double> pos(0.0, extent - max_side);
  std::uniform_real_distribution<double> side(1.0, max_side);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + side(rng), y + side(rng)};
}

inline SymbolClass random_class(std::mt19937_64& rng) {
  return static_cast<SymbolClass>(std::uniform_int_distribution<int>(0, kNumClasses - 1)(rng));
}

/// Detections with random classes, boxes and (distinct) confidences.
inline DetectionSet random_detection_set(std::mt19937_64& rng, int max_detections, const std::string& id = "rand") {
  DetectionSet s{id, 320, 320, {}};
  const int n = std::uniform_int_distribution<int>(0, max_detections)(rng);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  for (int i = 0; i < n; ++i) s.detections.push_back({random_class(rng), random_box(rng), conf(rng)});
  return s;
}

/// Clusters of overlapping boxes, so dedup has real work to do.
inline DetectionSet clustered_detection_set(std::mt19937_64& rng, int max_detections) {
  DetectionSet s{"cluster", 320, 320, {}};
  const int n = std::uniform_int_distribution<int>(0, max_detections)(rng);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::normal_distribution<double> shift(0.0, 6.0);
  std::vector<BBox> seeds;
  for (int i = 0; i < n; ++i) {
    if (seeds.empty() || std::uniform_int_distribution<int>(0, 2)(rng) == 0) seeds.push_back(random_box(rng, 320, 60));
    const BBox& b = seeds[std::uniform_int_distribution<std::size_t>(0, seeds.size() - 1)(rng)];
    BBox j{b.x1 + shift(rng), b.y1 + shift(rng), b.x2 + shift(rng), b.y2 + shift(rng)};
    if (!j.valid()) j = b;
    s.detections.push_back({random_class(rng), j, conf(rng)});
  }
  return s;
}

/// Random valid Expression with operand lengths in [1, max_len].
inline Expression random_expression(std::mt19937_64& rng, int max_len = 6) {
  std::uniform_int_distribution<int> len(1, max_len), dig(0, 9), coin(0, 1);
  Expression e;
  auto term = [&](int n) {
    std::vector<DigitSlot> t;
    for (int i = 0; i < n; ++i) t.push_back({dig(rng), coin(rng) == 1});
    return t;
  };
  e.operand_a = term(len(rng));
  e.op = coin(rng) ? Operator::kPlus : Operator::kMinus;
  e.operand_b = term(len(rng));
  const int lr = len(rng) + coin(rng);
  for (int i = 0; i < lr; ++i) e.result.push_back(dig(rng));
  return e;
}

/// Ground-truth annotations for n laid-out scenes, no rasterization.
inline std::vector<Annotation> synthetic_annotations(std::size_t n, std::uint64_t seed,
                                                     const ExpressionConfig& config = {}) {
  std::vector<Annotation> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed ^ i);
    const Expression e = sample_expression(rng, config);
    const SceneSpec spec = layout(e, rng);
    const std::string id = image_id_for(i);
    out.push_back({id, ground_truth(spec, id), emit_latex(e)});
  }
  return out;
}

inline std::vector<DetectionSet> ground_truth_sets(const std::vector<Annotation>& annotations) {
  std::vector<DetectionSet> out;
  for (const auto& a : annotations) out.push_back(a.ground_truth);
  return out;
}

/// A side x side box that does not touch any detection in `set`.
inline BBox free_box(const DetectionSet& set, std::mt19937_64& rng, double side = 20.0) {
  std::uniform_real_distribution<double> x(0.0, set.width - side), y(0.0, set.height - side);
  for (;;) {
    const BBox b{x(rng), y(rng), 0, 0};
    const BBox box{b.x1, b.y1, b.x1 + side, b.y1 + side};
    bool clear = true;
    for (const auto& d : set.detections) clear = clear && intersection_area(box, d.box) == 0.0;
    if (clear) return box;
  }
}

/// Scenes of at most `max_detections` detections for the exhaustive
/// transcriber comparison: perturbed one-digit layouts mixed with raw random
/// sets, with coarse coordinates and repeated confidences to exercise ties.
inline DetectionSet small_random_scene(std::mt19937_64& rng, std::size_t max_detections = 8) {
  std::uniform_int_distribution<int> pct(0, 99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double tied_confidences[] = {0.5, 0.7, 0.9, 1.0};
  auto confidence = [&] {
    return pct(rng) < 50 ? tied_confidences[std::uniform_int_distribution<int>(0, 3)(rng)] : unit(rng);
  };
  auto snap = [](BBox b) {
    auto r = [](double v) { return std::round(v / 10.0) * 10.0; };
    BBox s{r(b.x1), r(b.y1), r(b.x2), r(b.y2)};
    if (s.x2 <= s.x1) s.x2 = s.x1 + 10;
    if (s.y2 <= s.y1) s.y2 = s.y1 + 10;
    return s;
  };

  DetectionSet s{"small", 320, 320, {}};
  const int mode = pct(rng);
  if (mode < 30) {
    // Lattice: few distinct coordinates and confidences, so geometric and
    // confidence ties are common.
    std::uniform_int_distribution<int> cell(0, 10), side(1, 3), two(0, 1);
    auto lattice_box = [&] {
      const double x = 10.0 * cell(rng), y = 10.0 * cell(rng);
      return BBox{x, y, x + 10.0 * side(rng), y + 10.0 * side(rng)};
    };
    auto lattice_conf = [&] { return two(rng) ? 0.9 : 0.5; };
    const int n = std::uniform_int_distribution<int>(3, static_cast<int>(max_detections))(rng);
    s.detections.push_back({SymbolClass::kEquals, lattice_box(), lattice_conf()});
    s.detections.push_back({two(rng) ? SymbolClass::kPlus : SymbolClass::kMinus, lattice_box(), lattice_conf()});
    for (int i = 2; i < n; ++i) {
      const int roll = pct(rng);
      const SymbolClass c = roll < 10   ? SymbolClass::kEquals
                            : roll < 35 ? SymbolClass::kCarry
                                        : digit_class(std::uniform_int_distribution<int>(0, 9)(rng));
      s.detections.push_back({c, lattice_box(), lattice_conf()});
    }
  } else if (mode < 70) {
    ExpressionConfig cfg;
    cfg.min_digits = 1;
    cfg.max_digits = std::uniform_int_distribution<int>(1, 2)(rng);
    Rng local(rng());
    const Expression e = sample_expression(local, cfg);
    s = ground_truth(layout(e, local), "small");
    const bool coarse = pct(rng) < 30;
    for (auto& d : s.detections) {
      if (pct(rng) < 40) d.confidence = confidence();
      if (pct(rng) < 8) d.cls = random_class(rng);
      if (coarse) d.box = snap(d.box);
    }
    if (pct(rng) < 30) {  // competing anchor
      const SymbolClass c = pct(rng) < 50 ? SymbolClass::kEquals : (pct(rng) < 50 ? SymbolClass::kPlus : SymbolClass::kMinus);
      s.detections.push_back({c, random_box(rng), confidence()});
    }
    if (pct(rng) < 40) {  // stray carry near a random detection
      const BBox& b = s.detections[std::uniform_int_distribution<std::size_t>(0, s.detections.size() - 1)(rng)].box;
      std::normal_distribution<double> off(0.0, 12.0);
      const double x = b.x1 + off(rng), y = b.y1 - 20 + off(rng);
      s.detections.push_back({SymbolClass::kCarry, {x, y, x + 15, y + 15}, confidence()});
    }
    while (!s.detections.empty() && pct(rng) < 20) {
      s.detections.erase(s.detections.begin() +
                         std::uniform_int_distribution<std::ptrdiff_t>(0, s.detections.size() - 1)(rng));
    }
  } else {
    const int n = std::uniform_int_distribution<int>(0, static_cast<int>(max_detections))(rng);
    const bool coarse = pct(rng) < 50;
    for (int i = 0; i < n; ++i) {
      SymbolClass c;
      const int roll = pct(rng);
      if (roll < 15) c = SymbolClass::kEquals;
      else if (roll < 30) c = pct(rng) < 50 ? SymbolClass::kPlus : SymbolClass::kMinus;
      else if (roll < 50) c = SymbolClass::kCarry;
      else c = digit_class(std::uniform_int_distribution<int>(0, 9)(rng));
      BBox b = random_box(rng, 320, 70);
      if (coarse) b = snap(b);
      s.detections.push_back({c, b, confidence()});
    }
  }
  while (s.detections.size() > max_detections) s.detections.pop_back();
  std::shuffle(s.detections.begin(), s.detections.end(), rng);
  return s;
}

struct MicroDataset {
  std::vector<DetectionSet> predictions;
  std::vector<DetectionSet> ground_truth;
};

/// Up to `max_images` images with up to `max_detections` ground-truth boxes
/// and predictions each, drawn from a few classes so that matches, misses,
/// duplicates and class confusions all occur. Confidences are distinct.
inline MicroDataset micro_dataset(std::mt19937_64& rng, int max_images = 3, int max_detections = 10) {
  MicroDataset m;
  std::uniform_int_distribution<int> pct(0, 99);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 3.0);
  auto few_classes = [&] { return static_cast<SymbolClass>(std::uniform_int_distribution<int>(0, 3)(rng)); };
  const int images = std::uniform_int_distribution<int>(1, max_images)(rng);
  for (int i = 0; i < images; ++i) {
    const std::string id = "m" + std::to_string(i);
    DetectionSet gt{id, 200, 200, {}};
    const int n_gt = std::uniform_int_distribution<int>(i == 0 ? 1 : 0, max_detections)(rng);
    for (int k = 0; k < n_gt; ++k) gt.detections.push_back({few_classes(), random_box(rng, 200, 50), 1.0});
    DetectionSet pred{id, 200, 200, {}};
    const int n_pred = std::uniform_int_distribution<int>(0, max_detections)(rng);
    for (int k = 0; k < n_pred; ++k) {
      Detection d;
      if (!gt.detections.empty() && pct(rng) < 70) {
        d = gt.detections[std::uniform_int_distribution<std::size_t>(0, gt.detections.size() - 1)(rng)];
        d.box = {d.box.x1 + jitter(rng), d.box.y1 + jitter(rng), d.box.x2 + jitter(rng), d.box.y2 + jitter(rng)};
        if (!d.box.valid()) d.box = random_box(rng, 200, 50);
        if (pct(rng) < 15) d.cls = few_classes();
      } else {
        d = {few_classes(), random_box(rng, 200, 50), 0};
      }
      d.confidence = conf(rng);
      pred.detections.push_back(d);
    }
    m.ground_truth.push_back(std::move(gt));
    m.predictions.push_back(std::move(pred));
  }
  return m;
}

}  // namespace vmer::testing
