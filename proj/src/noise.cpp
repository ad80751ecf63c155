#include "vmer/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

bool chance(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

double sample_confidence(Rng& rng, double mean, double sd) {
  if (sd <= 0.0) return std::clamp(mean, 0.0, 1.0);
  return std::clamp(std::normal_distribution<double>(mean, sd)(rng), 0.0, 1.0);
}

BBox jitter_box(const BBox& b, double sigma, int width, int height, Rng& rng) {
  if (sigma <= 0.0) return b;
  std::normal_distribution<double> n(0.0, sigma);
  BBox j{b.x1 + n(rng), b.y1 + n(rng), b.x2 + n(rng), b.y2 + n(rng)};
  j.x1 = std::clamp(j.x1, 0.0, static_cast<double>(width));
  j.x2 = std::clamp(j.x2, 0.0, static_cast<double>(width));
  j.y1 = std::clamp(j.y1, 0.0, static_cast<double>(height));
  j.y2 = std::clamp(j.y2, 0.0, static_cast<double>(height));
  // A jitter that collapses an axis keeps that axis unchanged.
  if (!(j.x1 < j.x2)) {
    j.x1 = b.x1;
    j.x2 = b.x2;
  }
  if (!(j.y1 < j.y2)) {
    j.y1 = b.y1;
    j.y2 = b.y2;
  }
  return j;
}

bool eligible(SymbolClass c, FlipMode mode) {
  return mode == FlipMode::kUniform || is_digit(c) || c == SymbolClass::kCarry;
}

SymbolClass flip(SymbolClass c, FlipMode mode, Rng& rng) {
  if (mode == FlipMode::kSingleToken) {
    if (c == SymbolClass::kCarry) return SymbolClass::kEquals;
    const int shift = std::uniform_int_distribution<int>(1, 9)(rng);
    return digit_class((digit_value(c) + shift) % 10);
  }
  const int shift = std::uniform_int_distribution<int>(1, kNumClasses - 1)(rng);
  return static_cast<SymbolClass>((class_code(c) + shift) % kNumClasses);
}

}  // namespace

NoiseProfile NoiseProfile::none() {
  NoiseProfile p;
  p.confidence = {1.0, 0.0, 1.0, 0.0};
  return p;
}

void validate(const NoiseProfile& profile) {
  for (double p : {profile.label_flip_prob, profile.drop_prob, profile.duplicate_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("noise profile: probability outside [0,1]");
  }
  if (!(profile.box_jitter_sigma >= 0.0)) throw InvalidArgument("noise profile: negative jitter sigma");
  if (profile.exact_flips < 0) throw InvalidArgument("noise profile: negative exact_flips");
  const auto& c = profile.confidence;
  if (!(c.correct_sd >= 0.0 && c.corrupted_sd >= 0.0)) throw InvalidArgument("noise profile: negative confidence sd");
}

DetectionSet inject_noise(const DetectionSet& gt, const NoiseProfile& profile, Rng& rng) {
  validate(profile);
  const auto& dets = gt.detections;
  std::vector<bool> forced(dets.size(), false);
  if (profile.exact_flips > 0) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (eligible(dets[i].cls, profile.flip_mode)) candidates.push_back(i);
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(profile.exact_flips), candidates.size());
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, candidates.size() - 1)(rng);
      std::swap(candidates[i], candidates[j]);
      forced[candidates[i]] = true;
    }
  }

  const auto& cm = profile.confidence;
  DetectionSet out{gt.image_id, gt.width, gt.height, {}};
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (chance(rng, profile.drop_prob)) continue;
    Detection d = dets[i];
    d.box = jitter_box(d.box, profile.box_jitter_sigma, gt.width, gt.height, rng);
    const bool flipped = profile.exact_flips > 0
                             ? forced[i]
                             : (eligible(d.cls, profile.flip_mode) && chance(rng, profile.label_flip_prob));
    if (flipped) d.cls = flip(d.cls, profile.flip_mode, rng);
    d.confidence = flipped ? sample_confidence(rng, cm.corrupted_mean, cm.corrupted_sd)
                           : sample_confidence(rng, cm.correct_mean, cm.correct_sd);
    out.detections.push_back(d);

    if (chance(rng, profile.duplicate_prob)) {
      Detection dup = d;
      dup.box = jitter_box(dets[i].box, profile.box_jitter_sigma, gt.width, gt.height, rng);
      const double c = sample_confidence(rng, cm.corrupted_mean, cm.corrupted_sd);
      dup.confidence = std::min(c, std::nextafter(d.confidence, 0.0));
      out.detections.push_back(dup);
    }
  }
  return out;
}

}  // namespace vmer
