#pragma once

// Detector-noise simulation: turns ground-truth boxes into plausible raw
// detector output so the pipeline can be exercised without a trained model.

#include "vmer/core.hpp"
#include "vmer/synthgen.hpp"

namespace vmer {

/// Confidences are drawn from N(mean, sd) clamped to [0,1]; sd 0 is exact.
struct ConfidenceModel {
  double correct_mean = 0.9;
  double correct_sd = 0.05;
  double corrupted_mean = 0.45;
  double corrupted_sd = 0.15;

  friend bool operator==(const ConfidenceModel&, const ConfidenceModel&) = default;
};

enum class FlipMode {
  /// A flipped label becomes any of the other 13 classes.
  kUniform,
  /// Flips that cost exactly one token: a digit becomes another digit, a
  /// carry becomes '=' (and then loses anchor selection to the real '=').
  kSingleToken,
};

struct NoiseProfile {
  double box_jitter_sigma = 0.0;  ///< pixels, per coordinate
  double label_flip_prob = 0.0;
  double drop_prob = 0.0;
  double duplicate_prob = 0.0;
  /// When positive, exactly this many detections per image are flipped
  /// (chosen uniformly among eligible ones) and label_flip_prob is ignored.
  int exact_flips = 0;
  FlipMode flip_mode = FlipMode::kUniform;
  ConfidenceModel confidence;

  /// No corruption; every confidence is 1.0.
  static NoiseProfile none();

  friend bool operator==(const NoiseProfile&, const NoiseProfile&) = default;
};

/// Throws InvalidArgument on probabilities outside [0,1] or negative sigma.
void validate(const NoiseProfile& profile);

/// Per detection: drop, else jitter (clamped to the canvas), maybe flip the
/// label, sample a confidence (corrupted ones from the lower distribution),
/// maybe emit a freshly jittered duplicate with a strictly lower confidence.
DetectionSet inject_noise(const DetectionSet& gt, const NoiseProfile& profile, Rng& rng);

}  // namespace vmer
