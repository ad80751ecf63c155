#pragma once

// Detection metrics (IoU-matched AP / mAP) and expression recognition rates
// with symbol-level error tolerance.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vmer/core.hpp"
#include "vmer/latex.hpp"

namespace vmer {

struct ScoredMatch {
  double confidence = 0.0;
  bool true_positive = false;
};

struct DetectionMatchReport {
  std::array<std::vector<ScoredMatch>, kNumClasses> matches;
  std::array<std::size_t, kNumClasses> gt_counts{};

  /// Appends another image's report.
  void merge(const DetectionMatchReport& other);
};

/// Per class, predictions in descending confidence each take the unmatched
/// same-class ground-truth box with the highest IoU, provided IoU >= threshold.
DetectionMatchReport match_detections(const DetectionSet& pred, const DetectionSet& gt,
                                      double iou_threshold);

/// All-point interpolated AP for one class. `gt_count` must be positive.
double average_precision(std::vector<ScoredMatch> entries, std::size_t gt_count);

struct MeanApResult {
  double map = 0.0;
  /// Empty for classes that never occur in the ground truth.
  std::array<std::optional<double>, kNumClasses> per_class;
};

/// Unweighted mean of per-class AP over classes present in the ground truth.
/// Sets are paired by image_id; throws InvalidArgument on orphans or when
/// the ground truth is empty.
MeanApResult mean_ap(const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts,
                     double iou_threshold = 0.5);

/// Unit-cost Levenshtein distance over tokens.
std::size_t symbol_edit_distance(const TokenSequence& a, const TokenSequence& b);

struct ERReport {
  std::size_t total = 0;
  std::size_t exact = 0;
  std::size_t within_1 = 0;
  std::size_t within_2 = 0;

  double er() const { return rate(exact); }
  double er_le1() const { return rate(within_1); }
  double er_le2() const { return rate(within_2); }

 private:
  double rate(std::size_t n) const { return total == 0 ? 0.0 : static_cast<double>(n) / total; }
};

/// `pred[i]` empty means the pipeline failed on that image; it and any
/// unparseable prediction count as wrong at every tolerance. Throws
/// InvalidArgument naming the index of an unparseable ground truth.
ERReport expression_recognition(const std::vector<std::optional<std::string>>& pred,
                                const std::vector<std::string>& gt);

}  // namespace vmer
