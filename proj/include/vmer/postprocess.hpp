#pragma once

// Two-step cleanup of raw detector output: drop low-confidence boxes, then
// collapse groups of overlapping boxes to their most confident member.

#include <cstddef>
#include <vector>

#include "vmer/core.hpp"

namespace vmer {

struct PostprocessParams {
  double theta = 0.0;  ///< minimum confidence kept
  double alpha = 1.0;  ///< IoU above which boxes are duplicates

  friend bool operator==(const PostprocessParams&, const PostprocessParams&) = default;
};

/// Throws InvalidArgument unless both values are in [0,1].
void validate(const PostprocessParams& params);

/// Keeps detections with confidence >= theta, in input order.
DetectionSet filter_by_confidence(const DetectionSet& set, double theta);

/// Groups are connected components of the relation iou > alpha, regardless
/// of class. Each group keeps its highest-confidence member (earliest on
/// ties). Survivors keep input order.
DetectionSet dedup_by_iou(const DetectionSet& set, double alpha);

/// dedup_by_iou(filter_by_confidence(set, theta), alpha)
DetectionSet postprocess(const DetectionSet& set, const PostprocessParams& params);

struct OptimizeResult {
  PostprocessParams params;
  double expression_rate = 0.0;  ///< exact ER of the chosen cell
  double map50 = 0.0;            ///< mAP@0.5 of the chosen cell
  std::size_t cells_evaluated = 0;
};

/// Exhaustive grid search over theta, alpha in {0, 1/(g-1), ..., 1}.
///
/// Each cell runs postprocess -> transcribe -> emit_latex on every validation
/// image and scores exact ER against the annotations. Ties go to the higher
/// mAP@0.5 of the postprocessed boxes, then to the lexicographically smaller
/// (theta, alpha). Predictions are matched to annotations by image_id.
///
/// `workers` == 0 picks the default worker count; the result never depends on it.
OptimizeResult optimize_params(const std::vector<DetectionSet>& predictions,
                               const std::vector<Annotation>& annotations, int grid_steps,
                               unsigned workers = 0);

}  // namespace vmer
