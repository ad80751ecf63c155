#include "vmer/postprocess.hpp"

#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "vmer/errors.hpp"
#include "vmer/evaluation.hpp"
#include "vmer/latex.hpp"
#include "vmer/parallel.hpp"
#include "vmer/transcriber.hpp"

namespace vmer {

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

struct CellScore {
  std::size_t exact = 0;
  double map50 = 0.0;
};

}  // namespace

void validate(const PostprocessParams& params) {
  if (!(params.theta >= 0.0 && params.theta <= 1.0)) throw InvalidArgument("theta must be in [0,1]");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw InvalidArgument("alpha must be in [0,1]");
}

DetectionSet filter_by_confidence(const DetectionSet& set, double theta) {
  DetectionSet out{set.image_id, set.width, set.height, {}};
  for (const auto& d : set.detections) {
    if (d.confidence >= theta) out.detections.push_back(d);
  }
  return out;
}

DetectionSet dedup_by_iou(const DetectionSet& set, double alpha) {
  const auto& dets = set.detections;
  const std::size_t n = dets.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (iou(dets[i].box, dets[j].box) > alpha) {
        parent[find_root(parent, j)] = find_root(parent, i);
      }
    }
  }

  // Best member per component; earlier index wins ties.
  std::vector<std::size_t> best(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find_root(parent, i);
    if (best[r] == n || dets[i].confidence > dets[best[r]].confidence) best[r] = i;
  }

  DetectionSet out{set.image_id, set.width, set.height, {}};
  for (std::size_t i = 0; i < n; ++i) {
    if (best[find_root(parent, i)] == i) out.detections.push_back(dets[i]);
  }
  return out;
}

DetectionSet postprocess(const DetectionSet& set, const PostprocessParams& params) {
  return dedup_by_iou(filter_by_confidence(set, params.theta), params.alpha);
}

OptimizeResult optimize_params(const std::vector<DetectionSet>& predictions,
                               const std::vector<Annotation>& annotations, int grid_steps,
                               unsigned workers) {
  if (grid_steps < 2) throw InvalidArgument("optimize_params: grid_steps must be >= 2");
  if (annotations.empty()) throw InvalidArgument("optimize_params: empty validation set");

  std::map<std::string, const DetectionSet*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.image_id, &p);
  std::vector<const DetectionSet*> paired;
  std::vector<DetectionSet> truth_boxes;
  std::vector<std::string> truth_latex;
  for (const auto& a : annotations) {
    auto it = by_id.find(a.image_id);
    if (it == by_id.end()) throw InvalidArgument("optimize_params: no predictions for image '" + a.image_id + "'");
    paired.push_back(it->second);
    truth_boxes.push_back(a.ground_truth);
    truth_latex.push_back(a.latex);
  }

  const auto steps = static_cast<std::size_t>(grid_steps);
  auto grid_value = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(steps - 1); };

  std::vector<CellScore> scores(steps * steps);
  parallel_for(scores.size(), workers, [&](std::size_t cell) {
    const PostprocessParams params{grid_value(cell / steps), grid_value(cell % steps)};
    std::vector<DetectionSet> cleaned;
    std::vector<std::optional<std::string>> latex;
    cleaned.reserve(paired.size());
    latex.reserve(paired.size());
    for (const DetectionSet* p : paired) {
      cleaned.push_back(postprocess(*p, params));
      try {
        latex.emplace_back(emit_latex(transcribe(cleaned.back()).expression));
      } catch (const TranscriptionError&) {
        latex.emplace_back(std::nullopt);
      }
    }
    scores[cell].exact = expression_recognition(latex, truth_latex).exact;
    scores[cell].map50 = mean_ap(cleaned, truth_boxes, 0.5).map;
  });

  // Cells are visited in lexicographic (theta, alpha) order, so strict
  // improvement keeps the smallest pair among ties.
  std::size_t best = 0;
  for (std::size_t cell = 1; cell < scores.size(); ++cell) {
    const auto& s = scores[cell];
    const auto& b = scores[best];
    if (s.exact > b.exact || (s.exact == b.exact && s.map50 > b.map50)) best = cell;
  }

  OptimizeResult result;
  result.params = {grid_value(best / steps), grid_value(best % steps)};
  result.expression_rate = static_cast<double>(scores[best].exact) / static_cast<double>(annotations.size());
  result.map50 = scores[best].map50;
  result.cells_evaluated = scores.size();
  return result;
}

}  // namespace vmer
