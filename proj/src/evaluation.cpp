#include "vmer/evaluation.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>

#include "vmer/errors.hpp"

namespace vmer {

void DetectionMatchReport::merge(const DetectionMatchReport& other) {
  for (int c = 0; c < kNumClasses; ++c) {
    matches[c].insert(matches[c].end(), other.matches[c].begin(), other.matches[c].end());
    gt_counts[c] += other.gt_counts[c];
  }
}

DetectionMatchReport match_detections(const DetectionSet& pred, const DetectionSet& gt,
                                      double iou_threshold) {
  DetectionMatchReport report;
  std::array<std::vector<const BBox*>, kNumClasses> gt_boxes;
  for (const auto& g : gt.detections) gt_boxes[class_code(g.cls)].push_back(&g.box);
  for (int c = 0; c < kNumClasses; ++c) report.gt_counts[c] = gt_boxes[c].size();

  std::vector<std::size_t> order(pred.detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pred.detections[a].confidence > pred.detections[b].confidence;
  });

  std::array<std::vector<bool>, kNumClasses> used;
  for (int c = 0; c < kNumClasses; ++c) used[c].assign(gt_boxes[c].size(), false);

  for (std::size_t i : order) {
    const auto& p = pred.detections[i];
    const int c = class_code(p.cls);
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < gt_boxes[c].size(); ++j) {
      if (used[c][j]) continue;
      const double o = iou(p.box, *gt_boxes[c][j]);
      if (o > best) {
        best = o;
        best_j = j;
      }
    }
    const bool tp = best >= iou_threshold;
    if (tp) used[c][best_j] = true;
    report.matches[c].push_back({p.confidence, tp});
  }
  return report;
}

namespace {

// Nonnegative fraction that reports overflow instead of wrapping.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  bool add(std::uint64_t n, std::uint64_t d) {
    const std::uint64_t g = std::gcd(n, d);
    n /= g;
    d /= g;
    const std::uint64_t l = den / std::gcd(den, d);
    std::uint64_t new_den, a, b, sum;
    if (__builtin_mul_overflow(l, d, &new_den) || __builtin_mul_overflow(num, new_den / den, &a) ||
        __builtin_mul_overflow(n, new_den / d, &b) || __builtin_add_overflow(a, b, &sum)) {
      return false;
    }
    const std::uint64_t r = std::gcd(sum, new_den);
    num = sum / r;
    den = new_den / r;
    return true;
  }
};

}  // namespace

double average_precision(std::vector<ScoredMatch> entries, std::size_t gt_count) {
  if (gt_count == 0) throw InvalidArgument("average_precision: class has no ground truth");
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ScoredMatch& a, const ScoredMatch& b) { return a.confidence > b.confidence; });

  // Precision at rank i is tp[i] / (i + 1); the envelope keeps the best
  // later point as that same (tp, rank) pair.
  const std::size_t n = entries.size();
  std::vector<std::size_t> tp(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (entries[i].true_positive) ++hits;
    tp[i] = hits;
  }
  std::vector<std::size_t> best(n);
  for (std::size_t i = n; i-- > 0;) {
    best[i] = i;
    if (i + 1 < n) {
      const std::size_t j = best[i + 1];
      // tp[j] / (j + 1) > tp[i] / (i + 1)
      if (tp[j] * (i + 1) > tp[i] * (j + 1)) best[i] = j;
    }
  }

  // Recall rises by 1/gt_count at each true positive, so AP is the sum of
  // envelope precisions at those ranks divided by gt_count. The sum stays an
  // exact fraction while it fits, which makes the result correctly rounded.
  Fraction exact;
  bool fits = true;
  double approx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!entries[i].true_positive) continue;
    const std::size_t j = best[i];
    approx += static_cast<double>(tp[j]) / static_cast<double>(j + 1);
    if (fits) fits = exact.add(tp[j], j + 1);
  }
  if (fits) {
    std::uint64_t den;
    if (!__builtin_mul_overflow(exact.den, std::uint64_t{gt_count}, &den) && den <= (std::uint64_t{1} << 53) &&
        exact.num <= (std::uint64_t{1} << 53)) {
      return static_cast<double>(exact.num) / static_cast<double>(den);
    }
  }
  return approx / static_cast<double>(gt_count);
}

MeanApResult mean_ap(const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts,
                     double iou_threshold) {
  std::map<std::string, const DetectionSet*> by_id;
  for (const auto& p : preds) by_id.emplace(p.image_id, &p);

  DetectionMatchReport total;
  std::vector<std::string> orphans;
  for (const auto& g : gts) {
    auto it = by_id.find(g.image_id);
    if (it == by_id.end()) {
      orphans.push_back(g.image_id);
      continue;
    }
    total.merge(match_detections(*it->second, g, iou_threshold));
    by_id.erase(it);
  }
  for (const auto& [id, _] : by_id) orphans.push_back(id);
  if (!orphans.empty()) {
    std::string msg = "mean_ap: unpaired image ids:";
    for (const auto& id : orphans) msg += " " + id;
    throw InvalidArgument(msg);
  }

  MeanApResult result;
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (total.gt_counts[c] == 0) continue;
    const double ap = average_precision(total.matches[c], total.gt_counts[c]);
    result.per_class[c] = ap;
    sum += ap;
    ++classes;
  }
  if (classes == 0) throw InvalidArgument("mean_ap: ground truth has no boxes");
  result.map = sum / classes;
  return result;
}

std::size_t symbol_edit_distance(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

ERReport expression_recognition(const std::vector<std::optional<std::string>>& pred,
                                const std::vector<std::string>& gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("expression_recognition: list sizes differ");
  ERReport report;
  report.total = gt.size();
  for (std::size_t i = 0; i < gt.size(); ++i) {
    TokenSequence truth;
    try {
      truth = tokenize(parse_latex(gt[i]));
    } catch (const ParseError& e) {
      throw InvalidArgument("ground truth #" + std::to_string(i) + " does not parse: " + e.what());
    }
    if (!pred[i]) continue;
    TokenSequence guess;
    try {
      guess = tokenize(parse_latex(*pred[i]));
    } catch (const ParseError&) {
      continue;
    }
    const std::size_t d = symbol_edit_distance(guess, truth);
    if (d == 0) ++report.exact;
    if (d <= 1) ++report.within_1;
    if (d <= 2) ++report.within_2;
  }
  return report;
}

}  // namespace vmer
