#include "vmer/transcriber.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <tuple>

namespace vmer {

namespace {

// Total order on detections used to break ties on a primary geometric key,
// so results never depend on input order.
auto tie_key(const Detection& d) {
  return std::make_tuple(d.box.center_y(), d.box.x1, d.box.y1, d.box.x2, d.box.y2,
                         class_code(d.cls), d.confidence);
}

bool by_center_x(const Detection& a, const Detection& b) {
  if (a.box.center_x() != b.box.center_x()) return a.box.center_x() < b.box.center_x();
  return tie_key(a) < tie_key(b);
}

bool by_top(const Detection& a, const Detection& b) {
  if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
  return by_center_x(a, b);
}

// Most confident first; geometric order among equals.
bool more_confident(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return tie_key(a) < tie_key(b);
}

BBox carry_search_region(const BBox& digit, double expansion) {
  return {digit.x1, digit.y1 - expansion * digit.height(), digit.x2, digit.y2};
}

std::string format_box(const BBox& b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "[%g,%g,%g,%g]", b.x1, b.y1, b.x2, b.y2);
  return buf;
}

std::vector<DigitSlot> to_slots(const std::vector<Detection>& row) {
  std::vector<DigitSlot> slots;
  slots.reserve(row.size());
  for (const auto& d : row) slots.push_back({digit_value(d.cls), false});
  return slots;
}

}  // namespace

std::string failure_name(TranscriptionFailure f) {
  switch (f) {
    case TranscriptionFailure::kNoEqualsSign: return "NoEqualsSign";
    case TranscriptionFailure::kNoOperator: return "NoOperator";
    case TranscriptionFailure::kNoResultDigits: return "NoResultDigits";
    case TranscriptionFailure::kNoOperandDigits: return "NoOperandDigits";
    case TranscriptionFailure::kSingleOperandRow: return "SingleOperandRow";
  }
  return "Unknown";
}

std::string TranscriptionWarning::message() const {
  switch (kind) {
    case WarningKind::kIsolatedCarry:
      return "isolated carry at " + format_box(detection.box);
    case WarningKind::kDiscardedAnchor:
      return "discarded duplicate '" + std::string(class_name(detection.cls)) + "' at " +
             format_box(detection.box);
  }
  return {};
}

AnchorLayout locate_anchors(const DetectionSet& set) {
  std::optional<std::size_t> eq_idx, op_idx;
  const auto& dets = set.detections;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].cls == SymbolClass::kEquals) {
      if (!eq_idx || more_confident(dets[i], dets[*eq_idx])) eq_idx = i;
    } else if (is_operator(dets[i].cls)) {
      if (!op_idx || more_confident(dets[i], dets[*op_idx])) op_idx = i;
    }
  }
  if (!eq_idx) throw TranscriptionError(TranscriptionFailure::kNoEqualsSign, set.image_id);
  if (!op_idx) throw TranscriptionError(TranscriptionFailure::kNoOperator, set.image_id);

  AnchorLayout layout;
  layout.equals = dets[*eq_idx];
  layout.op = dets[*op_idx];
  const double equals_line = layout.equals.box.center_y();
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (i == *eq_idx || i == *op_idx) continue;
    const auto& d = dets[i];
    if (d.cls == SymbolClass::kEquals || is_operator(d.cls)) {
      layout.discarded.push_back(d);
    } else if (d.cls == SymbolClass::kCarry) {
      layout.carries.push_back(d);
    } else if (d.box.center_y() > equals_line) {
      layout.result_digits.push_back(d);
    } else {
      layout.operand_digits.push_back(d);
    }
  }
  if (layout.result_digits.empty()) throw TranscriptionError(TranscriptionFailure::kNoResultDigits, set.image_id);
  if (layout.operand_digits.empty()) throw TranscriptionError(TranscriptionFailure::kNoOperandDigits, set.image_id);
  return layout;
}

std::vector<int> read_result(const std::vector<Detection>& result_digits) {
  std::vector<Detection> sorted = result_digits;
  std::sort(sorted.begin(), sorted.end(), by_center_x);
  std::vector<int> digits;
  digits.reserve(sorted.size());
  for (const auto& d : sorted) digits.push_back(digit_value(d.cls));
  return digits;
}

OperandRows group_operand_rows(const std::vector<Detection>& operand_digits,
                               const std::string& image_id) {
  if (operand_digits.size() < 2) throw TranscriptionError(TranscriptionFailure::kSingleOperandRow, image_id);
  std::vector<Detection> sorted = operand_digits;
  std::sort(sorted.begin(), sorted.end(), by_top);

  std::size_t split = 0;
  double best_gap = 0.0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double gap = sorted[i].box.y1 - sorted[i - 1].box.y1;
    if (gap > best_gap) {
      best_gap = gap;
      split = i;
    }
  }
  if (best_gap <= 0.0) throw TranscriptionError(TranscriptionFailure::kSingleOperandRow, image_id);

  OperandRows rows;
  rows.row_a.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(split));
  rows.row_b.assign(sorted.begin() + static_cast<std::ptrdiff_t>(split), sorted.end());
  std::sort(rows.row_a.begin(), rows.row_a.end(), by_center_x);
  std::sort(rows.row_b.begin(), rows.row_b.end(), by_center_x);
  return rows;
}

CarryAssignment associate_carries(const std::vector<Detection>& row_a,
                                  const std::vector<Detection>& row_b,
                                  const std::vector<Detection>& carries,
                                  const TranscriberOptions& options) {
  CarryAssignment out;
  std::vector<bool> taken(carries.size(), false);

  auto visit_row = [&](const std::vector<Detection>& row, Row which) {
    for (std::size_t k = row.size(); k-- > 0;) {
      const BBox region = carry_search_region(row[k].box, options.carry_expansion);
      std::optional<std::size_t> best;
      double best_area = 0.0;
      for (std::size_t c = 0; c < carries.size(); ++c) {
        if (taken[c]) continue;
        const double area = intersection_area(region, carries[c].box);
        if (area <= 0.0) continue;
        // Strict comparisons keep the earliest carry on a full tie.
        if (!best || area > best_area ||
            (area == best_area && carries[c].confidence > carries[*best].confidence)) {
          best = c;
          best_area = area;
        }
      }
      if (best) {
        taken[*best] = true;
        out.attached.emplace(std::make_pair(which, k), *best);
      }
    }
  };
  visit_row(row_a, Row::kA);
  visit_row(row_b, Row::kB);

  for (std::size_t c = 0; c < carries.size(); ++c) {
    if (!taken[c]) out.isolated.push_back(c);
  }
  return out;
}

Transcription transcribe(const DetectionSet& set, const TranscriberOptions& options) {
  const AnchorLayout layout = locate_anchors(set);
  Transcription t;
  for (const auto& d : layout.discarded) t.warnings.push_back({WarningKind::kDiscardedAnchor, d});

  t.expression.result = read_result(layout.result_digits);
  const OperandRows rows = group_operand_rows(layout.operand_digits, set.image_id);
  const CarryAssignment carries = associate_carries(rows.row_a, rows.row_b, layout.carries, options);

  t.expression.op = layout.op.cls == SymbolClass::kPlus ? Operator::kPlus : Operator::kMinus;
  t.expression.operand_a = to_slots(rows.row_a);
  t.expression.operand_b = to_slots(rows.row_b);
  for (const auto& [slot, carry] : carries.attached) {
    auto& term = slot.first == Row::kA ? t.expression.operand_a : t.expression.operand_b;
    term[slot.second].has_carry = true;
  }
  for (std::size_t c : carries.isolated) {
    t.warnings.push_back({WarningKind::kIsolatedCarry, layout.carries[c]});
  }
  return t;
}

}  // namespace vmer
