#include "vmer/core.hpp"

#include <algorithm>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "+", "-", "=", "carry"};

}  // namespace

std::string_view class_name(SymbolClass c) { return kClassNames[class_code(c)]; }

std::optional<SymbolClass> class_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<SymbolClass>(i);
  }
  return std::nullopt;
}

std::optional<SymbolClass> class_from_code(int code) {
  if (code < 0 || code >= kNumClasses) return std::nullopt;
  return static_cast<SymbolClass>(code);
}

double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

void validate(const Expression& e) {
  if (e.operand_a.empty()) throw InvalidArgument("expression: operand A is empty");
  if (e.operand_b.empty()) throw InvalidArgument("expression: operand B is empty");
  if (e.result.empty()) throw InvalidArgument("expression: result is empty");
  auto bad_slot = [](const DigitSlot& s) { return s.digit < 0 || s.digit > 9; };
  if (std::any_of(e.operand_a.begin(), e.operand_a.end(), bad_slot) ||
      std::any_of(e.operand_b.begin(), e.operand_b.end(), bad_slot) ||
      std::any_of(e.result.begin(), e.result.end(), [](int d) { return d < 0 || d > 9; })) {
    throw InvalidArgument("expression: digit outside 0-9");
  }
}

}  // namespace vmer
