#pragma once

// Domain types shared by every stage of the recognizer: symbol classes,
// boxes, detections, and the parsed form of a vertical expression.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vmer {

/// The 14 symbol classes. Codes are stable: they are written into YOLO label files.
enum class SymbolClass : std::uint8_t {
  k0 = 0,
  k1,
  k2,
  k3,
  k4,
  k5,
  k6,
  k7,
  k8,
  k9,
  kPlus = 10,
  kMinus = 11,
  kEquals = 12,
  kCarry = 13,
};

inline constexpr int kNumClasses = 14;

inline constexpr std::array<SymbolClass, kNumClasses> kAllClasses = {
    SymbolClass::k0,    SymbolClass::k1,     SymbolClass::k2,      SymbolClass::k3,
    SymbolClass::k4,    SymbolClass::k5,     SymbolClass::k6,      SymbolClass::k7,
    SymbolClass::k8,    SymbolClass::k9,     SymbolClass::kPlus,   SymbolClass::kMinus,
    SymbolClass::kEquals, SymbolClass::kCarry};

constexpr int class_code(SymbolClass c) { return static_cast<int>(c); }

constexpr bool is_digit(SymbolClass c) { return class_code(c) <= 9; }

constexpr bool is_operator(SymbolClass c) {
  return c == SymbolClass::kPlus || c == SymbolClass::kMinus;
}

/// Precondition: is_digit(c).
constexpr int digit_value(SymbolClass c) { return class_code(c); }

/// Precondition: 0 <= d <= 9.
constexpr SymbolClass digit_class(int d) { return static_cast<SymbolClass>(d); }

/// Interchange name: "0".."9", "+", "-", "=", "carry".
std::string_view class_name(SymbolClass c);

std::optional<SymbolClass> class_from_name(std::string_view name);

std::optional<SymbolClass> class_from_code(int code);

/// Axis-aligned box in pixel coordinates, y pointing down.
struct BBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  /// Strictly positive width and height.
  bool valid() const { return x1 < x2 && y1 < y2; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Area of the overlap of two boxes, 0 when they do not overlap.
double intersection_area(const BBox& a, const BBox& b);

/// Intersection over union. Both boxes must be valid.
double iou(const BBox& a, const BBox& b);

struct Detection {
  SymbolClass cls = SymbolClass::k0;
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// All detections for one image.
struct DetectionSet {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<Detection> detections;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;
};

enum class Operator : std::uint8_t { kPlus, kMinus };

constexpr SymbolClass operator_class(Operator op) {
  return op == Operator::kPlus ? SymbolClass::kPlus : SymbolClass::kMinus;
}

struct DigitSlot {
  int digit = 0;
  bool has_carry = false;

  friend bool operator==(const DigitSlot&, const DigitSlot&) = default;
};

/// Parsed `A op B = R`. Digit lists are most-significant first.
struct Expression {
  std::vector<DigitSlot> operand_a;
  Operator op = Operator::kPlus;
  std::vector<DigitSlot> operand_b;
  std::vector<int> result;

  friend bool operator==(const Expression&, const Expression&) = default;
};

/// Throws InvalidArgument when a list is empty or a digit is outside 0-9.
void validate(const Expression& e);

/// Ground truth for one image. Confidences in `ground_truth` are 1.0.
struct Annotation {
  std::string image_id;
  DetectionSet ground_truth;
  std::string latex;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

}  // namespace vmer
