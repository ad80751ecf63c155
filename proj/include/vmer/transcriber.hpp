#pragma once

// Structural analysis: turns a cleaned-up DetectionSet into an Expression.
//
//   1. pick one '=' and one operator (most confident wins),
//   2. digits whose vertical center is below the '=' center form the result,
//   3. the remaining digits split into rows A and B at the largest gap in y1,
//   4. carries attach to digits (A right-to-left, then B right-to-left) by
//      overlap with an upward-expanded digit box,
//   5. each row is read left to right by horizontal center.

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vmer/core.hpp"
#include "vmer/errors.hpp"

namespace vmer {

enum class TranscriptionFailure {
  kNoEqualsSign,
  kNoOperator,
  kNoResultDigits,
  kNoOperandDigits,
  kSingleOperandRow,
};

/// "NoEqualsSign", "NoOperator", ...
std::string failure_name(TranscriptionFailure f);

class TranscriptionError : public Error {
 public:
  TranscriptionError(TranscriptionFailure failure, const std::string& image_id)
      : Error(failure_name(failure) + " (image '" + image_id + "')"),
        failure_(failure),
        image_id_(image_id) {}

  TranscriptionFailure failure() const noexcept { return failure_; }
  const std::string& image_id() const noexcept { return image_id_; }

 private:
  TranscriptionFailure failure_;
  std::string image_id_;
};

struct TranscriberOptions {
  /// Digit search region for carries: the digit box extended upward by this
  /// multiple of its own height.
  double carry_expansion = 1.0;
};

struct AnchorLayout {
  Detection equals;
  Detection op;
  std::vector<Detection> result_digits;
  std::vector<Detection> operand_digits;
  std::vector<Detection> carries;
  /// Extra '=' / operator detections that lost to a more confident one.
  std::vector<Detection> discarded;
};

AnchorLayout locate_anchors(const DetectionSet& set);

/// Digit values ordered by box horizontal center.
std::vector<int> read_result(const std::vector<Detection>& result_digits);

struct OperandRows {
  std::vector<Detection> row_a;  ///< upper row, left to right
  std::vector<Detection> row_b;  ///< lower row, left to right
};

/// Throws TranscriptionError(kSingleOperandRow) when fewer than two digits or
/// all y1 values coincide. `image_id` only labels the error.
OperandRows group_operand_rows(const std::vector<Detection>& operand_digits,
                               const std::string& image_id = {});

enum class Row { kA, kB };

struct CarryAssignment {
  /// (row, index within row) -> index into the carries list.
  std::map<std::pair<Row, std::size_t>, std::size_t> attached;
  /// Indices into the carries list that matched no digit.
  std::vector<std::size_t> isolated;
};

CarryAssignment associate_carries(const std::vector<Detection>& row_a,
                                  const std::vector<Detection>& row_b,
                                  const std::vector<Detection>& carries,
                                  const TranscriberOptions& options = {});

enum class WarningKind { kIsolatedCarry, kDiscardedAnchor };

struct TranscriptionWarning {
  WarningKind kind;
  Detection detection;

  /// One-line description, e.g. "isolated carry at [60,20,80,45]".
  std::string message() const;
};

struct Transcription {
  Expression expression;
  std::vector<TranscriptionWarning> warnings;
};

/// Throws TranscriptionError naming set.image_id.
Transcription transcribe(const DetectionSet& set, const TranscriberOptions& options = {});

}  // namespace vmer
