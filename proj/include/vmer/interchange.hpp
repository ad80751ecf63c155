#pragma once

// JSON interchange: detection sets, annotations, postprocess parameters and
// per-image predictions.
//
// Detection file (a list, one object per image):
//   [{"image_id": "img_0001", "width": 320, "height": 320,
//     "detections": [{"class": "7", "bbox": [x1, y1, x2, y2], "confidence": 0.93}]}]
// Annotation files add a "latex" field and omit confidence (read as 1.0).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vmer/core.hpp"
#include "vmer/postprocess.hpp"

namespace vmer {

/// Boxes are clamped to [0,width]x[0,height]. Input order is preserved.
/// Throws ParseError (with byte offset) on malformed JSON and SchemaError
/// (naming the image_id) on schema violations.
std::vector<DetectionSet> read_detections(std::istream& in);
std::vector<DetectionSet> read_detections_file(const std::string& path);

void write_detections(const std::vector<DetectionSet>& sets, std::ostream& out);
void write_detections_file(const std::vector<DetectionSet>& sets, const std::string& path);

std::vector<Annotation> read_annotations(std::istream& in);
std::vector<Annotation> read_annotations_file(const std::string& path);

void write_annotations(const std::vector<Annotation>& annotations, std::ostream& out);
void write_annotations_file(const std::vector<Annotation>& annotations, const std::string& path);

/// `{"theta": 0.35, "alpha": 0.45}`
PostprocessParams read_params(std::istream& in);
PostprocessParams read_params_file(const std::string& path);
void write_params(const PostprocessParams& params, std::ostream& out);
void write_params_file(const PostprocessParams& params, const std::string& path);

/// One line of the transcription output. Exactly one of `latex` / `error` is set.
struct Prediction {
  std::string image_id;
  std::optional<std::string> latex;
  std::vector<std::string> warnings;
  std::optional<std::string> error;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions_file(const std::string& path);
void write_predictions(const std::vector<Prediction>& predictions, std::ostream& out);
void write_predictions_file(const std::vector<Prediction>& predictions, const std::string& path);

}  // namespace vmer
