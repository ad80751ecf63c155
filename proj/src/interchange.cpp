#include "vmer/interchange.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(std::istream& in) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON", e.byte);
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  return out;
}

void finish(std::ostream& out, const std::string& what) {
  out.flush();
  if (!out) throw Error("failed writing " + what);
}

[[noreturn]] void schema_fail(const std::string& image_id, const std::string& what) {
  throw SchemaError("image '" + image_id + "': " + what);
}

double number_field(const json& obj, const char* key, const std::string& image_id) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) schema_fail(image_id, std::string("missing numeric '") + key + "'");
  return it->get<double>();
}

DetectionSet detection_set_from_json(const json& obj, bool annotation) {
  if (!obj.is_object()) throw SchemaError("image entry is not an object");
  auto id_it = obj.find("image_id");
  if (id_it == obj.end() || !id_it->is_string()) throw SchemaError("image entry without string 'image_id'");

  DetectionSet set;
  set.image_id = id_it->get<std::string>();
  for (const char* key : {"width", "height"}) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer() || it->get<long long>() <= 0) {
      schema_fail(set.image_id, std::string("'") + key + "' must be a positive integer");
    }
  }
  set.width = obj["width"].get<int>();
  set.height = obj["height"].get<int>();

  auto dets = obj.find("detections");
  if (dets == obj.end() || !dets->is_array()) schema_fail(set.image_id, "missing 'detections' array");
  set.detections.reserve(dets->size());
  for (const auto& d : *dets) {
    if (!d.is_object()) schema_fail(set.image_id, "detection is not an object");
    auto cls_it = d.find("class");
    if (cls_it == d.end() || !cls_it->is_string()) schema_fail(set.image_id, "detection without string 'class'");
    const auto cls = class_from_name(cls_it->get<std::string>());
    if (!cls) schema_fail(set.image_id, "unknown class '" + cls_it->get<std::string>() + "'");

    auto bb = d.find("bbox");
    if (bb == d.end() || !bb->is_array() || bb->size() != 4 ||
        !std::all_of(bb->begin(), bb->end(), [](const json& v) { return v.is_number(); })) {
      schema_fail(set.image_id, "'bbox' must be [x1, y1, x2, y2]");
    }
    BBox box{(*bb)[0].get<double>(), (*bb)[1].get<double>(), (*bb)[2].get<double>(),
             (*bb)[3].get<double>()};
    box.x1 = std::clamp(box.x1, 0.0, static_cast<double>(set.width));
    box.x2 = std::clamp(box.x2, 0.0, static_cast<double>(set.width));
    box.y1 = std::clamp(box.y1, 0.0, static_cast<double>(set.height));
    box.y2 = std::clamp(box.y2, 0.0, static_cast<double>(set.height));
    if (!box.valid()) schema_fail(set.image_id, "empty bbox after clamping to the image");

    double confidence = 1.0;
    if (d.contains("confidence")) {
      confidence = number_field(d, "confidence", set.image_id);
      if (!(confidence >= 0.0 && confidence <= 1.0)) schema_fail(set.image_id, "confidence outside [0,1]");
      if (annotation && confidence != 1.0) schema_fail(set.image_id, "annotation confidence must be 1.0");
    }
    set.detections.push_back({*cls, box, confidence});
  }
  return set;
}

ordered_json detection_set_to_json(const DetectionSet& set, bool with_confidence) {
  ordered_json obj;
  obj["image_id"] = set.image_id;
  obj["width"] = set.width;
  obj["height"] = set.height;
  ordered_json dets = ordered_json::array();
  for (const auto& d : set.detections) {
    ordered_json jd;
    jd["class"] = std::string(class_name(d.cls));
    jd["bbox"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
    if (with_confidence) jd["confidence"] = d.confidence;
    dets.push_back(std::move(jd));
  }
  obj["detections"] = std::move(dets);
  return obj;
}

// One image object per line.
void dump_list(const ordered_json& list, std::ostream& out) {
  if (list.empty()) {
    out << "[]\n";
    return;
  }
  out << "[\n";
  for (std::size_t i = 0; i < list.size(); ++i) {
    out << list[i].dump() << (i + 1 < list.size() ? ",\n" : "\n");
  }
  out << "]\n";
}

const json& top_level_array(const json& doc) {
  if (!doc.is_array()) throw SchemaError("top-level value must be a list");
  return doc;
}

}  // namespace

std::vector<DetectionSet> read_detections(std::istream& in) {
  const json doc = parse_json(in);
  std::vector<DetectionSet> sets;
  for (const auto& obj : top_level_array(doc)) sets.push_back(detection_set_from_json(obj, false));
  return sets;
}

std::vector<DetectionSet> read_detections_file(const std::string& path) {
  auto in = open_in(path);
  return read_detections(in);
}

void write_detections(const std::vector<DetectionSet>& sets, std::ostream& out) {
  ordered_json doc = ordered_json::array();
  for (const auto& s : sets) doc.push_back(detection_set_to_json(s, true));
  dump_list(doc, out);
  finish(out, "detections");
}

void write_detections_file(const std::vector<DetectionSet>& sets, const std::string& path) {
  auto out = open_out(path);
  write_detections(sets, out);
}

std::vector<Annotation> read_annotations(std::istream& in) {
  const json doc = parse_json(in);
  std::vector<Annotation> anns;
  for (const auto& obj : top_level_array(doc)) {
    Annotation a;
    a.ground_truth = detection_set_from_json(obj, true);
    a.image_id = a.ground_truth.image_id;
    auto it = obj.find("latex");
    if (it == obj.end() || !it->is_string()) schema_fail(a.image_id, "annotation without string 'latex'");
    a.latex = it->get<std::string>();
    anns.push_back(std::move(a));
  }
  return anns;
}

std::vector<Annotation> read_annotations_file(const std::string& path) {
  auto in = open_in(path);
  return read_annotations(in);
}

void write_annotations(const std::vector<Annotation>& annotations, std::ostream& out) {
  ordered_json doc = ordered_json::array();
  for (const auto& a : annotations) {
    ordered_json obj = detection_set_to_json(a.ground_truth, false);
    obj["image_id"] = a.image_id;
    obj["latex"] = a.latex;
    doc.push_back(std::move(obj));
  }
  dump_list(doc, out);
  finish(out, "annotations");
}

void write_annotations_file(const std::vector<Annotation>& annotations, const std::string& path) {
  auto out = open_out(path);
  write_annotations(annotations, out);
}

PostprocessParams read_params(std::istream& in) {
  const json doc = parse_json(in);
  if (!doc.is_object()) throw SchemaError("params must be an object");
  PostprocessParams p;
  for (const char* key : {"theta", "alpha"}) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) throw SchemaError(std::string("params: missing numeric '") + key + "'");
  }
  p.theta = doc["theta"].get<double>();
  p.alpha = doc["alpha"].get<double>();
  try {
    validate(p);
  } catch (const InvalidArgument& e) {
    throw SchemaError(e.what());
  }
  return p;
}

PostprocessParams read_params_file(const std::string& path) {
  auto in = open_in(path);
  return read_params(in);
}

void write_params(const PostprocessParams& params, std::ostream& out) {
  ordered_json doc;
  doc["theta"] = params.theta;
  doc["alpha"] = params.alpha;
  out << doc.dump() << '\n';
  finish(out, "params");
}

void write_params_file(const PostprocessParams& params, const std::string& path) {
  auto out = open_out(path);
  write_params(params, out);
}

std::vector<Prediction> read_predictions(std::istream& in) {
  const json doc = parse_json(in);
  std::vector<Prediction> preds;
  for (const auto& obj : top_level_array(doc)) {
    if (!obj.is_object() || !obj.contains("image_id") || !obj["image_id"].is_string()) {
      throw SchemaError("prediction without string 'image_id'");
    }
    Prediction p;
    p.image_id = obj["image_id"].get<std::string>();
    if (auto it = obj.find("latex"); it != obj.end() && it->is_string()) p.latex = it->get<std::string>();
    if (auto it = obj.find("error"); it != obj.end() && it->is_string()) p.error = it->get<std::string>();
    if (auto it = obj.find("warnings"); it != obj.end()) {
      if (!it->is_array()) schema_fail(p.image_id, "'warnings' must be a list");
      for (const auto& w : *it) {
        if (!w.is_string()) schema_fail(p.image_id, "warning is not a string");
        p.warnings.push_back(w.get<std::string>());
      }
    }
    if (p.latex.has_value() == p.error.has_value()) {
      schema_fail(p.image_id, "prediction needs exactly one of 'latex' or 'error'");
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

std::vector<Prediction> read_predictions_file(const std::string& path) {
  auto in = open_in(path);
  return read_predictions(in);
}

void write_predictions(const std::vector<Prediction>& predictions, std::ostream& out) {
  ordered_json doc = ordered_json::array();
  for (const auto& p : predictions) {
    ordered_json obj;
    obj["image_id"] = p.image_id;
    if (p.latex) obj["latex"] = *p.latex;
    if (p.error) obj["error"] = *p.error;
    obj["warnings"] = p.warnings;
    doc.push_back(std::move(obj));
  }
  dump_list(doc, out);
  finish(out, "predictions");
}

void write_predictions_file(const std::vector<Prediction>& predictions, const std::string& path) {
  auto out = open_out(path);
  write_predictions(predictions, out);
}

}  // namespace vmer
