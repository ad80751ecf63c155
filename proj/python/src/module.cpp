#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vmer/config.hpp"
#include "vmer/errors.hpp"
#include "vmer/evaluation.hpp"
#include "vmer/glyphs.hpp"
#include "vmer/interchange.hpp"
#include "vmer/latex.hpp"
#include "vmer/noise.hpp"
#include "vmer/pipeline.hpp"
#include "vmer/postprocess.hpp"
#include "vmer/synthgen.hpp"
#include "vmer/transcriber.hpp"

namespace py = pybind11;
using namespace vmer;

namespace {

template <typename T, typename Writer>
std::string to_text(const T& value, Writer write) {
  std::ostringstream out;
  write(value, out);
  return out.str();
}

template <typename Reader>
auto from_text(const std::string& text, Reader read) {
  std::istringstream in(text);
  return read(in);
}

nlohmann::json parse_config(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON", e.byte);
  }
}

std::string class_repr(SymbolClass c) { return std::string(class_name(c)); }

}  // namespace

PYBIND11_MODULE(_vmer, m) {
  m.doc() = "Detection post-processing, transcription and evaluation for vertical arithmetic";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto parse_error = py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  auto transcription_error = py::register_exception<TranscriptionError>(m, "TranscriptionError", error.ptr());
  (void)parse_error;
  (void)transcription_error;

  m.attr("CLASS_NAMES") = [] {
    py::list names;
    for (auto c : kAllClasses) names.append(class_repr(c));
    return names;
  }();

  py::class_<BBox>(m, "BBox")
      .def(py::init<>())
      .def(py::init<double, double, double, double>(), py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"))
      .def_readwrite("x1", &BBox::x1)
      .def_readwrite("y1", &BBox::y1)
      .def_readwrite("x2", &BBox::x2)
      .def_readwrite("y2", &BBox::y2)
      .def_property_readonly("width", &BBox::width)
      .def_property_readonly("height", &BBox::height)
      .def_property_readonly("area", &BBox::area)
      .def_property_readonly("center_x", &BBox::center_x)
      .def_property_readonly("center_y", &BBox::center_y)
      .def("as_tuple", [](const BBox& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); })
      .def(py::self == py::self)
      .def("__repr__", [](const BBox& b) {
        std::ostringstream s;
        s << "BBox(" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ")";
        return s.str();
      });

  py::class_<Detection>(m, "Detection")
      .def(py::init([](const std::string& cls, const BBox& box, double confidence) {
             auto c = class_from_name(cls);
             if (!c) throw InvalidArgument("unknown class '" + cls + "'");
             return Detection{*c, box, confidence};
           }),
           py::arg("cls"), py::arg("box"), py::arg("confidence") = 1.0)
      .def_property(
          "cls", [](const Detection& d) { return class_repr(d.cls); },
          [](Detection& d, const std::string& name) {
            auto c = class_from_name(name);
            if (!c) throw InvalidArgument("unknown class '" + name + "'");
            d.cls = *c;
          })
      .def_readwrite("box", &Detection::box)
      .def_readwrite("confidence", &Detection::confidence)
      .def(py::self == py::self)
      .def("__repr__", [](const Detection& d) {
        std::ostringstream s;
        s << "Detection('" << class_name(d.cls) << "', (" << d.box.x1 << ", " << d.box.y1 << ", " << d.box.x2
          << ", " << d.box.y2 << "), " << d.confidence << ")";
        return s.str();
      });

  py::class_<DetectionSet>(m, "DetectionSet")
      .def(py::init<>())
      .def(py::init([](std::string id, int w, int h, std::vector<Detection> dets) {
             return DetectionSet{std::move(id), w, h, std::move(dets)};
           }),
           py::arg("image_id"), py::arg("width"), py::arg("height"), py::arg("detections") = std::vector<Detection>{})
      .def_readwrite("image_id", &DetectionSet::image_id)
      .def_readwrite("width", &DetectionSet::width)
      .def_readwrite("height", &DetectionSet::height)
      .def_readwrite("detections", &DetectionSet::detections)
      .def("__len__", [](const DetectionSet& s) { return s.detections.size(); })
      .def(py::self == py::self)
      .def("__repr__", [](const DetectionSet& s) {
        return "DetectionSet('" + s.image_id + "', " + std::to_string(s.detections.size()) + " detections)";
      });

  py::class_<DigitSlot>(m, "DigitSlot")
      .def(py::init([](int digit, bool carry) { return DigitSlot{digit, carry}; }), py::arg("digit"),
           py::arg("has_carry") = false)
      .def_readwrite("digit", &DigitSlot::digit)
      .def_readwrite("has_carry", &DigitSlot::has_carry)
      .def(py::self == py::self);

  py::enum_<Operator>(m, "Operator").value("PLUS", Operator::kPlus).value("MINUS", Operator::kMinus);

  py::class_<Expression>(m, "Expression")
      .def(py::init<>())
      .def_readwrite("operand_a", &Expression::operand_a)
      .def_readwrite("op", &Expression::op)
      .def_readwrite("operand_b", &Expression::operand_b)
      .def_readwrite("result", &Expression::result)
      .def(py::self == py::self)
      .def("__repr__", [](const Expression& e) { return "Expression(" + emit_latex(e) + ")"; });

  py::class_<Annotation>(m, "Annotation")
      .def(py::init<>())
      .def_readwrite("image_id", &Annotation::image_id)
      .def_readwrite("ground_truth", &Annotation::ground_truth)
      .def_readwrite("latex", &Annotation::latex)
      .def(py::self == py::self);

  py::class_<Prediction>(m, "Prediction")
      .def(py::init<>())
      .def_readwrite("image_id", &Prediction::image_id)
      .def_readwrite("latex", &Prediction::latex)
      .def_readwrite("warnings", &Prediction::warnings)
      .def_readwrite("error", &Prediction::error)
      .def(py::self == py::self);

  py::class_<PostprocessParams>(m, "PostprocessParams")
      .def(py::init([](double theta, double alpha) {
             PostprocessParams p{theta, alpha};
             validate(p);
             return p;
           }),
           py::arg("theta") = 0.0, py::arg("alpha") = 1.0)
      .def_readwrite("theta", &PostprocessParams::theta)
      .def_readwrite("alpha", &PostprocessParams::alpha)
      .def(py::self == py::self)
      .def("__repr__", [](const PostprocessParams& p) {
        std::ostringstream s;
        s << "PostprocessParams(theta=" << p.theta << ", alpha=" << p.alpha << ")";
        return s.str();
      });

  py::class_<OptimizeResult>(m, "OptimizeResult")
      .def_readonly("params", &OptimizeResult::params)
      .def_readonly("expression_rate", &OptimizeResult::expression_rate)
      .def_readonly("map50", &OptimizeResult::map50)
      .def_readonly("cells_evaluated", &OptimizeResult::cells_evaluated);

  py::class_<ERReport>(m, "ERReport")
      .def_readonly("total", &ERReport::total)
      .def_readonly("exact", &ERReport::exact)
      .def_readonly("within_1", &ERReport::within_1)
      .def_readonly("within_2", &ERReport::within_2)
      .def_property_readonly("er", &ERReport::er)
      .def_property_readonly("er_le1", &ERReport::er_le1)
      .def_property_readonly("er_le2", &ERReport::er_le2);

  py::class_<MeanApResult>(m, "MeanApResult")
      .def_readonly("map", &MeanApResult::map)
      .def_property_readonly("per_class", [](const MeanApResult& r) {
        py::dict out;
        for (auto c : kAllClasses) {
          if (const auto& ap = r.per_class[class_code(c)]) out[py::str(class_repr(c))] = *ap;
        }
        return out;
      });

  py::class_<Transcription>(m, "Transcription")
      .def_readonly("expression", &Transcription::expression)
      .def_property_readonly("latex", [](const Transcription& t) { return emit_latex(t.expression); })
      .def_property_readonly("warnings", [](const Transcription& t) {
        std::vector<std::string> out;
        for (const auto& w : t.warnings) out.push_back(w.message());
        return out;
      });

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("params", &PipelineResult::params)
      .def_readonly("report_path", &PipelineResult::report_path)
      .def_property_readonly("er", [](const PipelineResult& r) { return r.report.er; })
      .def_property_readonly("detection", [](const PipelineResult& r) { return r.report.detection; })
      .def_property_readonly("report_json", [](const PipelineResult& r) { return to_json(r.report).dump(); });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("filter_by_confidence", &filter_by_confidence, py::arg("set"), py::arg("theta"));
  m.def("dedup_by_iou", &dedup_by_iou, py::arg("set"), py::arg("alpha"));
  m.def("postprocess", &postprocess, py::arg("set"), py::arg("params"));
  m.def(
      "transcribe",
      [](const DetectionSet& set, double carry_expansion) {
        return transcribe(set, TranscriberOptions{carry_expansion});
      },
      py::arg("set"), py::arg("carry_expansion") = 1.0);
  m.def(
      "transcribe_all",
      [](const std::vector<DetectionSet>& sets, const PostprocessParams& params, unsigned workers) {
        py::gil_scoped_release release;
        return transcribe_all(sets, params, workers);
      },
      py::arg("sets"), py::arg("params") = PostprocessParams{}, py::arg("workers") = 0);

  m.def("emit_latex", &emit_latex, py::arg("expression"));
  m.def("parse_latex", [](const std::string& text) { return parse_latex(text); }, py::arg("text"));
  m.def(
      "tokenize",
      [](const Expression& e) {
        std::vector<std::string> out;
        for (auto c : tokenize(e)) out.push_back(class_repr(c));
        return out;
      },
      py::arg("expression"));

  m.def(
      "mean_ap",
      [](const std::vector<DetectionSet>& preds, const std::vector<DetectionSet>& gts, double iou_threshold) {
        return mean_ap(preds, gts, iou_threshold);
      },
      py::arg("predictions"), py::arg("ground_truth"), py::arg("iou_threshold") = 0.5);
  m.def("expression_recognition", &expression_recognition, py::arg("predictions"), py::arg("ground_truth"));
  m.def(
      "optimize_params",
      [](const std::vector<DetectionSet>& preds, const std::vector<Annotation>& anns, int grid_steps,
         unsigned workers) {
        py::gil_scoped_release release;
        return optimize_params(preds, anns, grid_steps, workers);
      },
      py::arg("predictions"), py::arg("annotations"), py::arg("grid_steps") = 11, py::arg("workers") = 0);

  m.def("read_detections", [](const std::string& text) { return from_text(text, [](auto& in) { return read_detections(in); }); },
        py::arg("text"));
  m.def("write_detections",
        [](const std::vector<DetectionSet>& sets) {
          return to_text(sets, [](const auto& v, auto& out) { write_detections(v, out); });
        },
        py::arg("sets"));
  m.def("read_detections_file", &read_detections_file, py::arg("path"));
  m.def("write_detections_file", &write_detections_file, py::arg("sets"), py::arg("path"));
  m.def("read_annotations", [](const std::string& text) { return from_text(text, [](auto& in) { return read_annotations(in); }); },
        py::arg("text"));
  m.def("write_annotations",
        [](const std::vector<Annotation>& anns) {
          return to_text(anns, [](const auto& v, auto& out) { write_annotations(v, out); });
        },
        py::arg("annotations"));
  m.def("read_annotations_file", &read_annotations_file, py::arg("path"));
  m.def("read_predictions_file", &read_predictions_file, py::arg("path"));
  m.def("write_predictions_file", &write_predictions_file, py::arg("predictions"), py::arg("path"));

  m.def(
      "inject_noise",
      [](const std::vector<DetectionSet>& sets, const std::string& profile_json, std::uint64_t seed,
         unsigned workers) {
        const NoiseProfile profile = noise_profile_from_json(parse_config(profile_json), NoiseProfile::none());
        py::gil_scoped_release release;
        return inject_noise_all(sets, profile, seed, workers);
      },
      py::arg("sets"), py::arg("profile_json") = "{}", py::arg("seed") = 0, py::arg("workers") = 0);

  m.def(
      "generate_dataset",
      [](std::size_t n, std::uint64_t seed, const std::filesystem::path& out_dir, const std::string& synth_json,
         std::size_t builtin_per_digit, unsigned workers) {
        const SynthConfig synth = synth_config_from_json(parse_config(synth_json));
        const GlyphSet glyphs = builtin_glyphs(builtin_per_digit, seed);
        py::gil_scoped_release release;
        const Manifest manifest = generate_dataset(n, seed, synth, glyphs, out_dir, workers);
        return manifest.annotations;
      },
      py::arg("n"), py::arg("seed"), py::arg("out_dir"), py::arg("synth_json") = "{}",
      py::arg("builtin_per_digit") = 64, py::arg("workers") = 0,
      "Render n scenes with procedural glyphs and return the annotation file name");

  m.def(
      "run_pipeline",
      [](const std::string& config_json) {
        const RunConfig config = run_config_from_json(parse_config(config_json));
        py::gil_scoped_release release;
        return run_pipeline(config);
      },
      py::arg("config_json"));
}
