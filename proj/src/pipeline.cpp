#include "vmer/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "vmer/config.hpp"
#include "vmer/latex.hpp"
#include "vmer/parallel.hpp"
#include "vmer/transcriber.hpp"

namespace vmer {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::uint32_t kNoiseStage = 1;

Rng stage_rng(std::uint64_t seed, std::size_t index, std::uint32_t stage) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(std::uint64_t{index} >> 32), stage};
  return Rng(seq);
}

template <typename F>
auto stage(const char* name, std::ostream* log, F&& f) {
  if (log) *log << "[" << name << "]\n";
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string("stage '") + name + "' failed: " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string orphan_message(const std::vector<std::string>& orphans) {
  std::string msg = "unpaired image ids:";
  for (const auto& id : orphans) msg += " " + id;
  return msg;
}

}  // namespace

std::vector<DetectionSet> inject_noise_all(const std::vector<DetectionSet>& sets, const NoiseProfile& profile,
                                           std::uint64_t seed, unsigned workers) {
  validate(profile);
  std::vector<DetectionSet> out(sets.size());
  parallel_for(sets.size(), workers, [&](std::size_t i) {
    Rng rng = stage_rng(seed, i, kNoiseStage);
    out[i] = inject_noise(sets[i], profile, rng);
  });
  return out;
}

std::vector<DetectionSet> postprocess_all(const std::vector<DetectionSet>& sets, const PostprocessParams& params,
                                          unsigned workers) {
  validate(params);
  std::vector<DetectionSet> out(sets.size());
  parallel_for(sets.size(), workers, [&](std::size_t i) { out[i] = postprocess(sets[i], params); });
  return out;
}

std::vector<Prediction> transcribe_all(const std::vector<DetectionSet>& sets, const PostprocessParams& params,
                                       unsigned workers) {
  validate(params);
  std::vector<Prediction> out(sets.size());
  parallel_for(sets.size(), workers, [&](std::size_t i) {
    Prediction& p = out[i];
    p.image_id = sets[i].image_id;
    try {
      const Transcription t = transcribe(postprocess(sets[i], params));
      p.latex = emit_latex(t.expression);
      for (const auto& w : t.warnings) p.warnings.push_back(w.message());
    } catch (const TranscriptionError& e) {
      p.error = failure_name(e.failure());
    }
  });
  return out;
}

EvaluationReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Annotation>& annotations,
                          const std::vector<DetectionSet>* detections) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) by_id.emplace(p.image_id, &p);
  std::set<std::string> annotated;
  for (const auto& a : annotations) annotated.insert(a.image_id);

  std::vector<std::string> orphans;
  for (const auto& [id, _] : by_id) {
    if (!annotated.count(id)) orphans.push_back(id);
  }
  std::vector<std::optional<std::string>> pred_latex;
  std::vector<std::string> gt_latex;
  for (const auto& a : annotations) {
    auto it = by_id.find(a.image_id);
    if (it == by_id.end()) {
      orphans.push_back(a.image_id);
      continue;
    }
    pred_latex.push_back(it->second->latex);
    gt_latex.push_back(a.latex);
  }
  if (detections) {
    for (const auto& d : *detections) {
      if (!annotated.count(d.image_id)) orphans.push_back(d.image_id);
    }
  }
  if (!orphans.empty()) throw InvalidArgument(orphan_message(orphans));

  EvaluationReport report;
  report.n_images = annotations.size();
  report.er = expression_recognition(pred_latex, gt_latex);
  if (detections) {
    std::vector<DetectionSet> gts;
    for (const auto& a : annotations) gts.push_back(a.ground_truth);
    report.detection = mean_ap(*detections, gts, 0.5);
  }
  return report;
}

ordered_json to_json(const EvaluationReport& report) {
  ordered_json j;
  if (report.detection) {
    j["map50"] = report.detection->map;
    ordered_json per_class = ordered_json::object();
    for (SymbolClass c : kAllClasses) {
      if (const auto& ap = report.detection->per_class[class_code(c)]) per_class[std::string(class_name(c))] = *ap;
    }
    j["per_class_ap"] = per_class;
  }
  j["er"] = report.er.er();
  j["er_le1"] = report.er.er_le1();
  j["er_le2"] = report.er.er_le2();
  j["n_images"] = report.n_images;
  return j;
}

std::string format_report(const EvaluationReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "images     %zu\n", report.n_images);
  out << line;
  std::snprintf(line, sizeof line, "ER         %6.2f%%  (%zu/%zu)\n", 100.0 * report.er.er(), report.er.exact,
                report.er.total);
  out << line;
  std::snprintf(line, sizeof line, "ER <=1     %6.2f%%  (%zu/%zu)\n", 100.0 * report.er.er_le1(), report.er.within_1,
                report.er.total);
  out << line;
  std::snprintf(line, sizeof line, "ER <=2     %6.2f%%  (%zu/%zu)\n", 100.0 * report.er.er_le2(), report.er.within_2,
                report.er.total);
  out << line;
  if (report.detection) {
    std::snprintf(line, sizeof line, "mAP@0.5    %6.2f%%\n", 100.0 * report.detection->map);
    out << line;
    for (SymbolClass c : kAllClasses) {
      if (const auto& ap = report.detection->per_class[class_code(c)]) {
        std::snprintf(line, sizeof line, "  AP %-6s %6.2f%%\n", std::string(class_name(c)).c_str(), 100.0 * *ap);
        out << line;
      }
    }
  }
  return out.str();
}

std::set<std::string> load_split(const std::string& path, const std::string& fold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open split manifest " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("split manifest " + path + ": malformed JSON at offset " + std::to_string(e.byte));
  }
  if (!doc.is_object() || !doc.contains(fold) || !doc[fold].is_array()) {
    throw ConfigError("split manifest " + path + " has no fold '" + fold + "'");
  }
  std::set<std::string> ids;
  for (const auto& id : doc[fold]) {
    if (!id.is_string()) throw ConfigError("split manifest " + path + ": ids must be strings");
    ids.insert(id.get<std::string>());
  }
  return ids;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  try {
    if (!j.is_object()) throw ConfigError("run config must be an object");
    static const std::set<std::string> known = {"seed", "run_dir", "glyphs", "n_images", "synth", "noise",
                                                "postprocess", "grid_steps", "validation_images", "workers"};
    for (const auto& [k, _] : j.items()) {
      if (!known.count(k)) throw ConfigError("run config: unknown key '" + k + "'");
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("run_dir")) c.run_dir = j["run_dir"].get<std::string>();
    if (j.contains("glyphs")) {
      const json& g = j["glyphs"];
      if (g.is_string() && g.get<std::string>() == "builtin") {
        c.glyph_images.clear();
        c.glyph_labels.clear();
      } else if (g.is_object()) {
        for (const auto& [k, _] : g.items()) {
          if (k != "images" && k != "labels" && k != "builtin_per_digit") {
            throw ConfigError("run config: unknown glyphs key '" + k + "'");
          }
        }
        if (g.contains("images")) c.glyph_images = g["images"].get<std::string>();
        if (g.contains("labels")) c.glyph_labels = g["labels"].get<std::string>();
        if (g.contains("builtin_per_digit")) c.builtin_glyphs_per_digit = g["builtin_per_digit"].get<std::size_t>();
      } else {
        throw ConfigError("run config: 'glyphs' must be \"builtin\" or {\"images\", \"labels\"}");
      }
    }
    if (j.contains("n_images")) c.n_images = j["n_images"].get<std::size_t>();
    if (j.contains("synth")) c.synth = synth_config_from_json(j["synth"], c.synth);
    if (j.contains("noise")) c.noise = noise_profile_from_json(j["noise"], c.noise);
    if (j.contains("postprocess")) {
      const json& p = j["postprocess"];
      if (p.is_string() && p.get<std::string>() == "optimize") {
        c.params.reset();
      } else if (p.is_object()) {
        PostprocessParams params = c.params.value_or(PostprocessParams{});
        if (p.contains("theta")) params.theta = p["theta"].get<double>();
        if (p.contains("alpha")) params.alpha = p["alpha"].get<double>();
        validate(params);
        c.params = params;
      } else {
        throw ConfigError("run config: 'postprocess' must be \"optimize\" or {\"theta\", \"alpha\"}");
      }
    }
    if (j.contains("grid_steps")) c.grid_steps = j["grid_steps"].get<int>();
    if (j.contains("validation_images")) c.validation_images = j["validation_images"].get<std::size_t>();
    if (j.contains("workers")) c.workers = j["workers"].get<unsigned>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.n_images == 0) throw ConfigError("run config: n_images must be >= 1");
  if (c.grid_steps < 2) throw ConfigError("run config: grid_steps must be >= 2");
  if (!c.params && c.validation_images >= c.n_images) {
    throw ConfigError("run config: validation_images must leave images to evaluate");
  }
  if (c.glyph_images.empty() != c.glyph_labels.empty()) {
    throw ConfigError("run config: glyph images and labels must be given together");
  }
  return c;
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["run_dir"] = c.run_dir;
  if (c.glyph_images.empty()) {
    j["glyphs"] = {{"builtin_per_digit", c.builtin_glyphs_per_digit}};
  } else {
    j["glyphs"] = {{"images", c.glyph_images}, {"labels", c.glyph_labels}};
  }
  j["n_images"] = c.n_images;
  j["synth"] = to_json(c.synth);
  j["noise"] = to_json(c.noise);
  if (c.params) {
    j["postprocess"] = to_json(*c.params);
  } else {
    j["postprocess"] = "optimize";
  }
  j["grid_steps"] = c.grid_steps;
  j["validation_images"] = c.validation_images;
  j["workers"] = c.workers;
  return j;
}

void check_inputs(const RunConfig& config) {
  for (const auto& path : {config.glyph_images, config.glyph_labels}) {
    if (!path.empty() && !std::filesystem::exists(path)) throw ConfigError("input file not found: " + path);
  }
}

GlyphSet load_run_glyphs(const RunConfig& config) {
  if (config.glyph_images.empty()) return builtin_glyphs(config.builtin_glyphs_per_digit, config.seed);
  return load_glyphs_files(config.glyph_images, config.glyph_labels);
}

PipelineResult run_pipeline(const RunConfig& config, std::ostream* log) {
  namespace fs = std::filesystem;
  check_inputs(config);
  const fs::path dir(config.run_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create run directory " + dir.string() + ": " + ec.message());
  write_text(dir / "config.json", to_json(config).dump(2) + "\n");

  const auto annotations = stage("generate", log, [&] {
    const GlyphSet glyphs = load_run_glyphs(config);
    generate_dataset(config.n_images, config.seed, config.synth, glyphs, dir / "dataset", config.workers);
    return read_annotations_file((dir / "dataset" / "annotations.json").string());
  });

  const auto noisy = stage("inject-noise", log, [&] {
    std::vector<DetectionSet> truth;
    for (const auto& a : annotations) truth.push_back(a.ground_truth);
    auto sets = inject_noise_all(truth, config.noise, config.seed, config.workers);
    write_detections_file(sets, (dir / "detections.json").string());
    return sets;
  });

  std::vector<Annotation> eval_annotations = annotations;
  std::vector<DetectionSet> eval_detections = noisy;
  const PostprocessParams params = stage("postprocess", log, [&] {
    PostprocessParams p;
    if (config.params) {
      p = *config.params;
    } else {
      const std::size_t k = config.validation_images;
      const std::vector<DetectionSet> val_det(noisy.begin(), noisy.begin() + (k ? k : noisy.size()));
      const std::vector<Annotation> val_ann(annotations.begin(), annotations.begin() + (k ? k : annotations.size()));
      const OptimizeResult r = optimize_params(val_det, val_ann, config.grid_steps, config.workers);
      if (log) {
        *log << "grid search: " << r.cells_evaluated << " cells, best ER " << r.expression_rate << "\n";
      }
      p = r.params;
      if (k) {
        eval_annotations.assign(annotations.begin() + k, annotations.end());
        eval_detections.assign(noisy.begin() + k, noisy.end());
      }
    }
    write_params_file(p, (dir / "params.json").string());
    return p;
  });

  const auto predictions = stage("transcribe", log, [&] {
    auto preds = transcribe_all(eval_detections, params, config.workers);
    write_predictions_file(preds, (dir / "predictions.json").string());
    return preds;
  });

  return stage("evaluate", log, [&] {
    const auto cleaned = postprocess_all(eval_detections, params, config.workers);
    PipelineResult result;
    result.params = params;
    result.report = evaluate(predictions, eval_annotations, &cleaned);
    ordered_json j = to_json(result.report);
    j["seed"] = config.seed;
    j["params"] = to_json(params);
    result.report_path = (dir / "report.json").string();
    write_text(result.report_path, j.dump(2) + "\n");
    write_text(dir / "report.txt", format_report(result.report));
    return result;
  });
}

}  // namespace vmer
