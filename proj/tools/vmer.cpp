// vmer: command-line front end for the vertical expression recognizer.
//
// Exit codes: 0 success (per-image transcription failures included),
// 2 usage or configuration error, 1 runtime fault.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vmer/config.hpp"
#include "vmer/glyphs.hpp"
#include "vmer/interchange.hpp"
#include "vmer/noise.hpp"
#include "vmer/parallel.hpp"
#include "vmer/pipeline.hpp"
#include "vmer/postprocess.hpp"
#include "vmer/synthgen.hpp"

namespace {

using vmer::ConfigError;
using json = nlohmann::json;

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("input file not found: " + path);
}

json read_json_file(const std::string& path) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON at offset " + std::to_string(e.byte));
  }
}

struct ParamsFlags {
  std::string params_path;
  std::optional<double> theta;
  std::optional<double> alpha;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--params", params_path, "Postprocess parameters JSON");
    cmd->add_option("--theta", theta, "Confidence threshold (overrides --params)");
    cmd->add_option("--alpha", alpha, "IoU duplicate threshold (overrides --params)");
  }

  vmer::PostprocessParams resolve() const {
    vmer::PostprocessParams p;
    if (!params_path.empty()) {
      require_file(params_path);
      try {
        p = vmer::read_params_file(params_path);
      } catch (const vmer::SchemaError& e) {
        throw ConfigError(e.what());
      } catch (const vmer::ParseError& e) {
        throw ConfigError(params_path + ": " + e.what());
      }
    }
    if (theta) p.theta = *theta;
    if (alpha) p.alpha = *alpha;
    try {
      vmer::validate(p);
    } catch (const vmer::InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    return p;
  }
};

struct SplitFlags {
  std::string path;
  std::string fold;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--split", path, "Split manifest JSON {fold: [image_id, ...]}");
    cmd->add_option("--fold", fold, "Fold of the split manifest to use");
  }

  std::optional<std::set<std::string>> ids() const {
    if (path.empty() && fold.empty()) return std::nullopt;
    if (path.empty() || fold.empty()) throw ConfigError("--split and --fold go together");
    return vmer::load_split(path, fold);
  }
};

// generate ---------------------------------------------------------------

struct GenerateArgs {
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string images, labels;
  std::size_t builtin = 0;
  std::string config;
  std::optional<int> min_digits, max_digits;
  std::string mode, ops;
  unsigned workers = 0;
};

int run_generate(const GenerateArgs& a) {
  vmer::SynthConfig synth;
  if (!a.config.empty()) {
    try {
      synth = vmer::synth_config_from_json(read_json_file(a.config));
    } catch (const vmer::SchemaError& e) {
      throw ConfigError(e.what());
    }
  }
  json overrides = json::object();
  if (a.min_digits) overrides["min_digits"] = *a.min_digits;
  if (a.max_digits) overrides["max_digits"] = *a.max_digits;
  if (!a.mode.empty()) overrides["mode"] = a.mode;
  if (!a.ops.empty()) {
    json ops = json::array();
    for (char c : a.ops) {
      if (c != ',') ops.push_back(std::string(1, c));
    }
    overrides["ops"] = ops;
  }
  try {
    synth.expression = vmer::expression_config_from_json(overrides, synth.expression);
  } catch (const vmer::SchemaError& e) {
    throw ConfigError(e.what());
  }

  vmer::GlyphSet glyphs;
  if (!a.images.empty() || !a.labels.empty()) {
    if (a.images.empty() || a.labels.empty()) throw ConfigError("--images and --labels go together");
    require_file(a.images);
    require_file(a.labels);
    glyphs = vmer::load_glyphs_files(a.images, a.labels);
  } else if (a.builtin > 0) {
    glyphs = vmer::builtin_glyphs(a.builtin, a.seed);
  } else {
    throw ConfigError("give glyph files with --images/--labels or use --builtin-glyphs N");
  }

  vmer::generate_dataset(a.n, a.seed, synth, glyphs, a.out, a.workers);
  std::cout << (std::filesystem::path(a.out) / "manifest.json").string() << "\n";
  return 0;
}

// inject-noise -------------------------------------------------------------

struct NoiseArgs {
  std::string in, out, profile;
  std::uint64_t seed = 0;
  std::optional<double> jitter, flip, drop, dup;
  std::optional<int> exact_flips;
  std::string flip_mode;
  unsigned workers = 0;
};

int run_inject_noise(const NoiseArgs& a) {
  require_file(a.in);
  vmer::NoiseProfile profile;
  json overrides = a.profile.empty() ? json::object() : read_json_file(a.profile);
  if (a.jitter) overrides["box_jitter_sigma"] = *a.jitter;
  if (a.flip) overrides["label_flip_prob"] = *a.flip;
  if (a.drop) overrides["drop_prob"] = *a.drop;
  if (a.dup) overrides["duplicate_prob"] = *a.dup;
  if (a.exact_flips) overrides["exact_flips"] = *a.exact_flips;
  if (!a.flip_mode.empty()) overrides["flip_mode"] = a.flip_mode;
  try {
    profile = vmer::noise_profile_from_json(overrides, profile);
  } catch (const vmer::SchemaError& e) {
    throw ConfigError(e.what());
  }
  const auto sets = vmer::read_detections_file(a.in);
  vmer::write_detections_file(vmer::inject_noise_all(sets, profile, a.seed, a.workers), a.out);
  return 0;
}

// postprocess / transcribe -------------------------------------------------

int run_postprocess(const std::string& in, const std::string& out, const ParamsFlags& pf, unsigned workers) {
  require_file(in);
  const auto params = pf.resolve();
  vmer::write_detections_file(vmer::postprocess_all(vmer::read_detections_file(in), params, workers), out);
  return 0;
}

int run_transcribe(const std::string& in, const std::string& out, const ParamsFlags& pf, unsigned workers) {
  require_file(in);
  const auto params = pf.resolve();
  const auto predictions = vmer::transcribe_all(vmer::read_detections_file(in), params, workers);
  for (const auto& p : predictions) {
    for (const auto& w : p.warnings) std::cerr << p.image_id << ": " << w << "\n";
    if (p.error) std::cerr << p.image_id << ": error " << *p.error << "\n";
  }
  vmer::write_predictions_file(predictions, out);
  return 0;
}

// evaluate / optimize ------------------------------------------------------

int run_evaluate(const std::string& preds_path, const std::string& ann_path, const std::string& det_path,
                 const std::string& out, const SplitFlags& split) {
  require_file(preds_path);
  require_file(ann_path);
  auto predictions = vmer::read_predictions_file(preds_path);
  auto annotations = vmer::read_annotations_file(ann_path);
  std::optional<std::vector<vmer::DetectionSet>> detections;
  if (!det_path.empty()) {
    require_file(det_path);
    detections = vmer::read_detections_file(det_path);
  }
  if (const auto ids = split.ids()) {
    predictions = vmer::restrict_to(predictions, *ids);
    annotations = vmer::restrict_to(annotations, *ids);
    if (detections) detections = vmer::restrict_to(*detections, *ids);
  }
  const auto report = vmer::evaluate(predictions, annotations, detections ? &*detections : nullptr);
  const std::string text = vmer::to_json(report).dump(2) + "\n";
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary);
    f << text;
    if (!f) throw vmer::Error("cannot write " + out);
  }
  std::cout << vmer::format_report(report);
  return 0;
}

int run_optimize(const std::string& det_path, const std::string& ann_path, int grid, const std::string& out,
                 const SplitFlags& split, unsigned workers) {
  require_file(det_path);
  require_file(ann_path);
  if (grid < 2) throw ConfigError("--grid must be >= 2");
  auto detections = vmer::read_detections_file(det_path);
  auto annotations = vmer::read_annotations_file(ann_path);
  if (const auto ids = split.ids()) {
    detections = vmer::restrict_to(detections, *ids);
    annotations = vmer::restrict_to(annotations, *ids);
  }
  if (annotations.empty()) throw ConfigError("validation set is empty");
  const auto result = vmer::optimize_params(detections, annotations, grid, workers);
  std::cerr << "evaluated " << result.cells_evaluated << " cells\n";
  vmer::write_params_file(result.params, out);
  std::cout << "theta=" << result.params.theta << " alpha=" << result.params.alpha
            << " er=" << result.expression_rate << " map50=" << result.map50 << "\n";
  return 0;
}

// pipeline -----------------------------------------------------------------

int run_pipeline_cmd(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
                     std::optional<unsigned> workers) {
  vmer::RunConfig config = vmer::run_config_from_json(read_json_file(config_path));
  if (!out.empty()) config.run_dir = out;
  if (seed) config.seed = *seed;
  if (workers) config.workers = *workers;
  const auto result = vmer::run_pipeline(config, &std::cerr);
  std::cout << vmer::format_report(result.report);
  std::cout << result.report_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recognize handwritten vertical addition/subtraction from symbol detections"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, std::string("Worker threads (default: $") + vmer::kWorkersEnv + " or all cores)");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset of vertical expressions");
  generate->add_option("--n", gen.n, "Number of images")->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "Dataset seed");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_option("--images", gen.images, "IDX glyph images (e.g. MNIST train-images-idx3-ubyte)");
  generate->add_option("--labels", gen.labels, "IDX glyph labels");
  generate->add_option("--builtin-glyphs", gen.builtin, "Use N procedural glyphs per digit instead of IDX files");
  generate->add_option("--config", gen.config, "Synth config JSON");
  generate->add_option("--min-digits", gen.min_digits);
  generate->add_option("--max-digits", gen.max_digits);
  generate->add_option("--mode", gen.mode, "random | consistent");
  generate->add_option("--ops", gen.ops, "Allowed operators, e.g. '+,-'");

  std::string glyph_images, glyph_labels;
  std::size_t glyph_count = 64;
  std::uint64_t glyph_seed = 0;
  auto* export_glyphs = app.add_subcommand("export-glyphs", "Write the procedural glyph set as IDX files");
  export_glyphs->add_option("--images", glyph_images)->required();
  export_glyphs->add_option("--labels", glyph_labels)->required();
  export_glyphs->add_option("--per-digit", glyph_count)->check(CLI::PositiveNumber);
  export_glyphs->add_option("--seed", glyph_seed);

  NoiseArgs noise;
  auto* inject = app.add_subcommand("inject-noise", "Simulate detector output from ground-truth boxes");
  inject->add_option("--in", noise.in, "Detections or annotations JSON")->required();
  inject->add_option("--out", noise.out, "Output detections JSON")->required();
  inject->add_option("--seed", noise.seed);
  inject->add_option("--profile", noise.profile, "Noise profile JSON");
  inject->add_option("--jitter", noise.jitter, "Box jitter sigma in pixels");
  inject->add_option("--flip", noise.flip, "Label flip probability");
  inject->add_option("--drop", noise.drop, "Drop probability");
  inject->add_option("--dup", noise.dup, "Duplicate probability");
  inject->add_option("--exact-flips", noise.exact_flips, "Flip exactly N labels per image");
  inject->add_option("--flip-mode", noise.flip_mode, "uniform | single_token");

  std::string pp_in, pp_out;
  ParamsFlags pp_params;
  auto* post = app.add_subcommand("postprocess", "Confidence filter and IoU dedup");
  post->add_option("--in", pp_in)->required();
  post->add_option("--out", pp_out)->required();
  pp_params.add_to(post);

  std::string tr_in, tr_out;
  ParamsFlags tr_params;
  auto* transcribe = app.add_subcommand("transcribe", "Postprocess and transcribe detections to LaTeX");
  transcribe->add_option("--in", tr_in, "Detections JSON")->required();
  transcribe->add_option("--out", tr_out, "Predictions JSON")->required();
  tr_params.add_to(transcribe);

  std::string ev_preds, ev_ann, ev_det, ev_out;
  SplitFlags ev_split;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions (ER) and optionally detections (mAP@0.5)");
  evaluate->add_option("--predictions", ev_preds)->required();
  evaluate->add_option("--annotations", ev_ann)->required();
  evaluate->add_option("--detections", ev_det, "Postprocessed detections for mAP");
  evaluate->add_option("--out", ev_out, "Report JSON");
  ev_split.add_to(evaluate);

  std::string op_det, op_ann, op_out;
  int op_grid = 11;
  SplitFlags op_split;
  auto* optimize = app.add_subcommand("optimize", "Grid-search theta and alpha on a validation set");
  optimize->add_option("--detections", op_det, "Raw detections on the validation images")->required();
  optimize->add_option("--annotations", op_ann)->required();
  optimize->add_option("--grid", op_grid, "Grid steps per axis");
  optimize->add_option("--out", op_out, "Params JSON")->required();
  op_split.add_to(optimize);

  std::string pl_config, pl_out;
  std::optional<std::uint64_t> pl_seed;
  auto* pipeline = app.add_subcommand("pipeline", "generate -> inject-noise -> postprocess -> transcribe -> evaluate");
  pipeline->add_option("--config", pl_config, "Run config JSON")->required();
  pipeline->add_option("--out", pl_out, "Run directory (overrides config)");
  pipeline->add_option("--seed", pl_seed, "Seed (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  gen.workers = noise.workers = workers;
  try {
    if (*generate) return run_generate(gen);
    if (*export_glyphs) {
      vmer::write_glyph_files(vmer::builtin_glyphs(glyph_count, glyph_seed), glyph_images, glyph_labels);
      return 0;
    }
    if (*inject) return run_inject_noise(noise);
    if (*post) return run_postprocess(pp_in, pp_out, pp_params, workers);
    if (*transcribe) return run_transcribe(tr_in, tr_out, tr_params, workers);
    if (*evaluate) return run_evaluate(ev_preds, ev_ann, ev_det, ev_out, ev_split);
    if (*optimize) return run_optimize(op_det, op_ann, op_grid, op_out, op_split, workers);
    if (*pipeline) {
      std::optional<unsigned> w;
      if (workers) w = workers;
      return run_pipeline_cmd(pl_config, pl_out, pl_seed, w);
    }
  } catch (const ConfigError& e) {
    std::cerr << "vmer: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "vmer: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
