#pragma once

// Batch stages shared by the command-line tool and the Python module:
// noise injection over many images, transcription to predictions,
// evaluation reports, and the end-to-end run.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmer/errors.hpp"
#include "vmer/evaluation.hpp"
#include "vmer/interchange.hpp"
#include "vmer/noise.hpp"
#include "vmer/postprocess.hpp"
#include "vmer/synthgen.hpp"

namespace vmer {

/// Raised for bad user configuration (the CLI maps it to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Image `index` gets its own stream derived from (seed, index).
std::vector<DetectionSet> inject_noise_all(const std::vector<DetectionSet>& sets, const NoiseProfile& profile,
                                           std::uint64_t seed, unsigned workers = 0);

std::vector<DetectionSet> postprocess_all(const std::vector<DetectionSet>& sets, const PostprocessParams& params,
                                          unsigned workers = 0);

/// postprocess -> transcribe -> emit_latex per image. Transcription failures
/// become predictions with `error` set; output order follows input order.
std::vector<Prediction> transcribe_all(const std::vector<DetectionSet>& sets, const PostprocessParams& params,
                                       unsigned workers = 0);

struct EvaluationReport {
  std::size_t n_images = 0;
  ERReport er;
  std::optional<MeanApResult> detection;  ///< present iff detections were supplied
};

/// Pairs everything with the annotations by image_id. Throws
/// InvalidArgument listing orphan ids on any mismatch.
EvaluationReport evaluate(const std::vector<Prediction>& predictions, const std::vector<Annotation>& annotations,
                          const std::vector<DetectionSet>* detections = nullptr);

/// {"map50", "per_class_ap", "er", "er_le1", "er_le2", "n_images"}; detection
/// fields only when present.
nlohmann::ordered_json to_json(const EvaluationReport& report);

/// Human-readable summary table.
std::string format_report(const EvaluationReport& report);

/// Split manifest: {"<fold>": ["img_000001", ...], ...}. Throws ConfigError
/// when the file or fold is missing.
std::set<std::string> load_split(const std::string& path, const std::string& fold);

template <typename T>
std::vector<T> restrict_to(const std::vector<T>& items, const std::set<std::string>& ids) {
  std::vector<T> out;
  for (const auto& item : items) {
    if (ids.count(item.image_id)) out.push_back(item);
  }
  return out;
}

struct RunConfig {
  std::uint64_t seed = 0;
  std::string run_dir = "run";
  /// IDX glyph files; the procedural glyph set is used when both are empty.
  std::string glyph_images;
  std::string glyph_labels;
  std::size_t builtin_glyphs_per_digit = 64;
  std::size_t n_images = 100;
  SynthConfig synth;
  NoiseProfile noise = NoiseProfile::none();
  /// Fixed parameters, or empty to run the grid search.
  std::optional<PostprocessParams> params = PostprocessParams{};
  int grid_steps = 11;
  /// With the grid search: the first images tune the parameters and the rest
  /// are evaluated. Zero tunes and evaluates on all images.
  std::size_t validation_images = 0;
  unsigned workers = 0;
};

/// Throws ConfigError on schema problems.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::ordered_json to_json(const RunConfig& config);

/// Throws ConfigError when a referenced input file does not exist.
void check_inputs(const RunConfig& config);

GlyphSet load_run_glyphs(const RunConfig& config);

struct PipelineResult {
  EvaluationReport report;
  PostprocessParams params;
  std::string report_path;
};

/// generate -> inject-noise -> postprocess -> transcribe -> evaluate, with
/// every artifact written under config.run_dir. Progress lines go to `log`
/// when given. A failing stage is rethrown as Error naming the stage.
PipelineResult run_pipeline(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace vmer
