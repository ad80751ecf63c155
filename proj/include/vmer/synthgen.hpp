#pragma once

// Synthetic vertical-expression scenes: sample an expression, lay it out on a
// right-aligned column grid, rasterize it from digit glyphs, and write images
// with exact annotations.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "vmer/core.hpp"
#include "vmer/glyphs.hpp"

namespace vmer {

using Rng = std::mt19937_64;

enum class ArithmeticMode {
  kRandom,      ///< result digits and carries sampled independently
  kConsistent,  ///< result and carries follow column arithmetic
};

struct ExpressionConfig {
  int min_digits = 1;
  int max_digits = 4;
  bool allow_plus = true;
  bool allow_minus = true;
  ArithmeticMode mode = ArithmeticMode::kRandom;
};

/// Throws InvalidArgument unless 1 <= min_digits <= max_digits <= 6 and at
/// least one operator is allowed.
void validate(const ExpressionConfig& config);

Expression sample_expression(Rng& rng, const ExpressionConfig& config);

/// Column arithmetic on two operands (most-significant digit first).
///
/// Addition flags the digit of the column that receives a carry (A's digit,
/// or B's when A is shorter). Subtraction swaps operands so that A >= B and
/// flags the minuend digit of every column that borrows. Leading zeros are
/// stripped from the result.
Expression column_arithmetic(const std::vector<int>& a, Operator op, const std::vector<int>& b);

/// Geometry constants, in units of the column pitch `cell` unless noted.
struct LayoutConfig {
  double cell = 36.0;          ///< column pitch in pixels
  double glyph_scale = 0.7;    ///< digit box side
  double carry_scale = 0.6;    ///< carry box side relative to a digit box
  double carry_gap = 0.1;      ///< gap between a carry and its digit
  double row_gap = 0.3;        ///< vertical gap between bands
  double equals_height = 0.5;  ///< equals box height relative to a digit box
  double jitter = 0.12;        ///< per-placement offset, uniform in +-jitter*cell
};

struct Placement {
  SymbolClass cls = SymbolClass::k0;
  BBox box;
  int glyph_index = -1;  ///< index into the digit's glyph list; -1 for strokes

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct SceneSpec {
  Expression expression;
  int width = 320;
  int height = 320;
  std::vector<Placement> placements;
  std::uint64_t rng_seed = 0;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Places `e` on a width x height canvas. Verifies that transcribing the
/// placements reproduces `e`. Throws InvalidArgument when the expression
/// does not fit.
SceneSpec layout(const Expression& e, Rng& rng, int width = 320, int height = 320,
                 const LayoutConfig& config = {});

/// Picks a glyph for every digit and carry placement (carries use '1' glyphs).
void assign_glyphs(SceneSpec& spec, const GlyphSet& glyphs, Rng& rng);

/// Placements as detections with confidence 1.0.
DetectionSet ground_truth(const SceneSpec& spec, const std::string& image_id);

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  ///< row-major, 255 = white

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// White canvas; glyphs scaled into their boxes and multiplied in; '+', '-'
/// and '=' drawn as antialiased strokes 12% of the box height thick.
GrayImage rasterize(const SceneSpec& spec, const GlyphSet& glyphs);

void write_pgm(const GrayImage& image, std::ostream& out);
GrayImage read_pgm(std::istream& in);

/// `class_code cx cy w h` per line, normalized by the canvas, 6 decimals.
std::string yolo_labels(const SceneSpec& spec);

struct SynthConfig {
  ExpressionConfig expression;
  LayoutConfig layout;
  int width = 320;
  int height = 320;
};

struct GeneratedScene {
  SceneSpec spec;
  GrayImage image;
  Annotation annotation;
};

/// "img_000042"
std::string image_id_for(std::size_t index);

/// Scene `index` of a dataset seeded with `seed`; uses seed ^ index.
GeneratedScene generate_scene(std::size_t index, std::uint64_t seed, const SynthConfig& config,
                              const GlyphSet& glyphs);

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string annotations;          ///< relative to the output directory
  std::vector<std::string> images;  ///< PGM files
  std::vector<std::string> labels;  ///< YOLO txt files
};

/// Writes images/<id>.pgm, labels/<id>.txt, annotations.json and
/// manifest.json under `out_dir`.
Manifest generate_dataset(std::size_t n, std::uint64_t seed, const SynthConfig& config,
                          const GlyphSet& glyphs, const std::filesystem::path& out_dir,
                          unsigned workers = 0);

}  // namespace vmer
