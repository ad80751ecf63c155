#pragma once

// Handwritten digit glyphs: IDX (MNIST) reading/writing and a procedural
// fallback set for environments without MNIST.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vmer {

inline constexpr int kGlyphSize = 28;

/// Row-major 8-bit intensities; 0 is background, 255 is ink.
using Glyph = std::array<std::uint8_t, kGlyphSize * kGlyphSize>;

struct GlyphSet {
  std::array<std::vector<Glyph>, 10> by_digit;

  std::size_t size() const;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image file and its label file. Throws FormatError on a bad
/// magic number, truncated payload, size mismatch, label outside 0-9, images
/// that are not 28x28, or a digit with no glyphs.
GlyphSet load_glyphs(std::istream& images, std::istream& labels);
GlyphSet load_glyphs_files(const std::string& images_path, const std::string& labels_path);

void write_idx_images(std::ostream& out, const std::vector<Glyph>& images);
void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels);

/// Writes `glyphs` as an IDX pair, digits interleaved 0,1,...,9,0,1,...
void write_glyph_files(const GlyphSet& glyphs, const std::string& images_path,
                       const std::string& labels_path);

/// Stroke-drawn digits with per-glyph shape noise. Deterministic in `seed`.
GlyphSet builtin_glyphs(std::size_t per_digit, std::uint64_t seed);

}  // namespace vmer
