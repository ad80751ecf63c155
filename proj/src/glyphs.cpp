#include "vmer/glyphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError(std::string(what) + ": truncated header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

struct Point {
  double x, y;
};
using Stroke = std::vector<Point>;

// Unit-square stroke skeletons, y down.
const std::array<std::vector<Stroke>, 10>& skeletons() {
  static const std::array<std::vector<Stroke>, 10> kSkeletons = [] {
    std::array<std::vector<Stroke>, 10> s;
    Stroke zero;
    for (int i = 0; i <= 16; ++i) {
      const double t = 2.0 * M_PI * i / 16.0;
      zero.push_back({0.5 + 0.36 * std::sin(t), 0.5 - 0.5 * std::cos(t)});
    }
    s[0] = {zero};
    s[1] = {{{0.3, 0.2}, {0.55, 0.0}, {0.55, 1.0}}};
    s[2] = {{{0.15, 0.25}, {0.3, 0.05}, {0.7, 0.05}, {0.85, 0.25}, {0.8, 0.45}, {0.15, 1.0}, {0.9, 1.0}}};
    s[3] = {{{0.15, 0.1}, {0.8, 0.05}, {0.45, 0.45}, {0.85, 0.65}, {0.65, 0.98}, {0.15, 0.9}}};
    s[4] = {{{0.7, 1.0}, {0.7, 0.0}, {0.1, 0.7}, {0.95, 0.7}}};
    s[5] = {{{0.85, 0.0}, {0.25, 0.0}, {0.2, 0.45}, {0.6, 0.4}, {0.85, 0.65}, {0.6, 1.0}, {0.15, 0.9}}};
    s[6] = {{{0.75, 0.05}, {0.3, 0.35}, {0.15, 0.75}, {0.4, 1.0}, {0.8, 0.85}, {0.75, 0.55}, {0.3, 0.55},
             {0.2, 0.7}}};
    s[7] = {{{0.1, 0.0}, {0.9, 0.0}, {0.4, 1.0}}};
    s[8] = {{{0.5, 0.5}, {0.2, 0.3}, {0.35, 0.02}, {0.7, 0.05}, {0.75, 0.3}, {0.5, 0.5}, {0.15, 0.75},
             {0.4, 1.0}, {0.8, 0.9}, {0.8, 0.65}, {0.5, 0.5}}};
    s[9] = {{{0.8, 0.3}, {0.5, 0.05}, {0.2, 0.25}, {0.35, 0.5}, {0.8, 0.35}, {0.75, 1.0}}};
    return s;
  }();
  return kSkeletons;
}

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

Glyph draw_digit(int digit, std::mt19937_64& rng) {
  std::normal_distribution<double> wobble(0.0, 0.035);
  std::uniform_real_distribution<double> slant(-0.2, 0.2);
  std::uniform_real_distribution<double> scale(0.85, 1.0);
  std::uniform_real_distribution<double> thickness(1.6, 2.6);

  const double shear = slant(rng);
  const double sx = scale(rng), sy = scale(rng);
  const double half_width = 0.5 * thickness(rng);

  // Skeleton mapped into the central 20x20 box, like MNIST.
  std::vector<Stroke> strokes;
  for (const Stroke& stroke : skeletons()[digit]) {
    Stroke out;
    for (Point p : stroke) {
      const double u = 0.5 + sx * (p.x - 0.5) + wobble(rng) + shear * (0.5 - p.y);
      const double v = 0.5 + sy * (p.y - 0.5) + wobble(rng);
      out.push_back({4.0 + 20.0 * u, 4.0 + 20.0 * v});
    }
    strokes.push_back(std::move(out));
  }

  Glyph g{};
  for (int y = 0; y < kGlyphSize; ++y) {
    for (int x = 0; x < kGlyphSize; ++x) {
      const Point p{x + 0.5, y + 0.5};
      double d = 1e9;
      for (const Stroke& s : strokes) {
        for (std::size_t i = 1; i < s.size(); ++i) d = std::min(d, segment_distance(p, s[i - 1], s[i]));
      }
      const double ink = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
      g[y * kGlyphSize + x] = static_cast<std::uint8_t>(std::lround(255.0 * ink));
    }
  }
  return g;
}

}  // namespace

std::size_t GlyphSet::size() const {
  std::size_t n = 0;
  for (const auto& v : by_digit) n += v.size();
  return n;
}

GlyphSet load_glyphs(std::istream& images, std::istream& labels) {
  if (read_be32(images, "images") != kIdxImagesMagic) throw FormatError("images: bad magic number");
  const std::uint32_t count = read_be32(images, "images");
  const std::uint32_t rows = read_be32(images, "images");
  const std::uint32_t cols = read_be32(images, "images");
  if (rows != kGlyphSize || cols != kGlyphSize) {
    throw FormatError("images: expected 28x28 glyphs, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (read_be32(labels, "labels") != kIdxLabelsMagic) throw FormatError("labels: bad magic number");
  const std::uint32_t label_count = read_be32(labels, "labels");
  if (label_count != count) {
    throw FormatError("label count " + std::to_string(label_count) + " does not match image count " +
                      std::to_string(count));
  }

  GlyphSet set;
  Glyph glyph;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!images.read(reinterpret_cast<char*>(glyph.data()), glyph.size())) {
      throw FormatError("images: truncated payload at image " + std::to_string(i));
    }
    char label;
    if (!labels.get(label)) throw FormatError("labels: truncated payload at label " + std::to_string(i));
    const auto digit = static_cast<unsigned char>(label);
    if (digit > 9) throw FormatError("labels: label " + std::to_string(digit) + " outside 0-9");
    set.by_digit[digit].push_back(glyph);
  }
  for (int d = 0; d < 10; ++d) {
    if (set.by_digit[d].empty()) throw FormatError("no glyphs for digit " + std::to_string(d));
  }
  return set;
}

GlyphSet load_glyphs_files(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw Error("cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw Error("cannot open " + labels_path);
  return load_glyphs(images, labels);
}

void write_idx_images(std::ostream& out, const std::vector<Glyph>& images) {
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, kGlyphSize);
  write_be32(out, kGlyphSize);
  for (const auto& g : images) out.write(reinterpret_cast<const char*>(g.data()), g.size());
}

void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels) {
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

void write_glyph_files(const GlyphSet& glyphs, const std::string& images_path,
                       const std::string& labels_path) {
  std::vector<Glyph> images;
  std::vector<std::uint8_t> labels;
  std::size_t longest = 0;
  for (const auto& v : glyphs.by_digit) longest = std::max(longest, v.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (int d = 0; d < 10; ++d) {
      if (i < glyphs.by_digit[d].size()) {
        images.push_back(glyphs.by_digit[d][i]);
        labels.push_back(static_cast<std::uint8_t>(d));
      }
    }
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error("cannot write glyph files " + images_path + ", " + labels_path);
  write_idx_images(img, images);
  write_idx_labels(lab, labels);
  if (!img.flush() || !lab.flush()) throw Error("failed writing glyph files");
}

GlyphSet builtin_glyphs(std::size_t per_digit, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GlyphSet set;
  for (std::size_t i = 0; i < per_digit; ++i) {
    for (int d = 0; d < 10; ++d) set.by_digit[d].push_back(draw_digit(d, rng));
  }
  return set;
}

}  // namespace vmer
