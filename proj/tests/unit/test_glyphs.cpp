#include <doctest.h>

#include <sstream>
#include <string>

#include "vmer/errors.hpp"
#include "vmer/glyphs.hpp"

using namespace vmer;

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  s += static_cast<char>((v >> 24) & 0xff);
  s += static_cast<char>((v >> 16) & 0xff);
  s += static_cast<char>((v >> 8) & 0xff);
  s += static_cast<char>(v & 0xff);
}

// Image i is a flat field of intensity 20 * i; label i % 10.
std::pair<std::string, std::string> idx_pair(std::uint32_t count, std::uint32_t rows = 28, std::uint32_t cols = 28) {
  std::string images, labels;
  put_u32(images, 0x00000803);
  put_u32(images, count);
  put_u32(images, rows);
  put_u32(images, cols);
  images.reserve(images.size() + std::size_t{count} * rows * cols);
  for (std::uint32_t i = 0; i < count; ++i) images.append(std::size_t{rows} * cols, static_cast<char>((20 * i) & 0xff));
  put_u32(labels, 0x00000801);
  put_u32(labels, count);
  for (std::uint32_t i = 0; i < count; ++i) labels += static_cast<char>(i % 10);
  return {images, labels};
}

GlyphSet load(const std::string& images, const std::string& labels) {
  std::istringstream im(images), lb(labels);
  return load_glyphs(im, lb);
}

}  // namespace

TEST_CASE("hand-built 10-image IDX fixture") {
  // The first header spelled out byte by byte.
  const std::string header("\x00\x00\x08\x03\x00\x00\x00\x0a\x00\x00\x00\x1c\x00\x00\x00\x1c", 16);
  auto [images, labels] = idx_pair(10);
  REQUIRE(images.substr(0, 16) == header);
  REQUIRE(labels.substr(0, 8) == std::string("\x00\x00\x08\x01\x00\x00\x00\x0a", 8));

  const GlyphSet g = load(images, labels);
  CHECK(g.size() == 10);
  for (int d = 0; d < 10; ++d) {
    REQUIRE(g.by_digit[d].size() == 1);
    CHECK(g.by_digit[d][0][0] == 20 * d);
    CHECK(g.by_digit[d][0][783] == 20 * d);
  }
}

TEST_CASE("60,000-glyph file") {
  auto [images, labels] = idx_pair(60000);
  const GlyphSet g = load(images, labels);
  CHECK(g.size() == 60000);
  for (int d = 0; d < 10; ++d) CHECK(g.by_digit[d].size() == 6000);
}

TEST_CASE("format errors") {
  auto [images, labels] = idx_pair(10);
  SUBCASE("wrong image magic") {
    std::string bad = images;
    bad[3] = 0x01;
    CHECK_THROWS_AS(load(bad, labels), FormatError);
  }
  SUBCASE("wrong label magic") {
    std::string bad = labels;
    bad[3] = 0x03;
    CHECK_THROWS_AS(load(images, bad), FormatError);
  }
  SUBCASE("truncated images") { CHECK_THROWS_AS(load(images.substr(0, images.size() - 1), labels), FormatError); }
  SUBCASE("truncated labels") { CHECK_THROWS_AS(load(images, labels.substr(0, labels.size() - 1)), FormatError); }
  SUBCASE("label out of range") {
    std::string bad = labels;
    bad.back() = 10;
    CHECK_THROWS_AS(load(images, bad), FormatError);
  }
  SUBCASE("count mismatch") {
    auto [more, more_labels] = idx_pair(11);
    CHECK_THROWS_AS(load(more, labels), FormatError);
  }
  SUBCASE("not 28x28") {
    auto [small, small_labels] = idx_pair(10, 20, 20);
    CHECK_THROWS_AS(load(small, small_labels), FormatError);
  }
  SUBCASE("a digit without glyphs") {
    auto [nine, nine_labels] = idx_pair(9);
    CHECK_THROWS_AS(load(nine, nine_labels), FormatError);
  }
}

TEST_CASE("writer output is readable and byte-stable") {
  const GlyphSet g = builtin_glyphs(3, 9);
  CHECK(g.size() == 30);
  std::vector<Glyph> flat;
  std::vector<std::uint8_t> labels;
  for (int k = 0; k < 3; ++k) {
    for (int d = 0; d < 10; ++d) {
      flat.push_back(g.by_digit[d][k]);
      labels.push_back(static_cast<std::uint8_t>(d));
    }
  }
  std::ostringstream im, lb;
  write_idx_images(im, flat);
  write_idx_labels(lb, labels);
  const GlyphSet back = load(im.str(), lb.str());
  for (int d = 0; d < 10; ++d) CHECK(back.by_digit[d] == g.by_digit[d]);
}

TEST_CASE("builtin glyphs are deterministic and inked") {
  const GlyphSet a = builtin_glyphs(4, 1), b = builtin_glyphs(4, 1), c = builtin_glyphs(4, 2);
  bool differs = false;
  for (int d = 0; d < 10; ++d) {
    CHECK(a.by_digit[d] == b.by_digit[d]);
    differs |= a.by_digit[d] != c.by_digit[d];
    for (const auto& glyph : a.by_digit[d]) {
      int ink = 0;
      for (auto v : glyph) ink += v > 128;
      CHECK(ink > 20);
      CHECK(ink < 500);
    }
  }
  CHECK(differs);
}
