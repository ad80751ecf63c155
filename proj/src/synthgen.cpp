#include "vmer/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vmer/config.hpp"
#include "vmer/errors.hpp"
#include "vmer/interchange.hpp"
#include "vmer/latex.hpp"
#include "vmer/parallel.hpp"
#include "vmer/transcriber.hpp"

namespace vmer {

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<int> sample_number(Rng& rng, int length) {
  std::vector<int> digits(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) digits[i] = uniform_int(rng, (i == 0 && length > 1) ? 1 : 0, 9);
  return digits;
}

bool less_than(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::vector<DigitSlot> plain_slots(const std::vector<int>& digits) {
  std::vector<DigitSlot> slots;
  for (int d : digits) slots.push_back({d, false});
  return slots;
}

// Stroke thickness for '+', '-' and '='.
constexpr double kStrokeFraction = 0.12;
constexpr double kMinStroke = 2.0;

double overlap_1d(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

double rect_coverage(double px, double py, const BBox& r) {
  return overlap_1d(px, px + 1, r.x1, r.x2) * overlap_1d(py, py + 1, r.y1, r.y2);
}

void draw_stroke_symbol(std::vector<double>& transmit, int width, int height, const Placement& p) {
  const BBox& b = p.box;
  const double t = std::min(b.height(), std::max(kMinStroke, kStrokeFraction * b.height()));
  const BBox horizontal{b.x1, b.center_y() - t / 2, b.x2, b.center_y() + t / 2};
  const bool plus = p.cls == SymbolClass::kPlus;
  const double tv = std::min(b.width(), t);
  const BBox vertical{b.center_x() - tv / 2, b.y1, b.center_x() + tv / 2, b.y2};

  const int x0 = std::max(0, static_cast<int>(std::floor(b.x1)));
  const int x1 = std::min(width, static_cast<int>(std::ceil(b.x2)));
  const int y0 = std::max(0, static_cast<int>(std::floor(b.y1)));
  const int y1 = std::min(height, static_cast<int>(std::ceil(b.y2)));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      double cover = rect_coverage(x, y, horizontal);
      if (plus) {
        const BBox both{vertical.x1, horizontal.y1, vertical.x2, horizontal.y2};
        cover += rect_coverage(x, y, vertical) - rect_coverage(x, y, both);
      }
      transmit[static_cast<std::size_t>(y) * width + x] *= 1.0 - std::clamp(cover, 0.0, 1.0);
    }
  }
}

double glyph_sample(const Glyph& g, double u, double v) {
  u = std::clamp(u, 0.0, kGlyphSize - 1.0);
  v = std::clamp(v, 0.0, kGlyphSize - 1.0);
  const int u0 = static_cast<int>(u), v0 = static_cast<int>(v);
  const int u1 = std::min(u0 + 1, kGlyphSize - 1), v1 = std::min(v0 + 1, kGlyphSize - 1);
  const double fu = u - u0, fv = v - v0;
  auto px = [&](int x, int y) { return g[y * kGlyphSize + x] / 255.0; };
  return (1 - fv) * ((1 - fu) * px(u0, v0) + fu * px(u1, v0)) + fv * ((1 - fu) * px(u0, v1) + fu * px(u1, v1));
}

void draw_glyph(std::vector<double>& transmit, int width, int height, const BBox& b, const Glyph& g) {
  const int x0 = std::max(0, static_cast<int>(std::ceil(b.x1 - 0.5)));
  const int x1 = std::min(width, static_cast<int>(std::ceil(b.x2 - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(b.y1 - 0.5)));
  const int y1 = std::min(height, static_cast<int>(std::ceil(b.y2 - 0.5)));
  for (int y = y0; y < y1; ++y) {
    const double v = (y + 0.5 - b.y1) / b.height() * kGlyphSize - 0.5;
    for (int x = x0; x < x1; ++x) {
      const double u = (x + 0.5 - b.x1) / b.width() * kGlyphSize - 0.5;
      transmit[static_cast<std::size_t>(y) * width + x] *= 1.0 - glyph_sample(g, u, v);
    }
  }
}

}  // namespace

void validate(const ExpressionConfig& config) {
  if (config.min_digits < 1 || config.min_digits > config.max_digits || config.max_digits > 6) {
    throw InvalidArgument("expression config: need 1 <= min_digits <= max_digits <= 6");
  }
  if (!config.allow_plus && !config.allow_minus) throw InvalidArgument("expression config: no operator allowed");
}

Expression column_arithmetic(const std::vector<int>& a_in, Operator op, const std::vector<int>& b_in) {
  std::vector<int> a = a_in, b = b_in;
  if (op == Operator::kMinus && less_than(a, b)) std::swap(a, b);

  Expression e;
  e.op = op;
  e.operand_a = plain_slots(a);
  e.operand_b = plain_slots(b);

  // Column k counts from the right; digit_at(x, k) is 0 past the left end.
  auto digit_at = [](const std::vector<int>& x, std::size_t k) { return k < x.size() ? x[x.size() - 1 - k] : 0; };
  auto flag = [](std::vector<DigitSlot>& term, std::size_t k) { term[term.size() - 1 - k].has_carry = true; };
  const std::size_t columns = std::max(a.size(), b.size());

  std::vector<int> reversed;
  int carry = 0;
  for (std::size_t k = 0; k < columns; ++k) {
    if (carry != 0) {
      if (op == Operator::kPlus) {
        if (k < a.size()) {
          flag(e.operand_a, k);
        } else if (k < b.size()) {
          flag(e.operand_b, k);
        }
      }
    }
    int v;
    if (op == Operator::kPlus) {
      v = digit_at(a, k) + digit_at(b, k) + carry;
      carry = v / 10;
      v %= 10;
    } else {
      v = digit_at(a, k) - digit_at(b, k) - carry;
      carry = 0;
      if (v < 0) {
        v += 10;
        carry = 1;
        flag(e.operand_a, k);
      }
    }
    reversed.push_back(v);
  }
  if (carry != 0) reversed.push_back(carry);
  while (reversed.size() > 1 && reversed.back() == 0) reversed.pop_back();
  e.result.assign(reversed.rbegin(), reversed.rend());
  return e;
}

Expression sample_expression(Rng& rng, const ExpressionConfig& config) {
  validate(config);
  const int la = uniform_int(rng, config.min_digits, config.max_digits);
  const int lb = uniform_int(rng, config.min_digits, config.max_digits);
  Operator op = config.allow_plus ? Operator::kPlus : Operator::kMinus;
  if (config.allow_plus && config.allow_minus) op = uniform_int(rng, 0, 1) == 0 ? Operator::kPlus : Operator::kMinus;

  const std::vector<int> a = sample_number(rng, la);
  const std::vector<int> b = sample_number(rng, lb);
  if (config.mode == ArithmeticMode::kConsistent) return column_arithmetic(a, op, b);

  Expression e;
  e.op = op;
  e.operand_a = plain_slots(a);
  e.operand_b = plain_slots(b);
  for (auto& slot : e.operand_a) slot.has_carry = uniform_int(rng, 0, 1) == 1;
  const int widest = std::max(la, lb);
  e.result = sample_number(rng, uniform_int(rng, std::max(1, widest - 1), widest + 1));
  return e;
}

SceneSpec layout(const Expression& e, Rng& rng, int width, int height, const LayoutConfig& config) {
  validate(e);
  const double cell = config.cell;
  const double glyph = config.glyph_scale * cell;
  const double carry = config.carry_scale * glyph;
  const double carry_gap = config.carry_gap * cell;
  const double gap = config.row_gap * cell;
  const double equals_h = config.equals_height * glyph;
  const double jitter = config.jitter * cell;

  const std::size_t operand_cols = std::max(e.operand_a.size(), e.operand_b.size());
  const std::size_t columns = std::max(operand_cols + 1, e.result.size());
  const double grid_w = static_cast<double>(columns) * cell;
  const double band = carry + carry_gap + glyph;  // carry band plus digit row
  const double grid_h = 2 * band + 3 * gap + equals_h + glyph;
  const double margin = jitter + 1.0;
  const double slack_x = width - grid_w - 2 * margin;
  const double slack_y = height - grid_h - 2 * margin;
  if (slack_x < 0 || slack_y < 0) {
    throw InvalidArgument("layout: expression '" + emit_latex(e) + "' does not fit a " + std::to_string(width) +
                          "x" + std::to_string(height) + " canvas");
  }
  const double ox = margin + uniform_real(rng, 0.0, slack_x);
  const double oy = margin + uniform_real(rng, 0.0, slack_y);

  const double row_a_top = oy + carry + carry_gap;
  const double row_b_top = row_a_top + glyph + gap + carry + carry_gap;
  const double equals_top = row_b_top + glyph + gap;
  const double result_top = equals_top + equals_h + gap;

  auto column_center = [&](std::size_t k_from_right) {
    return ox + grid_w - (static_cast<double>(k_from_right) + 0.5) * cell;
  };
  auto jittered = [&](BBox b) {
    const double dx = uniform_real(rng, -jitter, jitter);
    const double dy = uniform_real(rng, -jitter, jitter);
    return BBox{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
  };
  auto square = [](double cx, double top, double side) {
    return BBox{cx - side / 2, top, cx + side / 2, top + side};
  };

  SceneSpec spec;
  spec.expression = e;
  spec.width = width;
  spec.height = height;
  auto place_term = [&](const std::vector<DigitSlot>& term, double top) {
    for (std::size_t i = 0; i < term.size(); ++i) {
      const double cx = column_center(term.size() - 1 - i);
      if (term[i].has_carry) {
        spec.placements.push_back({SymbolClass::kCarry, jittered(square(cx, top - carry_gap - carry, carry))});
      }
      spec.placements.push_back({digit_class(term[i].digit), jittered(square(cx, top, glyph))});
    }
  };

  place_term(e.operand_a, row_a_top);
  const double op_cx = column_center(operand_cols);
  if (e.op == Operator::kPlus) {
    spec.placements.push_back({SymbolClass::kPlus, jittered(square(op_cx, row_b_top, glyph))});
  } else {
    const double h = 0.5 * glyph;
    spec.placements.push_back(
        {SymbolClass::kMinus,
         jittered({op_cx - glyph / 2, row_b_top + (glyph - h) / 2, op_cx + glyph / 2, row_b_top + (glyph + h) / 2})});
  }
  place_term(e.operand_b, row_b_top);
  const double inset = 0.1 * cell;
  spec.placements.push_back(
      {SymbolClass::kEquals, jittered({ox + inset, equals_top, ox + grid_w - inset, equals_top + equals_h})});
  for (std::size_t i = 0; i < e.result.size(); ++i) {
    const double cx = column_center(e.result.size() - 1 - i);
    spec.placements.push_back({digit_class(e.result[i]), jittered(square(cx, result_top, glyph))});
  }

  const Transcription check = transcribe(ground_truth(spec, "layout-self-check"));
  if (!(check.expression == e) || !check.warnings.empty()) {
    throw Error("layout self-check failed for '" + emit_latex(e) + "': transcribed '" +
                emit_latex(check.expression) + "'");
  }
  return spec;
}

void assign_glyphs(SceneSpec& spec, const GlyphSet& glyphs, Rng& rng) {
  for (auto& p : spec.placements) {
    if (p.cls == SymbolClass::kCarry || is_digit(p.cls)) {
      const int digit = p.cls == SymbolClass::kCarry ? 1 : digit_value(p.cls);
      const auto& pool = glyphs.by_digit[digit];
      if (pool.empty()) throw InvalidArgument("assign_glyphs: no glyphs for digit " + std::to_string(digit));
      p.glyph_index = uniform_int(rng, 0, static_cast<int>(pool.size()) - 1);
    }
  }
}

DetectionSet ground_truth(const SceneSpec& spec, const std::string& image_id) {
  DetectionSet set{image_id, spec.width, spec.height, {}};
  for (const auto& p : spec.placements) set.detections.push_back({p.cls, p.box, 1.0});
  return set;
}

GrayImage rasterize(const SceneSpec& spec, const GlyphSet& glyphs) {
  std::vector<double> transmit(static_cast<std::size_t>(spec.width) * spec.height, 1.0);
  for (const auto& p : spec.placements) {
    if (p.cls == SymbolClass::kCarry || is_digit(p.cls)) {
      const int digit = p.cls == SymbolClass::kCarry ? 1 : digit_value(p.cls);
      const auto& pool = glyphs.by_digit[digit];
      if (p.glyph_index < 0 || static_cast<std::size_t>(p.glyph_index) >= pool.size()) {
        throw InvalidArgument("rasterize: glyph index out of range for digit " + std::to_string(digit));
      }
      draw_glyph(transmit, spec.width, spec.height, p.box, pool[p.glyph_index]);
    } else {
      draw_stroke_symbol(transmit, spec.width, spec.height, p);
    }
  }
  GrayImage img{spec.width, spec.height, std::vector<std::uint8_t>(transmit.size())};
  for (std::size_t i = 0; i < transmit.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(transmit[i], 0.0, 1.0)));
  }
  return img;
}

void write_pgm(const GrayImage& image, std::ostream& out) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error("failed writing PGM");
}

GrayImage read_pgm(std::istream& in) {
  std::string magic;
  int maxval = 0;
  GrayImage img;
  if (!(in >> magic) || magic != "P5") throw FormatError("PGM: expected P5");
  if (!(in >> img.width >> img.height >> maxval) || img.width <= 0 || img.height <= 0 || maxval != 255) {
    throw FormatError("PGM: bad header");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw FormatError("PGM: truncated payload");
  }
  return img;
}

std::string yolo_labels(const SceneSpec& spec) {
  std::string out;
  char line[96];
  for (const auto& p : spec.placements) {
    std::snprintf(line, sizeof line, "%d %.6f %.6f %.6f %.6f\n", class_code(p.cls), p.box.center_x() / spec.width,
                  p.box.center_y() / spec.height, p.box.width() / spec.width, p.box.height() / spec.height);
    out += line;
  }
  return out;
}

std::string image_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%06zu", index);
  return buf;
}

GeneratedScene generate_scene(std::size_t index, std::uint64_t seed, const SynthConfig& config,
                              const GlyphSet& glyphs) {
  const std::uint64_t scene_seed = seed ^ static_cast<std::uint64_t>(index);
  Rng rng(scene_seed);
  GeneratedScene scene;
  const Expression e = sample_expression(rng, config.expression);
  scene.spec = layout(e, rng, config.width, config.height, config.layout);
  scene.spec.rng_seed = scene_seed;
  assign_glyphs(scene.spec, glyphs, rng);
  scene.image = rasterize(scene.spec, glyphs);
  const std::string id = image_id_for(index);
  scene.annotation = {id, ground_truth(scene.spec, id), emit_latex(e)};
  return scene;
}

Manifest generate_dataset(std::size_t n, std::uint64_t seed, const SynthConfig& config, const GlyphSet& glyphs,
                          const std::filesystem::path& out_dir, unsigned workers) {
  if (n == 0) throw InvalidArgument("generate_dataset: n must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "labels", ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.seed = seed;
  manifest.count = n;
  manifest.annotations = "annotations.json";
  manifest.images.resize(n);
  manifest.labels.resize(n);
  std::vector<Annotation> annotations(n);

  parallel_for(n, workers, [&](std::size_t i) {
    GeneratedScene scene = generate_scene(i, seed, config, glyphs);
    const std::string id = scene.annotation.image_id;
    manifest.images[i] = "images/" + id + ".pgm";
    manifest.labels[i] = "labels/" + id + ".txt";
    std::ofstream img(out_dir / manifest.images[i], std::ios::binary);
    if (!img) throw Error("cannot write " + (out_dir / manifest.images[i]).string());
    write_pgm(scene.image, img);
    std::ofstream lab(out_dir / manifest.labels[i], std::ios::binary);
    lab << yolo_labels(scene.spec);
    if (!lab) throw Error("cannot write " + (out_dir / manifest.labels[i]).string());
    annotations[i] = std::move(scene.annotation);
  });

  write_annotations_file(annotations, (out_dir / manifest.annotations).string());

  nlohmann::ordered_json doc;
  doc["seed"] = seed;
  doc["count"] = n;
  doc["config"] = to_json(config);
  doc["strokes"] = {
      {"plus", "horizontal and vertical bars through the box center"},
      {"minus", "horizontal bar through the box center"},
      {"equals", "horizontal bar through the box center"},
      {"thickness", "max(2px, 0.12 * box height)"},
  };
  doc["annotations"] = manifest.annotations;
  doc["images"] = manifest.images;
  doc["labels"] = manifest.labels;
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  out << doc.dump(1) << '\n';
  if (!out) throw Error("cannot write manifest");
  return manifest;
}

}  // namespace vmer
