#include "vmer/config.hpp"

#include <set>
#include <string>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void check_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SchemaError(std::string(what) + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items()) {
    if (!keys.count(k)) throw SchemaError(std::string(what) + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* what, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string(what) + ": wrong type for '" + key + "'");
  }
}

template <typename F>
auto revalidate(const char* what, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

ordered_json to_json(const ExpressionConfig& c) {
  ordered_json j;
  j["min_digits"] = c.min_digits;
  j["max_digits"] = c.max_digits;
  ordered_json ops = ordered_json::array();
  if (c.allow_plus) ops.push_back("+");
  if (c.allow_minus) ops.push_back("-");
  j["ops"] = ops;
  j["mode"] = c.mode == ArithmeticMode::kRandom ? "random" : "consistent";
  return j;
}

ordered_json to_json(const LayoutConfig& c) {
  ordered_json j;
  j["cell"] = c.cell;
  j["glyph_scale"] = c.glyph_scale;
  j["carry_scale"] = c.carry_scale;
  j["carry_gap"] = c.carry_gap;
  j["row_gap"] = c.row_gap;
  j["equals_height"] = c.equals_height;
  j["jitter"] = c.jitter;
  return j;
}

ordered_json to_json(const SynthConfig& c) {
  ordered_json j;
  j["expression"] = to_json(c.expression);
  j["layout"] = to_json(c.layout);
  j["canvas"] = {c.width, c.height};
  return j;
}

ordered_json to_json(const NoiseProfile& p) {
  ordered_json j;
  j["box_jitter_sigma"] = p.box_jitter_sigma;
  j["label_flip_prob"] = p.label_flip_prob;
  j["drop_prob"] = p.drop_prob;
  j["duplicate_prob"] = p.duplicate_prob;
  j["exact_flips"] = p.exact_flips;
  j["flip_mode"] = p.flip_mode == FlipMode::kUniform ? "uniform" : "single_token";
  j["confidence"] = {{"correct_mean", p.confidence.correct_mean},
                     {"correct_sd", p.confidence.correct_sd},
                     {"corrupted_mean", p.confidence.corrupted_mean},
                     {"corrupted_sd", p.confidence.corrupted_sd}};
  return j;
}

ordered_json to_json(const PostprocessParams& p) {
  ordered_json j;
  j["theta"] = p.theta;
  j["alpha"] = p.alpha;
  return j;
}

ExpressionConfig expression_config_from_json(const json& j, ExpressionConfig c) {
  constexpr const char* what = "expression config";
  check_keys(j, what, {"min_digits", "max_digits", "ops", "mode"});
  read_field(j, what, "min_digits", c.min_digits);
  read_field(j, what, "max_digits", c.max_digits);
  if (j.contains("ops")) {
    std::vector<std::string> ops;
    read_field(j, what, "ops", ops);
    c.allow_plus = c.allow_minus = false;
    for (const auto& op : ops) {
      if (op == "+") {
        c.allow_plus = true;
      } else if (op == "-") {
        c.allow_minus = true;
      } else {
        throw SchemaError(std::string(what) + ": unknown operator '" + op + "'");
      }
    }
  }
  if (j.contains("mode")) {
    std::string mode;
    read_field(j, what, "mode", mode);
    if (mode == "random") {
      c.mode = ArithmeticMode::kRandom;
    } else if (mode == "consistent") {
      c.mode = ArithmeticMode::kConsistent;
    } else {
      throw SchemaError(std::string(what) + ": mode must be 'random' or 'consistent'");
    }
  }
  revalidate(what, [&] { validate(c); return 0; });
  return c;
}

LayoutConfig layout_config_from_json(const json& j, LayoutConfig c) {
  constexpr const char* what = "layout config";
  check_keys(j, what, {"cell", "glyph_scale", "carry_scale", "carry_gap", "row_gap", "equals_height", "jitter"});
  read_field(j, what, "cell", c.cell);
  read_field(j, what, "glyph_scale", c.glyph_scale);
  read_field(j, what, "carry_scale", c.carry_scale);
  read_field(j, what, "carry_gap", c.carry_gap);
  read_field(j, what, "row_gap", c.row_gap);
  read_field(j, what, "equals_height", c.equals_height);
  read_field(j, what, "jitter", c.jitter);
  if (!(c.cell > 0 && c.glyph_scale > 0 && c.carry_scale > 0 && c.equals_height > 0 && c.jitter >= 0 &&
        c.carry_gap >= 0 && c.row_gap >= 0)) {
    throw SchemaError(std::string(what) + ": sizes must be positive");
  }
  return c;
}

SynthConfig synth_config_from_json(const json& j, SynthConfig c) {
  constexpr const char* what = "synth config";
  check_keys(j, what, {"expression", "layout", "canvas"});
  if (j.contains("expression")) c.expression = expression_config_from_json(j["expression"], c.expression);
  if (j.contains("layout")) c.layout = layout_config_from_json(j["layout"], c.layout);
  if (j.contains("canvas")) {
    std::vector<int> canvas;
    read_field(j, what, "canvas", canvas);
    if (canvas.size() != 2 || canvas[0] <= 0 || canvas[1] <= 0) {
      throw SchemaError(std::string(what) + ": canvas must be [width, height]");
    }
    c.width = canvas[0];
    c.height = canvas[1];
  }
  return c;
}

NoiseProfile noise_profile_from_json(const json& j, NoiseProfile p) {
  constexpr const char* what = "noise profile";
  check_keys(j, what,
             {"box_jitter_sigma", "label_flip_prob", "drop_prob", "duplicate_prob", "exact_flips", "flip_mode",
              "confidence"});
  read_field(j, what, "box_jitter_sigma", p.box_jitter_sigma);
  read_field(j, what, "label_flip_prob", p.label_flip_prob);
  read_field(j, what, "drop_prob", p.drop_prob);
  read_field(j, what, "duplicate_prob", p.duplicate_prob);
  read_field(j, what, "exact_flips", p.exact_flips);
  if (j.contains("flip_mode")) {
    std::string mode;
    read_field(j, what, "flip_mode", mode);
    if (mode == "uniform") {
      p.flip_mode = FlipMode::kUniform;
    } else if (mode == "single_token") {
      p.flip_mode = FlipMode::kSingleToken;
    } else {
      throw SchemaError(std::string(what) + ": flip_mode must be 'uniform' or 'single_token'");
    }
  }
  if (j.contains("confidence")) {
    const json& cj = j["confidence"];
    check_keys(cj, "confidence model", {"correct_mean", "correct_sd", "corrupted_mean", "corrupted_sd"});
    read_field(cj, what, "correct_mean", p.confidence.correct_mean);
    read_field(cj, what, "correct_sd", p.confidence.correct_sd);
    read_field(cj, what, "corrupted_mean", p.confidence.corrupted_mean);
    read_field(cj, what, "corrupted_sd", p.confidence.corrupted_sd);
  }
  revalidate(what, [&] { validate(p); return 0; });
  return p;
}

}  // namespace vmer
