#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "support/fixtures.hpp"
#include "vmer/interchange.hpp"

using namespace vmer;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run vmer_cli(const testing::TempDir& dir, const std::string& args) {
  const std::string out = dir.str("stdout.txt"), err = dir.str("stderr.txt");
  const std::string cmd = std::string(VMER_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing::read_file(out);
  r.err = testing::read_file(err);
  return r;
}

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST_CASE("generate writes the requested count and is reproducible") {
  testing::TempDir dir("cli_gen");
  const Run a = vmer_cli(dir, "generate --n 100 --seed 7 --builtin-glyphs 8 --out " + dir.str("a"));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(a.out.find("manifest.json") != std::string::npos);
  CHECK(read_annotations_file(dir.str("a/annotations.json")).size() == 100);
  std::size_t images = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path() / "a" / "images")) images += e.is_regular_file();
  CHECK(images == 100);

  REQUIRE(vmer_cli(dir, "--workers 3 generate --n 100 --seed 7 --builtin-glyphs 8 --out " + dir.str("b")).code == 0);
  for (const char* f : {"annotations.json", "manifest.json", "images/img_000042.pgm", "labels/img_000099.txt"}) {
    CHECK_MESSAGE(testing::read_file(dir.path() / "a" / f) == testing::read_file(dir.path() / "b" / f), f);
  }
}

TEST_CASE("missing glyph file exits 2 naming the path") {
  testing::TempDir dir("cli_missing");
  const Run r = vmer_cli(dir, "generate --n 3 --out " + dir.str("d") + " --images /no/such/images.idx --labels /no/such/labels.idx");
  CHECK(r.code == 2);
  CHECK(r.err.find("/no/such/images.idx") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  testing::TempDir dir("cli_usage");
  CHECK(vmer_cli(dir, "").code == 2);
  CHECK(vmer_cli(dir, "frobnicate").code == 2);
  CHECK(vmer_cli(dir, "transcribe --in").code == 2);
  CHECK(vmer_cli(dir, "transcribe --in /no/such.json --out x.json").code == 2);
}

TEST_CASE("generate, transcribe and evaluate round trip") {
  testing::TempDir dir("cli_round");
  REQUIRE(vmer_cli(dir, "generate --n 20 --seed 3 --builtin-glyphs 8 --out " + dir.str("d")).code == 0);
  const std::string ann = dir.str("d/annotations.json");

  const Run t = vmer_cli(dir, "transcribe --in " + ann + " --out " + dir.str("pred.json"));
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const auto preds = read_predictions_file(dir.str("pred.json"));
  const auto anns = read_annotations_file(ann);
  REQUIRE(preds.size() == anns.size());
  for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds[i].latex == anns[i].latex);

  const Run e = vmer_cli(dir, "evaluate --predictions " + dir.str("pred.json") + " --annotations " + ann +
                                  " --detections " + ann + " --out " + dir.str("report.json"));
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const auto report = json::parse(testing::read_file(dir.path() / "report.json"));
  CHECK(report["er"] == 1.0);
  CHECK(report["map50"] == 1.0);
  CHECK(report["n_images"] == 20);

  // theta = 1 with every confidence below it: all failures, still exit 0.
  REQUIRE(vmer_cli(dir, "inject-noise --in " + ann + " --out " + dir.str("noisy.json") + " --jitter 0.5").code == 0);
  const Run all_fail = vmer_cli(dir, "transcribe --in " + dir.str("noisy.json") + " --theta 1 --out " + dir.str("fail.json"));
  CHECK(all_fail.code == 0);
  for (const auto& p : read_predictions_file(dir.str("fail.json"))) CHECK(p.error == "NoEqualsSign");
  CHECK(all_fail.err.find("img_000000: error NoEqualsSign") != std::string::npos);

  // A missing image id is an orphan.
  auto fewer = preds;
  fewer.pop_back();
  write_predictions_file(fewer, dir.str("fewer.json"));
  const Run orphan = vmer_cli(dir, "evaluate --predictions " + dir.str("fewer.json") + " --annotations " + ann);
  CHECK(orphan.code == 1);
  CHECK(orphan.err.find(anns.back().image_id) != std::string::npos);
}

TEST_CASE("a set without '=' yields an error entry") {
  testing::TempDir dir("cli_noeq");
  auto s = testing::scene_15_plus_27();
  std::erase_if(s.detections, [](const Detection& d) { return d.cls == SymbolClass::kEquals; });
  write_detections_file({s, testing::scene_15_plus_27()}, dir.str("in.json"));
  const Run r = vmer_cli(dir, "transcribe --in " + dir.str("in.json") + " --out " + dir.str("out.json"));
  CHECK(r.code == 0);
  const auto preds = read_predictions_file(dir.str("out.json"));
  CHECK(preds[0].error == "NoEqualsSign");
  CHECK(preds[1].latex == "\\overset{1}{1}5+27=42");
}

TEST_CASE("one single-token flip per image scores ER 0 and ER<=1 1") {
  testing::TempDir dir("cli_flip");
  REQUIRE(vmer_cli(dir, "generate --n 30 --seed 4 --builtin-glyphs 8 --out " + dir.str("d")).code == 0);
  const std::string ann = dir.str("d/annotations.json");
  REQUIRE(vmer_cli(dir, "inject-noise --in " + ann + " --out " + dir.str("n.json") +
                            " --exact-flips 1 --flip-mode single_token --seed 9").code == 0);
  REQUIRE(vmer_cli(dir, "transcribe --in " + dir.str("n.json") + " --out " + dir.str("p.json")).code == 0);
  REQUIRE(vmer_cli(dir, "evaluate --predictions " + dir.str("p.json") + " --annotations " + ann + " --out " +
                            dir.str("r.json")).code == 0);
  const auto report = json::parse(testing::read_file(dir.path() / "r.json"));
  CHECK(report["er"] == 0.0);
  CHECK(report["er_le1"] == 1.0);
}

TEST_CASE("optimize logs 121 cells for grid 11 and is deterministic") {
  testing::TempDir dir("cli_opt");
  REQUIRE(vmer_cli(dir, "generate --n 15 --seed 2 --builtin-glyphs 8 --out " + dir.str("d")).code == 0);
  const std::string ann = dir.str("d/annotations.json");
  REQUIRE(vmer_cli(dir, "inject-noise --in " + ann + " --out " + dir.str("n.json") + " --dup 0.3 --jitter 1").code == 0);
  const Run a = vmer_cli(dir, "optimize --detections " + dir.str("n.json") + " --annotations " + ann +
                                  " --grid 11 --out " + dir.str("p1.json"));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(a.err.find("evaluated 121 cells") != std::string::npos);
  const Run b = vmer_cli(dir, "--workers 2 optimize --detections " + dir.str("n.json") + " --annotations " + ann +
                                  " --grid 11 --out " + dir.str("p2.json"));
  CHECK(b.out == a.out);
  CHECK(testing::read_file(dir.path() / "p1.json") == testing::read_file(dir.path() / "p2.json"));

  const Run clean = vmer_cli(dir, "optimize --detections " + ann + " --annotations " + ann + " --grid 3 --out " +
                                      dir.str("p3.json"));
  CHECK(clean.out.find("er=1 ") != std::string::npos);

  write(dir.str("split.json"), R"({"val": []})");
  const Run empty = vmer_cli(dir, "optimize --detections " + ann + " --annotations " + ann + " --split " +
                                      dir.str("split.json") + " --fold val --out " + dir.str("p4.json"));
  CHECK(empty.code != 0);
}

TEST_CASE("pipeline runs are reproducible and flags override the config") {
  testing::TempDir dir("cli_pipe");
  write(dir.str("cfg.json"), R"({"seed": 1, "n_images": 12, "glyphs": {"builtin_per_digit": 8}})");
  const Run a = vmer_cli(dir, "pipeline --config " + dir.str("cfg.json") + " --out " + dir.str("r1"));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  REQUIRE(vmer_cli(dir, "pipeline --config " + dir.str("cfg.json") + " --out " + dir.str("r2")).code == 0);
  CHECK(testing::read_file(dir.path() / "r1" / "report.json") == testing::read_file(dir.path() / "r2" / "report.json"));
  const auto report = json::parse(testing::read_file(dir.path() / "r1" / "report.json"));
  CHECK(report["er"] == 1.0);
  CHECK(report["seed"] == 1);

  REQUIRE(vmer_cli(dir, "pipeline --config " + dir.str("cfg.json") + " --seed 8 --out " + dir.str("r3")).code == 0);
  CHECK(json::parse(testing::read_file(dir.path() / "r3" / "report.json"))["seed"] == 8);
  CHECK(json::parse(testing::read_file(dir.path() / "r3" / "config.json"))["seed"] == 8);

  write(dir.str("bad.json"), R"({"seed": 1, "bogus": true})");
  CHECK(vmer_cli(dir, "pipeline --config " + dir.str("bad.json")).code == 2);
  write(dir.str("missing.json"), R"({"glyphs": {"images": "/no/i.idx", "labels": "/no/l.idx"}})");
  const Run missing = vmer_cli(dir, "pipeline --config " + dir.str("missing.json") + " --out " + dir.str("r4"));
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/no/i.idx") != std::string::npos);
}

TEST_CASE("export-glyphs writes IDX files generate can read") {
  testing::TempDir dir("cli_glyphs");
  REQUIRE(vmer_cli(dir, "export-glyphs --images " + dir.str("i.idx") + " --labels " + dir.str("l.idx") +
                            " --per-digit 5").code == 0);
  const Run r = vmer_cli(dir, "generate --n 4 --images " + dir.str("i.idx") + " --labels " + dir.str("l.idx") +
                                  " --out " + dir.str("d"));
  CHECK_MESSAGE(r.code == 0, r.err);
  write(dir.str("garbage.idx"), "not an idx file");
  CHECK(vmer_cli(dir, "generate --n 4 --images " + dir.str("garbage.idx") + " --labels " + dir.str("l.idx") +
                          " --out " + dir.str("e")).code == 1);
}
