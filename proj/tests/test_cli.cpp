#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sylseg/io.hpp"
#include "testutil.hpp"

using namespace sylseg;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Workspace {
  Workspace() {
    root = fs::temp_directory_path() /
           ("sylseg_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  fs::path root;
  static inline int counter = 0;
};

int run(const std::string& args) {
  const std::string cmd = std::string(SYLSEG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_capture(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(SYLSEG_CLI_PATH) + " " + args + " > " +
                          stdout_file.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(static_cast<bool>(is));
  json j;
  is >> j;
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Three-level piecewise-constant corpus with matching alignment files.
void make_corpus(const fs::path& root, int utterances, std::uint64_t seed) {
  fs::create_directories(root / "feats");
  fs::create_directories(root / "ali");
  std::mt19937_64 rng(seed);
  for (int u = 0; u < utterances; ++u) {
    const auto planted = testutil::planted_piecewise(rng, 6, 5, 10, 3, 3, 1.0, 0.04);
    char name[32];
    std::snprintf(name, sizeof(name), "utt_%02d", u);
    write_sylf(root / "feats" / (std::string(name) + ".sylf"),
               FeatureSequence(planted.frames, 50.0));
    std::ofstream ali(root / "ali" / (std::string(name) + ".ali"));
    ali.precision(17);
    for (std::size_t s = 0; s + 1 < planted.boundaries.size(); ++s) {
      ali << (planted.boundaries[s] - 1) / 50.0 << '\t'
          << (planted.boundaries[s + 1] - 1) / 50.0 << '\t' << "lvl" << planted.labels[s]
          << '\n';
    }
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("assemble: valid and conflicting record files") {
  Workspace ws;
  fs::create_directories(ws.root / "recs");
  {
    std::ofstream ok(ws.root / "recs" / "good.rec");
    ok << "2 5 2:0.5 3:0.5 4:0.5 5:0.5\n";
    std::ofstream bad(ws.root / "recs" / "dup.rec");
    bad << "3 6 3:0.5 4:0.5\n3 6 3:0.5 4:0.5\n";
  }
  const auto out = ws.root / "mats";
  CHECK(run("assemble --records " + (ws.root / "recs").string() + " --out " + out.string() +
            " --span 4") == 1);
  CHECK(fs::exists(out / "good.sylf"));
  CHECK(!fs::exists(out / "dup.sylf"));
  const auto manifest = read_json(out / "manifest.json");
  CHECK(manifest["num_ok"] == 1);
  CHECK(manifest["num_failed"] == 1);
  CHECK(manifest["inputs"].size() == 2);

  // A clean directory exits zero.
  fs::remove(ws.root / "recs" / "dup.rec");
  CHECK(run("assemble --records " + (ws.root / "recs").string() + " --out " +
            (ws.root / "mats2").string() + " --span 4") == 0);
}

TEST_CASE("assemble: manifest accounts for every file of a large corpus") {
  Workspace ws;
  fs::create_directories(ws.root / "recs");
  for (int i = 0; i < 100; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "u%03d.rec", i);
    std::ofstream os(ws.root / "recs" / name);
    os << "2 5 2:0.5 3:0.5 4:0.5 5:0.5\n6 9 6:0.25 7:0.25 8:0.25 9:0.25\n";
  }
  const auto out = ws.root / "mats";
  REQUIRE(run("assemble --records " + (ws.root / "recs").string() + " --out " + out.string() +
              " --span 4") == 0);
  const auto manifest = read_json(out / "manifest.json");
  CHECK(manifest["num_ok"] == 100);
  CHECK(manifest["num_failed"] == 0);
  CHECK(manifest["inputs"].size() == 100);
  int matrices = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    matrices += e.path().extension() == ".sylf";
  }
  CHECK(matrices == 100);
}

TEST_CASE("segment: fixed-k mode gives exactly k groups everywhere") {
  Workspace ws;
  make_corpus(ws.root, 4, 11);
  const auto segs = ws.root / "segs";
  REQUIRE(run("segment --input " + (ws.root / "feats").string() + " --out " + segs.string() +
              " --k 5 --group-max 50") == 0);
  int count = 0;
  for (const auto& e : fs::directory_iterator(segs)) {
    if (e.path().extension() != ".json" || e.path().filename() == "manifest.json" ||
        e.path().filename() == "summary.json") {
      continue;
    }
    CHECK(read_json(e.path())["k"] == 5);
    ++count;
  }
  CHECK(count == 4);
  const auto summary = read_json(segs / "summary.json");
  CHECK(summary["num_utterances"] == 4);
  CHECK(summary["mean_rate_hz"].get<double>() > 0.0);
}

TEST_CASE("segment: empty input directory exits nonzero") {
  Workspace ws;
  fs::create_directories(ws.root / "empty");
  CHECK(run("segment --input " + (ws.root / "empty").string() + " --out " +
            (ws.root / "out").string() + " --k 3") != 0);
}

TEST_CASE("segment: delta and emit-loss produce per-frame losses") {
  Workspace ws;
  make_corpus(ws.root, 2, 17);
  const auto segs = ws.root / "segs";
  REQUIRE(run("segment --input " + (ws.root / "feats").string() + " --out " + segs.string() +
              " --delta 0.05 --group-max 20 --emit-loss") == 0);
  const auto j = read_json(segs / "utt_00.seg.json");
  REQUIRE(j.contains("per_frame_loss"));
  CHECK(j["per_frame_loss"].size() == j["T"].get<std::size_t>());
  CHECK(j["total_cost"].get<double>() >= 0.0);
}

TEST_CASE("segment: target rate calibrates delta on the corpus") {
  Workspace ws;
  fs::create_directories(ws.root / "feats");
  std::mt19937_64 rng(23);
  for (int u = 0; u < 10; ++u) {
    const auto planted = testutil::planted_piecewise(rng, 12, 6, 14, 3, 4, 1.0, 0.05);
    char name[32];
    std::snprintf(name, sizeof(name), "u%02d.sylf", u);
    write_sylf(ws.root / "feats" / name, FeatureSequence(planted.frames, 50.0));
  }
  const auto segs = ws.root / "segs";
  REQUIRE(run("segment --input " + (ws.root / "feats").string() + " --out " + segs.string() +
              " --target-hz 5.0 --group-max 50") == 0);
  const auto summary = read_json(segs / "summary.json");
  CHECK(std::abs(summary["mean_rate_hz"].get<double>() - 5.0) <= 0.05);
  CHECK(summary.contains("calibration"));
}

TEST_CASE("segment: mincut mode rejects delta rate control") {
  Workspace ws;
  fs::create_directories(ws.root / "feats");
  CHECK(run("segment --mode mincut --input " + (ws.root / "feats").string() + " --out " +
            (ws.root / "out").string() + " --delta 0.1") == 2);
}

TEST_CASE("tokenize: recovers planted levels; rerun with codebook is byte-identical") {
  Workspace ws;
  make_corpus(ws.root, 6, 29);
  const auto segs = ws.root / "segs";
  // Oracle group count per utterance pins the segmentation to the planted
  // boundaries; level recovery is then purely down to the codebook path.
  REQUIRE(run("segment --input " + (ws.root / "feats").string() + " --out " + segs.string() +
              " --k 6 --group-max 20") == 0);

  const auto tok1 = ws.root / "tok1";
  REQUIRE(run("tokenize --features " + (ws.root / "feats").string() + " --segs " +
              segs.string() + " --out " + tok1.string() +
              " --units 3 --kmeans-k 6 --seed 5") == 0);
  REQUIRE(fs::exists(tok1 / "codebook.sylc"));
  REQUIRE(fs::exists(tok1 / "units.txt"));
  const auto bitrate_report = read_json(tok1 / "bitrate.json");
  CHECK(bitrate_report["num_units"] == 3);
  CHECK(bitrate_report["post_dedup"]["rate_hz"].get<double>() <=
        bitrate_report["pre_dedup"]["rate_hz"].get<double>());

  // Applying the saved codebook reproduces the unit file byte for byte.
  const auto tok2 = ws.root / "tok2";
  REQUIRE(run("tokenize --features " + (ws.root / "feats").string() + " --segs " +
              segs.string() + " --out " + tok2.string() + " --codebook " +
              (tok1 / "codebook.sylc").string() + " --units 3 --seed 5") == 0);
  CHECK(slurp(tok1 / "units.txt") == slurp(tok2 / "units.txt"));

  // Purity against the planted alignments is perfect at U=3 and degrades
  // below 1.0 when two levels are forced to share a unit at U=2.
  const auto report = ws.root / "report.json";
  REQUIRE(run_capture("eval --units " + (tok1 / "units.txt").string() + " --alignments " +
                          (ws.root / "ali").string(),
                      report) == 0);
  const auto ev = read_json(report);
  CHECK(ev["cluster_purity"].get<double>() == 1.0);

  const auto tok_u2 = ws.root / "tok_u2";
  REQUIRE(run("tokenize --features " + (ws.root / "feats").string() + " --segs " +
              segs.string() + " --out " + tok_u2.string() +
              " --units 2 --kmeans-k 6 --seed 5") == 0);
  REQUIRE(run_capture("eval --units " + (tok_u2 / "units.txt").string() + " --alignments " +
                          (ws.root / "ali").string(),
                      report) == 0);
  CHECK(read_json(report)["cluster_purity"].get<double>() < 1.0);
}

TEST_CASE("eval: self-evaluation is perfect; 30 ms shift flips with tolerance") {
  Workspace ws;
  fs::create_directories(ws.root / "ali");
  fs::create_directories(ws.root / "ali_shift");
  fs::create_directories(ws.root / "segs");

  // Hypothesis boundaries at 0.2 s and 0.4 s, matching one alignment exactly
  // and sitting 30 ms early against the shifted one.
  {
    std::ofstream ali(ws.root / "ali" / "u0.ali");
    ali << "0\t0.2\ta\n0.2\t0.4\tb\n0.4\t0.6\tc\n";
    std::ofstream shifted(ws.root / "ali_shift" / "u0.ali");
    shifted << "0.03\t0.23\ta\n0.23\t0.43\tb\n0.43\t0.63\tc\n";
  }
  SegmentationRecord exact{"u0", 50.0, Segmentation({1, 11, 21, 31}, 30), 0.0, std::nullopt, {}};
  write_segmentation(ws.root / "segs" / "u0.seg.json", exact);

  const auto report = ws.root / "report.json";
  REQUIRE(run_capture("eval --segs " + (ws.root / "segs").string() + " --alignments " +
                          (ws.root / "ali").string() + " --tolerance 0.02 0.05",
                      report) == 0);
  auto ev = read_json(report);
  for (const auto& tol : ev["tolerances"]) {
    CHECK(tol["f1"].get<double>() == 1.0);
    CHECK(tol["r_value"].get<double>() == doctest::Approx(1.0));
  }

  REQUIRE(run_capture("eval --segs " + (ws.root / "segs").string() + " --alignments " +
                          (ws.root / "ali_shift").string() + " --tolerance 0.02 0.05",
                      report) == 0);
  ev = read_json(report);
  CHECK(ev["tolerances"][0]["f1"].get<double>() == 0.0);  // 30 ms miss at 20 ms
  CHECK(ev["tolerances"][1]["f1"].get<double>() == 1.0);  // 30 ms hit at 50 ms
}

TEST_CASE("eval: per-utterance mean versus corpus pooling") {
  Workspace ws;
  fs::create_directories(ws.root / "ali");
  fs::create_directories(ws.root / "segs");
  // utt_a scores f1 = 1; utt_b scores f1 = 0 (its one boundary misses both
  // references). Pooled counts give 2/4 hits over 3 hypotheses instead.
  {
    std::ofstream a(ws.root / "ali" / "utt_a.ali");
    a << "0\t0.2\tx\n0.2\t0.4\ty\n0.4\t0.6\tz\n";
    std::ofstream b(ws.root / "ali" / "utt_b.ali");
    b << "0\t0.1\tx\n0.1\t0.5\ty\n0.5\t0.6\tz\n";
  }
  write_segmentation(ws.root / "segs" / "utt_a.seg.json",
                     {"utt_a", 50.0, Segmentation({1, 11, 21, 31}, 30), 0.0, std::nullopt, {}});
  write_segmentation(ws.root / "segs" / "utt_b.seg.json",
                     {"utt_b", 50.0, Segmentation({1, 16, 31}, 30), 0.0, std::nullopt, {}});

  const auto report = ws.root / "report.json";
  REQUIRE(run_capture("eval --segs " + (ws.root / "segs").string() + " --alignments " +
                          (ws.root / "ali").string() + " --tolerance 0.05",
                      report) == 0);
  CHECK(read_json(report)["tolerances"][0]["f1"].get<double>() ==
        doctest::Approx(4.0 / 7.0));  // P = 2/3, R = 1/2

  REQUIRE(run_capture("eval --segs " + (ws.root / "segs").string() + " --alignments " +
                          (ws.root / "ali").string() +
                          " --tolerance 0.05 --per-utterance-mean",
                      report) == 0);
  CHECK(read_json(report)["tolerances"][0]["f1"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("eval: missing alignments are listed and excluded") {
  Workspace ws;
  make_corpus(ws.root, 3, 31);
  fs::remove(ws.root / "ali" / "utt_02.ali");
  const auto segs = ws.root / "segs";
  REQUIRE(run("segment --input " + (ws.root / "feats").string() + " --out " + segs.string() +
              " --k 6 --group-max 50") == 0);
  const auto report = ws.root / "report.json";
  CHECK(run_capture("eval --segs " + segs.string() + " --alignments " +
                        (ws.root / "ali").string(),
                    report) == 1);
  const auto ev = read_json(report);
  CHECK(ev["num_excluded"] == 1);
  CHECK(ev["excluded"][0]["utterance"] == "utt_02");
  CHECK(ev["tolerances"][0]["num_ref"].get<int>() > 0);
}

TEST_CASE("calibrate: writes the delta and achieved rate") {
  Workspace ws;
  fs::create_directories(ws.root / "feats");
  std::mt19937_64 rng(37);
  for (int u = 0; u < 6; ++u) {
    const auto planted = testutil::planted_piecewise(rng, 10, 8, 12, 2, 3, 1.0, 0.05);
    write_sylf(ws.root / "feats" / ("u" + std::to_string(u) + ".sylf"),
               FeatureSequence(planted.frames, 50.0));
  }
  const auto out = ws.root / "calibration.json";
  REQUIRE(run("calibrate --input " + (ws.root / "feats").string() +
              " --target-hz 5.0 --out " + out.string()) == 0);
  const auto j = read_json(out);
  CHECK(std::abs(j["achieved_hz"].get<double>() - 5.0) <= 0.05);
  CHECK(j["delta"].get<double>() > 0.0);
}

TEST_CASE("config file supplies defaults that flags override") {
  Workspace ws;
  make_corpus(ws.root, 2, 41);
  const auto cfg = ws.root / "pipeline.ini";
  {
    std::ofstream os(cfg);
    os << "[segment]\nk=4\ngroup-max=50\n";
  }
  const auto segs = ws.root / "segs";
  REQUIRE(run("--config " + cfg.string() + " segment --input " +
              (ws.root / "feats").string() + " --out " + segs.string()) == 0);
  CHECK(read_json(segs / "utt_00.seg.json")["k"] == 4);

  const auto segs2 = ws.root / "segs2";
  REQUIRE(run("--config " + cfg.string() + " segment --input " +
              (ws.root / "feats").string() + " --out " + segs2.string() + " --k 6") == 0);
  CHECK(read_json(segs2 / "utt_00.seg.json")["k"] == 6);
}

}  // TEST_SUITE
