// End-to-end checks that drive the actual CLI binary (path given as argv[1]).
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "devmine/util.hpp"

namespace fs = std::filesystem;

static std::string g_binary;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("devmine_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run(const std::string& args) {
  std::string cmd = g_binary + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("missing input file exits nonzero") {
  TempDir tmp;
  CHECK(run("--out-dir " + tmp.path.string() + " ingest --input /nonexistent.jsonl") != 0);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("no-such-command") == 1);
}

TEST_CASE("pipeline composes from synth through stats") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 11 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --manifest manifest.csv --participants 10 "
                     "--len-min 25 --len-max 40") == 0);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  REQUIRE(fs::exists(tmp.path / "canonical.jsonl"));
  REQUIRE(fs::exists(tmp.path / "canonical.csv"));
  REQUIRE(fs::exists(tmp.path / "ingest_summary.json"));

  auto summary = nlohmann::json::parse(devmine::read_file(tmp.path / "ingest_summary.json"));
  CHECK(summary["tamper"]["mismatch"] == 0);
  CHECK(summary["cases"] == 10);

  REQUIRE(run(base + "entropy --input " + out + "/canonical.jsonl --orders 1 2 3") == 0);
  REQUIRE(fs::exists(tmp.path / "entropy.csv"));
  REQUIRE(fs::exists(tmp.path / "entropy.svg"));

  REQUIRE(run(base + "topics --input " + out +
              "/canonical.jsonl --ngrams 1 --k-min 2 --k-max 5 --iterations 200 --burn-in 80 "
              "--alpha 0.3") == 0);
  REQUIRE(fs::exists(tmp.path / "fingerprints.json"));
  auto fp = nlohmann::json::parse(devmine::read_file(tmp.path / "fingerprints.json"));
  CHECK(fp["assignment"].size() == 10);

  REQUIRE(run(base + "process --input " + out + "/canonical.jsonl --fingerprints " + out +
              "/fingerprints.json") == 0);
  REQUIRE(fs::exists(tmp.path / "process_quality.csv"));
  auto rows = devmine::parse_csv(devmine::read_file(tmp.path / "process_quality.csv"));
  CHECK(rows.size() == 11);  // header + 10 cases

  REQUIRE(run(base + "stats --metrics " + out + "/process_quality.csv --score-file " + out +
              "/manifest.csv --top-count 3 --bottom-count 3") == 0);
  REQUIRE(fs::exists(tmp.path / "stats.md"));
  REQUIRE(fs::exists(tmp.path / "anova.csv"));
  REQUIRE(fs::exists(tmp.path / "tukey.csv"));
  REQUIRE(fs::exists(tmp.path / "normality.csv"));
}

TEST_CASE("tampered events are reported but not fatal") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 3 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 2 --len-min 10 --len-max 12") == 0);
  // Flip a filename character in the first record; its stored hash goes stale.
  std::string raw = devmine::read_file(tmp.path / "raw.jsonl");
  auto pos = raw.find("P1.py");
  REQUIRE(pos != std::string::npos);
  raw[pos + 1] = '9';
  devmine::atomic_write(tmp.path / "raw.jsonl", raw);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  auto summary = nlohmann::json::parse(devmine::read_file(tmp.path / "ingest_summary.json"));
  CHECK(summary["tamper"]["mismatch"].get<int>() >= 1);
}

TEST_CASE("reruns with the same seed are byte-identical on data artifacts") {
  TempDir tmp;
  std::string out = (tmp.path / "r").string();
  auto run_once = [&] {
    std::string base = "--seed 99 --out-dir " + out + " ";
    REQUIRE(run(base + "synth --out raw.jsonl --manifest manifest.csv --participants 6 "
                       "--len-min 20 --len-max 30") == 0);
    REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
    REQUIRE(run(base + "entropy --input " + out + "/canonical.jsonl --orders 1 2") == 0);
  };
  run_once();
  const char* names[] = {"raw.jsonl", "manifest.csv", "canonical.jsonl", "canonical.csv",
                         "entropy.csv"};
  std::map<std::string, std::string> snapshot;
  for (const char* name : names)
    snapshot[name] = devmine::read_file(fs::path(out) / name);
  run_once();
  for (const char* name : names)
    CHECK(devmine::read_file(fs::path(out) / name) == snapshot[name]);
  // SVGs are structure-checked rather than byte-compared.
  std::string svg = devmine::read_file(fs::path(out) / "entropy.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("corpus smaller than the fold count exits with code 2") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 61 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 1 --len-min 15 --len-max 20") == 0);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  CHECK(run(base + "entropy --input " + out + "/canonical.jsonl --orders 1 --folds 40") == 2);

  SUBCASE("a single-case log produces a single quality row") {
    REQUIRE(run(base + "process --input " + out + "/canonical.jsonl --no-nets") == 0);
    auto rows = devmine::parse_csv(devmine::read_file(tmp.path / "process_quality.csv"));
    CHECK(rows.size() == 2);
  }
}

TEST_CASE("numerical failures exit with code 3") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 13 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 6 --len-min 15 --len-max 20") == 0);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  // Unsmoothed models meet unseen n-grams in the held-out folds.
  CHECK(run(base + "entropy --input " + out +
            "/canonical.jsonl --orders 3 --smoothing mle --unk-cutoff 1") == 3);
}

TEST_CASE("per-attribute grouping yields one row per group value") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 31 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 9 --len-min 15 --len-max 25") == 0);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  REQUIRE(run(base + "process --input " + out +
              "/canonical.jsonl --group-by graduation --no-nets") == 0);
  auto rows = devmine::parse_csv(devmine::read_file(tmp.path / "process_quality.csv"));
  CHECK(rows.size() == 5);  // header + LEI/ETI/IGE/LCD
}

TEST_CASE("parallel workers do not change bytes") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 47 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 8 --len-min 20 --len-max 30") == 0);
  REQUIRE(run(base + "ingest --input " + out + "/raw.jsonl") == 0);
  std::string topics = "topics --input " + out +
                       "/canonical.jsonl --ngrams 1 2 --k-min 2 --k-max 4 --iterations 120 "
                       "--burn-in 40 --alpha 0.3";
  REQUIRE(run(base + "--jobs 1 " + topics) == 0);
  std::string selection1 = devmine::read_file(tmp.path / "topic_selection.csv");
  std::string fp1 = devmine::read_file(tmp.path / "fingerprints.json");
  REQUIRE(run(base + "--jobs 4 " + topics) == 0);
  CHECK(devmine::read_file(tmp.path / "topic_selection.csv") == selection1);
  CHECK(devmine::read_file(tmp.path / "fingerprints.json") == fp1);
}

TEST_CASE("report chains every stage") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::string base = "--seed 53 --out-dir " + out + " ";
  REQUIRE(run(base + "synth --out raw.jsonl --participants 8 --len-min 15 --len-max 25") == 0);
  REQUIRE(run(base + "report --input " + out +
              "/raw.jsonl --iterations 150 --burn-in 50") == 0);
  for (const char* name : {"canonical.jsonl", "entropy.csv", "topic_selection.csv",
                           "fingerprints.json", "process_quality.csv", "stats.md"})
    CHECK(fs::exists(tmp.path / name));
}

TEST_CASE("output directory honors the environment override") {
  TempDir tmp;
  std::string out = (tmp.path / "env_out").string();
  std::string cmd = "DEVMINE_OUT=" + out + " " + g_binary +
                    " synth --out raw.jsonl --participants 2 --len-min 10 --len-max 12 "
                    "> /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(fs::path(out) / "raw.jsonl"));
}

TEST_CASE("config file supplies defaults, flags win") {
  TempDir tmp;
  std::string out = tmp.path.string();
  REQUIRE(run("--seed 3 --out-dir " + out +
              " synth --out raw.jsonl --participants 4 --len-min 15 --len-max 20") == 0);
  REQUIRE(run("--out-dir " + out + " ingest --input " + out + "/raw.jsonl") == 0);
  std::ofstream conf(tmp.path / "dm.conf");
  conf << "seed=15\n\n[entropy]\norders=1\n";
  conf.close();
  std::string cfg = " --config " + (tmp.path / "dm.conf").string();
  REQUIRE(run("--out-dir " + out + cfg + " entropy --input " + out + "/canonical.jsonl") == 0);
  std::string header = devmine::read_file(tmp.path / "entropy.csv").substr(0, 80);
  CHECK(header.find("seed=15") != std::string::npos);
  REQUIRE(run("--out-dir " + out + cfg + " --seed 16 entropy --input " + out +
              "/canonical.jsonl") == 0);
  header = devmine::read_file(tmp.path / "entropy.csv").substr(0, 80);
  CHECK(header.find("seed=16") != std::string::npos);
}

TEST_CASE("english text feeds the entropy comparison") {
  TempDir tmp;
  std::string out = tmp.path.string();
  std::ofstream text(tmp.path / "sample.txt");
  text << "The quick brown fox jumps over the lazy dog. She sells sea shells by the sea shore. "
          "Pack my box with five dozen liquor jugs. How vexingly quick daft zebras jump. "
          "The five boxing wizards jump quickly over the lazy brown dog near the shore.";
  text.close();
  std::string base = "--seed 5 --out-dir " + out + " ";
  REQUIRE(run(base + "entropy --input '' --english " + (tmp.path / "sample.txt").string() +
              " --orders 1 --folds 2") == 0);
  auto rows = devmine::parse_csv(devmine::read_file(tmp.path / "entropy.csv"));
  bool has_english = false;
  for (const auto& row : rows)
    if (!row.empty() && row[0] == "english") has_english = true;
  CHECK(has_english);
}

int main(int argc, char** argv) {
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_binary = argv[argc - 1];
    --argc;
  }
  doctest::Context context(argc, argv);
  return context.run();
}
