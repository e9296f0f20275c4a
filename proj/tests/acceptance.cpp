// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. argv[1] = CLI binary path, argv[2] = bundled data directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "devmine/eventlog.hpp"
#include "devmine/lda.hpp"
#include "devmine/ngram.hpp"
#include "devmine/procmine.hpp"
#include "devmine/stats.hpp"
#include "devmine/synth.hpp"
#include "devmine/util.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace devmine;

namespace {

std::string g_cli;
fs::path g_data;
int g_failures = 0;

struct Criterion {
  int id;
  double budget_seconds;
  std::chrono::steady_clock::time_point start;
  bool ok = true;
  std::string detail;

  Criterion(int id_, double budget) : id(id_), budget_seconds(budget) {
    start = std::chrono::steady_clock::now();
  }
  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void expect(bool condition, const std::string& why) {
    if (!condition) fail(why);
  }
  void finish() {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= budget_seconds)
      fail("runtime " + std::to_string(elapsed) + "s exceeds budget " +
           std::to_string(budget_seconds) + "s");
    std::printf("CRITERION %d: %s (%.1fs%s%s)\n", id, ok ? "PASS" : "FAIL", elapsed,
                detail.empty() ? "" : " - ", detail.c_str());
    if (!ok) ++g_failures;
  }
};

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

// ---- criterion 1: n-gram oracle equivalence ----

void criterion1() {
  Criterion c(1, 5.0);
  Rng rng(1001);
  for (int round = 0; round < 50; ++round) {
    // Random corpus capped at 200 tokens.
    Corpus corpus;
    std::size_t total = 0;
    std::size_t alphabet = 2 + rng.uniform(3);
    while (total < 150) {
      Sentence sent;
      std::size_t len = 1 + rng.uniform(10);
      if (total + len > 200) break;
      for (std::size_t i = 0; i < len; ++i) {
        std::string tok(1, static_cast<char>('A' + rng.uniform(alphabet)));
        corpus.vocab.intern(tok);
        sent.push_back(tok);
      }
      total += len;
      corpus.sentences.push_back(std::move(sent));
      corpus.sentence_ids.push_back("s");
    }
    ngram::SmoothingConfig cfg;
    cfg.unk_cutoff = 1;
    cfg.method = round % 2 == 0 ? ngram::Smoothing::katz_good_turing : ngram::Smoothing::mle;
    int order = 1 + static_cast<int>(rng.uniform(3));
    ngram::NGramModel model = ngram::train(corpus, order, cfg);

    // Brute-force token-by-token oracle: -mean log2 over every scored token,
    // walking padded sentences position by position.
    double log2_sum = 0.0;
    std::size_t tokens = 0;
    for (const auto& sent : corpus.sentences) {
      std::vector<std::uint32_t> ids;
      for (int i = 0; i + 1 < order; ++i) ids.push_back(ngram::NGramModel::kBos);
      for (const auto& tok : sent) ids.push_back(model.token_id(tok));
      ids.push_back(ngram::NGramModel::kEos);
      std::size_t ctx = static_cast<std::size_t>(order - 1);
      for (std::size_t i = ctx; i < ids.size(); ++i) {
        log2_sum += std::log2(model.prob({ids.data() + (i - ctx), ctx}, ids[i]));
        ++tokens;
      }
    }
    double oracle = -log2_sum / static_cast<double>(tokens);
    double computed = ngram::cross_entropy(model, corpus);
    if (std::fabs(oracle - computed) > 1e-9) {
      c.fail("corpus " + std::to_string(round) + ": |" + std::to_string(computed) + " - " +
             std::to_string(oracle) + "| > 1e-9");
      break;
    }
  }
  c.finish();
}

// ---- criterion 2: entropy-shape reproduction ----

void criterion2() {
  Criterion c(2, 60.0);
  Rng rng(2002);
  Corpus sessions = testutil::markov2_corpus(rng, 80, 60, 0.9);
  auto reports = ngram::kfold_cross_entropy(sessions, {1, 2, 3, 4, 5, 6}, 5, 22, {});
  c.expect(reports[1].mean < reports[0].mean, "H(2) >= H(1)");
  for (std::size_t i = 3; i + 1 < reports.size(); ++i) {
    double delta = std::fabs(reports[i].mean - reports[i + 1].mean);
    c.expect(delta < 0.05, "no saturation at n=" + std::to_string(reports[i].order) +
                               " (delta " + std::to_string(delta) + ")");
  }
  Corpus english = ngram::tokenize_text(read_file(g_data / "english_sample.txt"));
  auto english_rep = ngram::kfold_cross_entropy(english, {1}, 5, 22, {});
  auto session_rep = ngram::kfold_cross_entropy(sessions, {1}, 5, 22, {});
  c.expect(english_rep[0].mean > session_rep[0].mean,
           "english unigram entropy not above session entropy");
  c.finish();
}

// ---- criterion 3: LDA correctness ----

lda::DocTermMatrix planted3(Rng& rng, std::size_t docs, std::size_t tokens) {
  const std::size_t block = 10;
  Corpus corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    int topic = static_cast<int>(d % 3);
    Sentence sent;
    for (std::size_t i = 0; i < tokens; ++i) {
      int t = rng.real() < 0.9 ? topic : static_cast<int>(rng.uniform(3));
      sent.push_back("w" + std::to_string(static_cast<std::size_t>(t) * block + rng.uniform(block)));
    }
    for (auto& tok : sent) corpus.vocab.intern(tok);
    corpus.sentences.push_back(std::move(sent));
    corpus.sentence_ids.push_back("p" + std::to_string(d));
  }
  return lda::build_docs(corpus, 1);
}

void criterion3() {
  Criterion c(3, 120.0);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 31);
    lda::DocTermMatrix dtm = planted3(rng, 60, 50);
    lda::LdaConfig cfg;
    cfg.iterations = 300;
    cfg.burn_in = 100;
    cfg.seed = seed;
    cfg.alpha = 0.2;

    std::vector<double> lengths;
    for (std::size_t d = 0; d < dtm.n_docs(); ++d)
      lengths.push_back(static_cast<double>(dtm.doc_total(d)));
    double best_cao = 1e18, best_arun = 1e18;
    int cao_k = 0, arun_k = 0;
    for (int k = 2; k <= 8; ++k) {
      lda::LdaModel m = lda::fit_lda(dtm, k, cfg);
      // Row-stochasticity on every fit.
      for (const auto& row : m.phi) {
        double sum = 0.0;
        for (double v : row) sum += v;
        c.expect(std::fabs(sum - 1.0) <= 1e-9, "phi row sum off at k=" + std::to_string(k));
      }
      for (const auto& row : m.theta) {
        double sum = 0.0;
        for (double v : row) sum += v;
        c.expect(std::fabs(sum - 1.0) <= 1e-9, "theta row sum off at k=" + std::to_string(k));
      }
      double cao = lda::metric_cao2009(m.phi);
      double arun = lda::metric_arun2010(m.phi, m.theta, lengths);
      if (cao < best_cao) {
        best_cao = cao;
        cao_k = k;
      }
      if (arun < best_arun) {
        best_arun = arun;
        arun_k = k;
      }
    }
    if ((cao_k == 3 || cao_k == 4) && (arun_k == 3 || arun_k == 4)) ++hits;
    if (seed == 1) {
      lda::LdaModel a = lda::fit_lda(dtm, 3, cfg);
      lda::LdaModel b = lda::fit_lda(dtm, 3, cfg);
      c.expect(a.phi == b.phi && a.theta == b.theta, "seed determinism violated");
    }
  }
  c.expect(hits >= 8, "metric minima at k in {3,4} in only " + std::to_string(hits) + "/10 seeds");
  c.finish();
}

// ---- criterion 4: LDA entropy trends ----

void criterion4() {
  Criterion c(4, 180.0);
  // Synthetic sessions from a handful of activity profiles.
  synth::SyntheticSpec spec;
  spec.participants = 12;
  spec.sessions_min = spec.sessions_max = 3;
  spec.session_len_min = 40;
  spec.session_len_max = 60;
  spec.seed = 404;
  auto parsed = parse_events(std::string_view(synth::generate_jsonl(spec)));
  EventLog recoded = recode_activities(parsed.log, ActivityMap::builtin());
  EventLog by_session = sessionize(recoded, "session");
  Corpus corpus = to_sentences(by_session.sessions, TokenLevel::activity);

  lda::LdaConfig cfg;
  cfg.iterations = 200;
  cfg.burn_in = 80;
  cfg.seed = 17;
  cfg.alpha = 0.5;

  // Nondecreasing in w at fixed k.
  std::vector<double> by_w;
  for (int w = 1; w <= 3; ++w) {
    lda::DocTermMatrix dtm = lda::build_docs(corpus, w);
    by_w.push_back(lda::kfold_heldout_entropy(dtm, 5, 5, cfg, 50).mean);
  }
  c.expect(by_w[1] >= by_w[0] - 1e-9 && by_w[2] >= by_w[1] - 1e-9,
           "entropy not nondecreasing in w: " + std::to_string(by_w[0]) + ", " +
               std::to_string(by_w[1]) + ", " + std::to_string(by_w[2]));

  // Negative Spearman trend in k at fixed w.
  lda::DocTermMatrix dtm1 = lda::build_docs(corpus, 1);
  std::vector<double> ks, entropies;
  for (int k = 2; k <= 10; ++k) {
    ks.push_back(k);
    entropies.push_back(lda::kfold_heldout_entropy(dtm1, k, 5, cfg, 50).mean);
  }
  double rho = testutil::spearman(ks, entropies);
  c.expect(rho < 0.0, "Spearman rho(k, H) = " + std::to_string(rho) + " is not negative");
  c.finish();
}

// ---- criterion 5: conformance metrics ----

void criterion5() {
  Criterion c(5, 30.0);
  Rng rng(505);
  for (int round = 0; round < 5; ++round) {
    std::vector<pm::Trace> seed_traces;
    std::size_t alphabet = 3 + rng.uniform(3);
    for (int i = 0; i < 15; ++i) {
      pm::Trace t;
      std::size_t len = 2 + rng.uniform(8);
      for (std::size_t j = 0; j < len; ++j)
        t.push_back(std::string(1, static_cast<char>('a' + rng.uniform(alphabet))));
      seed_traces.push_back(std::move(t));
    }
    auto conv = pm::dfg_to_petri(pm::discover_dfg(seed_traces));
    auto playouts = pm::random_playouts(conv.net, 100, 400, rng);
    double fitness = pm::replay_fitness(conv.net, playouts);
    c.expect(std::fabs(fitness - 1.0) <= 1e-9,
             "playout fitness " + std::to_string(fitness) + " != 1");
  }
  c.expect(std::fabs(pm::generalization_from_counts({1, 1, 1, 1}) - 0.0) <= 1e-12,
           "generalization at exec=1");
  c.expect(std::fabs(pm::generalization_from_counts({100, 100, 100}) - 0.9) <= 1e-12,
           "generalization at exec=100");

  // Sequence net: all nodes at degree <= 2.
  auto seq = pm::dfg_to_petri(pm::discover_dfg(std::vector<pm::Trace>{{"a", "b", "c"}}));
  c.expect(std::fabs(pm::simplicity(seq.net) - 1.0) <= 1e-12, "sequence simplicity != 1");
  // Mean degree 3: single place with three self-looping transitions.
  pm::PetriNet flower;
  flower.places = {"p"};
  for (const char* name : {"a", "b", "c"}) {
    pm::PetriNet::Transition t;
    t.name = name;
    t.label = name;
    t.in = {0};
    t.out = {0};
    flower.transitions.push_back(std::move(t));
  }
  flower.initial_marking[0] = 1;
  flower.final_marking[0] = 1;
  c.expect(std::fabs(pm::simplicity(flower) - 0.5) <= 1e-12, "degree-3 simplicity != 0.5");

  double average = (0.908 + 1.0 + 0.192 + 0.507) / 4.0;
  c.expect(std::fabs(average - 0.652) <= 0.0005,
           "published-row average " + std::to_string(average));
  c.finish();
}

// ---- criterion 6: statistics ----

void criterion6() {
  Criterion c(6, 30.0);
  Rng rng(606);
  for (int round = 0; round < 1000; ++round) {
    std::vector<std::vector<double>> groups(2 + rng.uniform(4));
    for (auto& grp : groups) {
      std::size_t n = 2 + rng.uniform(12);
      for (std::size_t i = 0; i < n; ++i) grp.push_back(5.0 * rng.normal() + rng.real());
    }
    stats::AnovaResult r = stats::anova_oneway(groups);
    double grand = 0.0;
    std::size_t n = 0;
    for (const auto& grp : groups)
      for (double v : grp) {
        grand += v;
        ++n;
      }
    grand /= static_cast<double>(n);
    double ss_total = 0.0;
    for (const auto& grp : groups)
      for (double v : grp) ss_total += (v - grand) * (v - grand);
    if (std::fabs(r.ss_between + r.ss_within - ss_total) > 1e-9) {
      c.fail("SS identity violated at round " + std::to_string(round));
      break;
    }
  }

  std::vector<std::vector<double>> g37(3);
  for (std::size_t i = 0; i < 37; ++i)
    g37[i < 5 ? 0 : (i < 10 ? 1 : 2)].push_back(rng.normal());
  stats::AnovaResult aov = stats::anova_oneway(g37);
  c.expect(aov.df_between == 2 && aov.df_within == 34,
           "df structure (" + std::to_string(aov.df_between) + ", " +
               std::to_string(aov.df_within) + ") != (2, 34)");

  std::vector<double> royston = {.139,  .157,  .175,  .256,  .344,  .413,  .503,  .577,  .614,
                                 .655,  .954,  1.392, 1.557, 1.648, 1.690, 1.994, 2.174, 2.206,
                                 3.245, 3.510, 3.571, 4.354, 4.980, 6.084, 8.351};
  stats::SwResult sw = stats::shapiro_wilk(royston);
  c.expect(std::fabs(sw.w - 0.83467) < 5e-4,
           "Shapiro-Wilk W " + std::to_string(sw.w) + " != 0.83467");

  struct Entry {
    double q;
    int k;
    double df;
  };
  for (const Entry& e : {Entry{3.64, 2, 5}, Entry{3.88, 3, 10}, Entry{3.58, 3, 20},
                         Entry{3.96, 4, 20}, Entry{4.65, 5, 10}}) {
    double cdf = stats::studentized_range_cdf(e.q, e.k, e.df);
    c.expect(std::fabs(cdf - 0.95) < 0.002, "q-table (" + std::to_string(e.k) + "," +
                                                std::to_string(static_cast<int>(e.df)) +
                                                ") cdf " + std::to_string(cdf));
  }
  c.finish();
}

// ---- criteria 7 and 8: end-to-end pipeline and determinism ----

bool run_pipeline(const fs::path& dir) {
  fs::create_directories(dir);
  std::string out = dir.string();
  std::string base = "--seed 2024 --out-dir " + out + " ";
  if (run_cli(base + "synth --out raw.jsonl --manifest manifest.csv --participants 37") != 0)
    return false;
  if (run_cli(base + "ingest --input " + out + "/raw.jsonl") != 0) return false;
  if (run_cli(base + "topics --input " + out +
              "/canonical.jsonl --ngrams 1 --k-min 2 --k-max 12 --iterations 600 --burn-in 200 "
              "--alpha 0.3") != 0)
    return false;
  if (run_cli(base + "process --input " + out + "/canonical.jsonl --fingerprints " + out +
              "/fingerprints.json --no-nets") != 0)
    return false;
  std::string top, bottom;
  for (int i = 0; i < 5; ++i) {
    top += (i ? " " : "") + synth::participant_name(static_cast<std::size_t>(i));
    bottom += (i ? " " : "") + synth::participant_name(static_cast<std::size_t>(32 + i));
  }
  if (run_cli(base + "stats --metrics " + out + "/process_quality.csv --factors simplicity "
              "--top " + top + " --bottom " + bottom) != 0)
    return false;
  return true;
}

void criterion7(const fs::path& dir) {
  Criterion c(7, 300.0);
  if (!run_pipeline(dir / "run1")) {
    c.fail("pipeline stage exited nonzero");
    c.finish();
    return;
  }
  // Fingerprint partition over all 37 participants.
  auto fp = nlohmann::json::parse(read_file(dir / "run1" / "fingerprints.json"));
  c.expect(fp["assignment"].size() == 37, "assignment does not cover 37 participants");
  std::set<std::string> seen;
  std::size_t member_total = 0;
  for (const auto& one : fp["fingerprints"]) {
    for (const auto& m : one["members"]) {
      c.expect(seen.insert(m.get<std::string>()).second, "participant in two fingerprints");
      ++member_total;
    }
  }
  c.expect(member_total == 37, "fingerprint members do not cover all participants");

  // ANOVA on simplicity must flag the planted Top/Bottom gap.
  auto anova_rows = parse_csv(read_file(dir / "run1" / "anova.csv"));
  bool anova_sig = false;
  for (std::size_t r = 1; r < anova_rows.size(); ++r)
    if (anova_rows[r][0] == "simplicity" && std::stod(anova_rows[r][8]) < 0.05) anova_sig = true;
  c.expect(anova_sig, "ANOVA p for simplicity not < 0.05");

  auto tukey_rows = parse_csv(read_file(dir / "run1" / "tukey.csv"));
  bool pair_sig = false;
  for (std::size_t r = 1; r < tukey_rows.size(); ++r) {
    const std::string& pair = tukey_rows[r][1];
    if (tukey_rows[r][0] == "simplicity" &&
        (pair == "Top-Bottom" || pair == "Bottom-Top") && std::stod(tukey_rows[r][5]) < 0.05)
      pair_sig = true;
  }
  c.expect(pair_sig, "Tukey does not flag the Bottom-Top pair");
  c.finish();
}

void criterion8(const fs::path& dir) {
  Criterion c(8, 300.0);
  // Snapshot the first run, then repeat the identical invocation into the
  // same directory and compare bytes.
  const char* names[] = {"raw.jsonl",         "manifest.csv",        "canonical.jsonl",
                         "canonical.csv",     "topic_selection.csv", "fingerprints.json",
                         "process_quality.csv", "anova.csv",         "tukey.csv",
                         "normality.csv"};
  std::map<std::string, std::string> snapshot;
  for (const char* name : names) snapshot[name] = read_file(dir / "run1" / name);
  if (!run_pipeline(dir / "run1")) {
    c.fail("pipeline rerun exited nonzero");
    c.finish();
    return;
  }
  for (const char* name : names) {
    if (read_file(dir / "run1" / name) != snapshot[name])
      c.fail(std::string(name) + " differs between reruns");
  }
  c.finish();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <cli-binary> <data-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_data = argv[2];

  fs::path work = fs::temp_directory_path() / "devmine_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7(work);
  criterion8(work);

  fs::remove_all(work);
  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
