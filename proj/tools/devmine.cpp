// devmine: mine development event logs into behavior fingerprints.
//
// Subcommands cover the batch pipeline end to end: synth (demo data),
// ingest (parse/verify/dedupe/recode), entropy (n-gram cross-entropy),
// topics (LDA selection + fingerprints), process (DFG discovery and
// conformance quality), stats (group comparisons), report (all of the
// above in sequence).

#include <CLI11.hpp>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "devmine/digest.hpp"
#include "devmine/eventlog.hpp"
#include "devmine/lda.hpp"
#include "devmine/ngram.hpp"
#include "devmine/procmine.hpp"
#include "devmine/stats.hpp"
#include "devmine/svg.hpp"
#include "devmine/synth.hpp"
#include "devmine/util.hpp"

namespace fs = std::filesystem;
using namespace devmine;
using nlohmann::ordered_json;

namespace {

struct Global {
  std::uint64_t seed = 42;
  int jobs = 1;
  std::string out_dir = "out";
};

std::string fmt(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string duration_hms(double seconds) {
  long total = static_cast<long>(seconds + 0.5);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld", total / 3600, (total / 60) % 60,
                total % 60);
  return buf;
}

// Digest of the resolved option values of the active subcommand, embedded in
// every artifact so outputs are traceable to their exact configuration.
std::string config_digest(const CLI::App& cmd) {
  std::string repr = cmd.get_name();
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_name().empty()) continue;
    repr += ';' + opt->get_name() + '=';
    for (const auto& r : opt->results()) repr += r + ',';
  }
  return md5_hex(repr);
}

std::string artifact_header(const std::string& cmd, std::uint64_t seed,
                            const std::string& digest) {
  return "# devmine " + cmd + " seed=" + std::to_string(seed) + " config=" + digest + "\n";
}

EventLog load_canonical(const fs::path& path) { return from_jsonl(read_file(path)); }

// Sentences = sessions keyed by `sentence_key`, with the owning participant
// of each sentence resolved through `participant_key`.
struct SessionCorpus {
  Corpus corpus;                            // one sentence per session
  std::vector<std::string> participants;    // parallel to corpus.sentences
};

SessionCorpus session_corpus(const EventLog& log, const std::string& sentence_key,
                             const std::string& participant_key, TokenLevel level) {
  EventLog by_sentence = sessionize(log, sentence_key);
  SessionCorpus out;
  out.corpus = to_sentences(by_sentence.sessions, level);
  for (const auto& session : by_sentence.sessions) {
    const std::string* participant =
        session.events.empty() ? nullptr : session.events.front().attr(participant_key);
    out.participants.push_back(participant ? *participant : session.case_id);
  }
  return out;
}

// ---- subcommand payloads ----

struct SynthArgs {
  std::string out_file = "synthetic_events.jsonl";
  std::string manifest_file;
  std::size_t participants = 37;
  std::size_t sessions_min = 2, sessions_max = 3;
  std::size_t len_min = 40, len_max = 90;
};

int run_synth(const Global& g, const SynthArgs& a, const std::string& digest) {
  synth::SyntheticSpec spec;
  spec.participants = a.participants;
  spec.sessions_min = a.sessions_min;
  spec.sessions_max = a.sessions_max;
  spec.session_len_min = a.len_min;
  spec.session_len_max = a.len_max;
  spec.seed = g.seed;
  fs::path out = fs::path(g.out_dir) / a.out_file;
  atomic_write(out, artifact_header("synth", g.seed, digest) + synth::generate_jsonl(spec));
  std::cout << "wrote " << out.string() << " (" << spec.participants << " participants)\n";
  if (!a.manifest_file.empty()) {
    fs::path manifest = fs::path(g.out_dir) / a.manifest_file;
    atomic_write(manifest, artifact_header("synth", g.seed, digest) +
                               synth::generate_manifest_csv(spec));
    std::cout << "wrote " << manifest.string() << "\n";
  }
  return 0;
}

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string case_key = "username";
  std::string activity_map;
  std::string secret;
};

int run_ingest(const Global& g, const IngestArgs& a, const std::string& digest) {
  std::vector<Event> merged;
  std::size_t records_total = 0;
  std::vector<ParseIssue> issues;
  for (const auto& input : a.inputs) {
    ParseResult parsed = parse_events_file(input, a.case_key);
    records_total += parsed.records_total;
    for (auto& issue : parsed.issues) issues.push_back(issue);
    for (auto& e : parsed.log.flatten()) merged.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < merged.size(); ++i) merged[i].seq = i;
  EventLog log;
  log.sessions = sessionize(merged, a.case_key);

  TamperReport tamper = verify_hashes(log, a.secret);
  EventLog deduped = dedupe(log);
  ActivityMap map =
      a.activity_map.empty() ? ActivityMap::builtin() : ActivityMap::from_csv(a.activity_map);
  EventLog recoded = recode_activities(deduped, map);

  fs::path dir(g.out_dir);
  atomic_write(dir / "canonical.jsonl",
               artifact_header("ingest", g.seed, digest) + to_jsonl(recoded));
  atomic_write(dir / "canonical.csv",
               artifact_header("ingest", g.seed, digest) + to_csv(recoded));

  ordered_json summary;
  summary["records_total"] = records_total;
  summary["parsed_events"] = log.event_count();
  summary["events_after_dedupe"] = deduped.event_count();
  summary["cases"] = recoded.sessions.size();
  summary["tamper"] = {{"ok", tamper.ok}, {"mismatch", tamper.mismatch},
                       {"missing", tamper.missing}};
  ordered_json issue_list = ordered_json::array();
  for (const auto& issue : issues)
    issue_list.push_back({{"record", issue.record_index}, {"message", issue.message}});
  summary["issues"] = issue_list;
  summary["seed"] = g.seed;
  summary["config"] = digest;
  atomic_write(dir / "ingest_summary.json", summary.dump(2) + "\n");

  std::cout << "ingested " << log.event_count() << " events from " << records_total
            << " records; " << deduped.event_count() << " after dedup; "
            << recoded.sessions.size() << " cases\n";
  if (!issues.empty())
    std::cout << "warning: " << issues.size() << " records skipped (see ingest_summary.json)\n";
  if (tamper.mismatch > 0)
    std::cout << "warning: " << tamper.mismatch << " events failed the hash check\n";
  return 0;
}

struct EntropyArgs {
  std::string input = "out/canonical.jsonl";
  std::vector<std::string> levels = {"command", "category", "activity"};
  std::vector<int> orders = {1, 2, 3, 4, 5};
  int folds = 5;
  std::string smoothing = "katz";
  double add_k = 1.0;
  int unk_cutoff = 2;
  std::string sentence_key = "session";
  std::string english_file;
};

int run_entropy(const Global& g, const EntropyArgs& a, const std::string& digest) {
  ngram::SmoothingConfig smoothing;
  smoothing.method = ngram::smoothing_from_string(a.smoothing);
  smoothing.add_k = a.add_k;
  smoothing.unk_cutoff = a.unk_cutoff;

  struct LevelRun {
    std::string name;
    Corpus corpus;
  };
  std::vector<LevelRun> runs;
  if (!a.input.empty()) {
    EventLog log = load_canonical(a.input);
    for (const auto& level : a.levels) {
      SessionCorpus sc =
          session_corpus(log, a.sentence_key, "username", token_level_from_string(level));
      runs.push_back({level, std::move(sc.corpus)});
    }
  }
  if (!a.english_file.empty())
    runs.push_back({"english", ngram::tokenize_text(read_file(a.english_file))});
  if (runs.empty()) throw InputError("entropy: nothing to evaluate (no input, no text)");

  std::string csv = artifact_header("entropy", g.seed, digest);
  csv += "level,n,fold,entropy_bits,perplexity,oov_rate\n";
  std::vector<svg::Series> series;
  for (const auto& run : runs) {
    auto reports = ngram::kfold_cross_entropy(run.corpus, a.orders, a.folds, g.seed, smoothing);
    svg::Series s;
    s.name = run.name;
    for (const auto& rep : reports) {
      for (std::size_t f = 0; f < rep.fold_entropy.size(); ++f) {
        double ppl = std::exp2(rep.fold_entropy[f]);
        double oov_rate = rep.fold_tokens[f]
                              ? static_cast<double>(rep.fold_oov[f]) /
                                    static_cast<double>(rep.fold_tokens[f])
                              : 0.0;
        csv += run.name + "," + std::to_string(rep.order) + "," + std::to_string(f) + "," +
               fmt(rep.fold_entropy[f]) + "," + fmt(ppl) + "," + fmt(oov_rate) + "\n";
      }
      csv += run.name + "," + std::to_string(rep.order) + ",mean," + fmt(rep.mean) + "," +
             fmt(rep.perplexity) + "," + fmt(rep.oov_rate) + "\n";
      s.points.emplace_back(rep.order, rep.mean);
    }
    series.push_back(std::move(s));
  }
  fs::path dir(g.out_dir);
  atomic_write(dir / "entropy.csv", csv);
  atomic_write(dir / "entropy.svg",
               svg::line_chart("Cross-entropy by n-gram order", "n-gram order",
                               "cross-entropy (bits/token)", series,
                               "devmine entropy seed=" + std::to_string(g.seed) +
                                   " config=" + digest));
  std::cout << "wrote " << (dir / "entropy.csv").string() << " and entropy.svg\n";
  return 0;
}

struct TopicsArgs {
  std::string input = "out/canonical.jsonl";
  std::vector<int> ngrams = {1, 2, 3};
  int k_min = 2, k_max = 10;
  int iterations = 2000, burn_in = 500;
  double alpha = 0.0, beta = 0.1;
  bool per_session = false;
  int top_n = 8;
  int fingerprint_ngram = 1;
  int k_fixed = 0;
  bool heldout = false;
  int folds = 5;
  int foldin_sweeps = 100;
  std::string sentence_key = "session";
  std::string level = "activity";
};

int run_topics(const Global& g, const TopicsArgs& a, const std::string& digest) {
  EventLog log = load_canonical(a.input);
  SessionCorpus sc =
      session_corpus(log, a.sentence_key, "username", token_level_from_string(a.level));

  auto docs_for = [&](int w) {
    std::vector<std::string> dropped;
    lda::DocTermMatrix dtm =
        a.per_session ? lda::build_docs(sc.corpus, w, &dropped)
                      : lda::build_docs_grouped(sc.corpus, sc.participants, w, &dropped);
    if (!dropped.empty())
      std::cout << "warning: " << dropped.size() << " documents shorter than the " << w
                << "-gram window were dropped\n";
    return dtm;
  };

  lda::LdaConfig config;
  config.alpha = a.alpha;
  config.beta = a.beta;
  config.iterations = a.iterations;
  config.burn_in = a.burn_in;
  config.seed = g.seed;

  fs::path dir(g.out_dir);
  std::string selection_csv = artifact_header("topics", g.seed, digest);
  selection_csv += "ngram_order,k,metric,raw,normalized\n";

  std::vector<lda::TopicSelectionReport> reports(a.ngrams.size());
  std::vector<lda::DocTermMatrix> matrices(a.ngrams.size());
  parallel_for(a.ngrams.size(), g.jobs, [&](std::size_t wi) {
    matrices[wi] = docs_for(a.ngrams[wi]);
    std::vector<int> k_range;
    int hi = std::min(a.k_max, static_cast<int>(matrices[wi].n_docs()));
    for (int k = a.k_min; k <= hi; ++k) k_range.push_back(k);
    reports[wi] = lda::select_k(matrices[wi], k_range, config);
  });
  for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi)
    if (static_cast<std::size_t>(a.k_max) > matrices[wi].n_terms())
      std::cout << "warning: k up to " << a.k_max << " exceeds the " << matrices[wi].n_terms()
                << " distinct " << a.ngrams[wi] << "-gram terms\n";

  for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi) {
    const auto& report = reports[wi];
    std::vector<svg::Series> min_series(2), max_series(2);
    min_series[0].name = "cao2009 (minimize)";
    min_series[1].name = "arun2010 (minimize)";
    max_series[0].name = "griffiths2004 (maximize)";
    max_series[1].name = "deveaud2014 (maximize)";
    for (const auto& row : report.rows) {
      auto emit = [&](const char* metric, double raw, double norm) {
        selection_csv += std::to_string(report.ngram_order) + "," + std::to_string(row.k) + "," +
                         metric + "," + fmt(raw) + "," + fmt(norm) + "\n";
      };
      emit("griffiths2004", row.griffiths, row.n_griffiths);
      emit("cao2009", row.cao, row.n_cao);
      emit("arun2010", row.arun, row.n_arun);
      emit("deveaud2014", row.deveaud, row.n_deveaud);
      min_series[0].points.emplace_back(row.k, row.n_cao);
      min_series[1].points.emplace_back(row.k, row.n_arun);
      max_series[0].points.emplace_back(row.k, row.n_griffiths);
      max_series[1].points.emplace_back(row.k, row.n_deveaud);
    }
    selection_csv += std::to_string(report.ngram_order) + "," +
                     std::to_string(report.chosen_k) + ",chosen_k,,\n";
    std::vector<svg::Series> all = {min_series[0], min_series[1], max_series[0], max_series[1]};
    atomic_write(dir / ("topic_selection_w" + std::to_string(report.ngram_order) + ".svg"),
                 svg::line_chart("Topic-count selection (w=" +
                                     std::to_string(report.ngram_order) + ")",
                                 "number of topics k", "normalized metric", all,
                                 "devmine topics seed=" + std::to_string(g.seed) +
                                     " config=" + digest));
  }
  atomic_write(dir / "topic_selection.csv", selection_csv);

  // Final fit for fingerprints at the requested window.
  std::size_t fp_index = 0;
  for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi)
    if (a.ngrams[wi] == a.fingerprint_ngram) fp_index = wi;
  const lda::DocTermMatrix& fp_dtm = matrices[fp_index];
  int k_final = a.k_fixed > 0 ? a.k_fixed : reports[fp_index].chosen_k;
  lda::LdaModel model = lda::fit_lda(fp_dtm, k_final, config);
  lda::FingerprintReport fingerprints =
      lda::extract_fingerprints(model, fp_dtm, static_cast<std::size_t>(a.top_n));

  ordered_json fp_json;
  fp_json["seed"] = g.seed;
  fp_json["config"] = digest;
  fp_json["ngram_order"] = a.ngrams[fp_index];
  fp_json["k"] = k_final;
  fp_json["distinct_patterns"] = fingerprints.distinct_patterns;
  ordered_json fps = ordered_json::array();
  for (const auto& fp : fingerprints.fingerprints) {
    ordered_json one;
    one["topic"] = fp.topic_id;
    ordered_json acts = ordered_json::array();
    for (const auto& [activity, prob] : fp.top_activities)
      acts.push_back({{"activity", activity}, {"probability", prob}});
    one["top_activities"] = acts;
    one["members"] = fp.members;
    fps.push_back(one);
  }
  fp_json["fingerprints"] = fps;
  ordered_json assignment = ordered_json::object();
  for (std::size_t d = 0; d < fp_dtm.n_docs(); ++d)
    assignment[fp_dtm.doc_ids[d]] = fingerprints.assignment[d];
  fp_json["assignment"] = assignment;
  atomic_write(dir / "fingerprints.json", fp_json.dump(2) + "\n");

  for (const auto& fp : fingerprints.fingerprints) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& [activity, prob] : fp.top_activities) {
      labels.push_back(activity);
      values.push_back(prob);
    }
    atomic_write(dir / ("fingerprint_" + std::to_string(fp.topic_id) + ".svg"),
                 svg::bar_chart("Fingerprint " + std::to_string(fp.topic_id) + " (" +
                                    std::to_string(fp.members.size()) + " participants)",
                                labels, values,
                                "devmine topics seed=" + std::to_string(g.seed) +
                                    " config=" + digest));
  }

  if (a.heldout) {
    std::string heldout_csv = artifact_header("topics", g.seed, digest);
    heldout_csv += "ngram_order,k,fold,entropy_bits\n";
    struct Cell {
      int w, k;
      lda::HeldoutReport report;
    };
    std::vector<Cell> cells;
    for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi)
      for (int k = a.k_min; k <= a.k_max; ++k) cells.push_back({a.ngrams[wi], k, {}});
    std::vector<std::size_t> w_of(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi)
        if (a.ngrams[wi] == cells[c].w) w_of[c] = wi;
    parallel_for(cells.size(), g.jobs, [&](std::size_t c) {
      cells[c].report = lda::kfold_heldout_entropy(matrices[w_of[c]], cells[c].k, a.folds,
                                                   config, a.foldin_sweeps);
    });
    std::map<int, svg::Series> curves;
    for (const auto& cell : cells) {
      for (std::size_t f = 0; f < cell.report.fold_bits.size(); ++f)
        heldout_csv += std::to_string(cell.w) + "," + std::to_string(cell.k) + "," +
                       std::to_string(f) + "," + fmt(cell.report.fold_bits[f]) + "\n";
      heldout_csv += std::to_string(cell.w) + "," + std::to_string(cell.k) + ",mean," +
                     fmt(cell.report.mean) + "\n";
      auto& series = curves[cell.w];
      series.name = std::to_string(cell.w) + "-grams";
      series.points.emplace_back(cell.k, cell.report.mean);
    }
    atomic_write(dir / "lda_entropy.csv", heldout_csv);
    std::vector<svg::Series> all;
    for (auto& [w, series] : curves) all.push_back(series);
    atomic_write(dir / "lda_entropy.svg",
                 svg::line_chart("Held-out entropy by topic count", "number of topics k",
                                 "entropy (bits/term)", all,
                                 "devmine topics seed=" + std::to_string(g.seed) +
                                     " config=" + digest));
  }

  std::cout << "chosen k";
  for (std::size_t wi = 0; wi < a.ngrams.size(); ++wi)
    std::cout << " [w=" << a.ngrams[wi] << "] " << reports[wi].chosen_k;
  std::cout << "; fingerprints: " << fingerprints.distinct_patterns << " distinct patterns\n";
  return 0;
}

struct ProcessArgs {
  std::string input = "out/canonical.jsonl";
  std::string group_by;
  std::string fingerprints_file;
  std::string sentence_key = "session";
  std::uint64_t min_edge_freq = 0;
  bool export_nets = true;
};

int run_process(const Global& g, const ProcessArgs& a, const std::string& digest) {
  EventLog log = load_canonical(a.input);

  // Rows are either per case or per value of the grouping attribute; traces
  // inside a row are always the row's sessions.
  struct Row {
    std::string id;
    std::string group;
    std::vector<pm::Trace> traces;
    std::uint64_t interactions = 0;
    pm::QualityMetrics quality;
    std::string dot, json, dfg_csv;
    std::vector<std::string> warnings;
  };
  std::map<std::string, Row> rows;
  EventLog by_sentence = sessionize(log, a.sentence_key);
  for (const auto& session : by_sentence.sessions) {
    if (session.events.empty()) continue;
    const Event& head = session.events.front();
    const std::string* user = head.attr("username");
    std::string case_id = user ? *user : session.case_id;
    std::string key, group;
    if (a.group_by.empty()) {
      key = case_id;
    } else {
      const std::string* attr = head.attr(a.group_by);
      if (!attr)
        throw InputError("process: event lacks grouping attribute '" + a.group_by + "'");
      key = *attr;
      group = *attr;
    }
    Row& row = rows[key];
    row.id = key;
    row.group = group.empty() ? key : group;
    if (a.group_by.empty()) {
      const std::string* grad = head.attr("graduation");
      row.group = grad ? *grad : "";
    }
    pm::Trace trace;
    for (const auto& e : session.events) trace.push_back(e.activity);
    row.traces.push_back(std::move(trace));
    row.interactions += session.events.size();
  }

  std::map<std::string, int> fingerprint_of;
  if (!a.fingerprints_file.empty()) {
    ordered_json fp = ordered_json::parse(read_file(a.fingerprints_file));
    for (auto it = fp.at("assignment").begin(); it != fp.at("assignment").end(); ++it)
      fingerprint_of[it.key()] = it.value().get<int>();
  }

  std::vector<Row*> ordered;
  for (auto& [key, row] : rows) ordered.push_back(&row);
  parallel_for(ordered.size(), g.jobs, [&](std::size_t i) {
    Row& row = *ordered[i];
    auto t0 = std::chrono::steady_clock::now();
    pm::Dfg dfg = pm::discover_dfg(row.traces);
    if (a.min_edge_freq > 1) dfg = pm::filter_edges(dfg, a.min_edge_freq);
    auto conv = pm::dfg_to_petri(dfg);
    row.warnings = conv.warnings;
    row.quality = pm::quality(conv.net, row.traces, row.interactions);
    auto t1 = std::chrono::steady_clock::now();
    row.quality.duration_seconds = std::chrono::duration<double>(t1 - t0).count();
    row.dot = conv.net.to_dot();
    row.json = conv.net.to_json();
    row.dfg_csv = dfg.to_csv();
  });

  fs::path dir(g.out_dir);
  std::string csv = artifact_header("process", g.seed, digest);
  csv += "case,group,fingerprint,interactions,fitness,precision,generalization,simplicity,"
         "average,duration\n";
  for (const Row* row : ordered) {
    auto fp = fingerprint_of.find(row->id);
    csv += csv_escape(row->id) + "," + csv_escape(row->group) + "," +
           (fp == fingerprint_of.end() ? "" : std::to_string(fp->second)) + "," +
           std::to_string(row->interactions) + "," + fmt(row->quality.fitness) + "," +
           fmt(row->quality.precision) + "," + fmt(row->quality.generalization) + "," +
           fmt(row->quality.simplicity) + "," + fmt(row->quality.average) + "," +
           duration_hms(row->quality.duration_seconds) + "\n";
  }
  atomic_write(dir / "process_quality.csv", csv);
  if (a.export_nets) {
    for (const Row* row : ordered) {
      atomic_write(dir / "nets" / (row->id + ".dot"),
                   "// devmine process seed=" + std::to_string(g.seed) + " config=" + digest +
                       "\n" + row->dot);
      ordered_json wrapped;
      wrapped["seed"] = g.seed;
      wrapped["config"] = digest;
      wrapped["net"] = ordered_json::parse(row->json);
      atomic_write(dir / "nets" / (row->id + ".json"), wrapped.dump(2) + "\n");
      atomic_write(dir / "nets" / (row->id + ".dfg.csv"),
                   artifact_header("process", g.seed, digest) + row->dfg_csv);
    }
  }
  std::size_t warned = 0;
  for (const Row* row : ordered) warned += row->warnings.size();
  std::cout << "evaluated " << ordered.size() << " process models";
  if (warned) std::cout << " (" << warned << " dead-end activity warnings)";
  std::cout << "\n";
  return 0;
}

struct StatsArgs {
  std::string metrics_file = "out/process_quality.csv";
  std::vector<std::string> factors = {"simplicity", "interactions"};
  std::string group_col;
  std::vector<std::string> top_cases, bottom_cases;
  std::string score_file;
  std::string score_col = "score";
  int top_count = 0, bottom_count = 0;
  double top_quantile = 0.75, bottom_quantile = 0.25;
  double alpha = 0.05;
};

int run_stats(const Global& g, const StatsArgs& a, const std::string& digest) {
  auto rows = parse_csv(read_file(a.metrics_file));
  if (rows.size() < 2) throw InputError("stats: metrics file has no data rows");
  const auto& header = rows[0];
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw InputError("stats: column '" + name + "' not found in " + a.metrics_file);
  };
  std::size_t case_col = col("case");

  // Group label per case.
  std::map<std::string, std::string> group_of;
  if (!a.top_cases.empty() || !a.bottom_cases.empty()) {
    std::set<std::string> top(a.top_cases.begin(), a.top_cases.end());
    std::set<std::string> bottom(a.bottom_cases.begin(), a.bottom_cases.end());
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const std::string& id = rows[r][case_col];
      group_of[id] = top.count(id) ? "Top" : bottom.count(id) ? "Bottom" : "Others";
    }
  } else if (!a.score_file.empty()) {
    auto score_rows = parse_csv(read_file(a.score_file));
    if (score_rows.size() < 2) throw InputError("stats: score file has no data rows");
    std::size_t sc = 0, idc = 0;
    for (std::size_t i = 0; i < score_rows[0].size(); ++i) {
      if (score_rows[0][i] == a.score_col) sc = i;
      if (score_rows[0][i] == "participant" || score_rows[0][i] == "case") idc = i;
    }
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t r = 1; r < score_rows.size(); ++r)
      scored.emplace_back(std::stod(score_rows[r][sc]), score_rows[r][idc]);
    std::sort(scored.begin(), scored.end());
    std::size_t n = scored.size();
    std::size_t n_bottom = a.bottom_count > 0
                               ? static_cast<std::size_t>(a.bottom_count)
                               : static_cast<std::size_t>(a.bottom_quantile * static_cast<double>(n));
    std::size_t n_top = a.top_count > 0
                            ? static_cast<std::size_t>(a.top_count)
                            : static_cast<std::size_t>((1.0 - a.top_quantile) * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& id = scored[i].second;
      group_of[id] = i < n_bottom ? "Bottom" : (i >= n - n_top ? "Top" : "Others");
    }
  } else {
    std::size_t gc = col(a.group_col.empty() ? "group" : a.group_col);
    for (std::size_t r = 1; r < rows.size(); ++r) group_of[rows[r][case_col]] = rows[r][gc];
  }

  std::string factor_label;
  if (!a.top_cases.empty() || !a.bottom_cases.empty() || !a.score_file.empty())
    factor_label = "Performance";
  else
    factor_label = a.group_col.empty() ? "Group" : a.group_col;
  if (!factor_label.empty()) factor_label[0] = static_cast<char>(std::toupper(factor_label[0]));

  fs::path dir(g.out_dir);
  std::string md = "# Group comparison\n\n";
  md += "Seed " + std::to_string(g.seed) + ", config " + digest + ". Statistically significant if p-value < " +
        fmt(a.alpha, 2) + " (starred).\n";
  std::string sw_csv = artifact_header("stats", g.seed, digest) + "factor,n,W,p,significant\n";
  std::string anova_csv = artifact_header("stats", g.seed, digest) +
                          "factor,df_between,df_within,ss_between,ss_within,ms_between,ms_within,"
                          "f_value,p_value,significant\n";
  std::string tukey_csv = artifact_header("stats", g.seed, digest) +
                          "factor,pair,diff,lower,upper,p_adj,significant\n";

  md += "\n## Normality (Shapiro-Wilk)\n\n| Factor | Statistics (W) | Sig. |\n|---|---|---|\n";
  struct FactorData {
    std::string name;
    std::vector<std::string> group_names;
    std::vector<std::vector<double>> groups;
    std::vector<double> all;
  };
  std::vector<FactorData> factor_data;
  for (const auto& factor : a.factors) {
    std::size_t fc = col(factor);
    FactorData fd;
    fd.name = factor;
    std::map<std::string, std::vector<double>> by_group;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      double value = std::stod(rows[r][fc]);
      fd.all.push_back(value);
      auto it = group_of.find(rows[r][case_col]);
      if (it != group_of.end()) by_group[it->second].push_back(value);
    }
    for (auto& [name, values] : by_group) {
      fd.group_names.push_back(name);
      fd.groups.push_back(std::move(values));
    }
    factor_data.push_back(std::move(fd));
  }

  for (const auto& fd : factor_data) {
    stats::SwResult sw = stats::shapiro_wilk(fd.all);
    bool sig = sw.p < a.alpha;
    md += "| " + fd.name + " | " + fmt(sw.w, 5) + " | " + fmt(sw.p, 5) + (sig ? "*" : "") +
          " |\n";
    sw_csv += fd.name + "," + std::to_string(sw.n) + "," + fmt(sw.w) + "," + fmt(sw.p) + "," +
              (sig ? "1" : "0") + "\n";
  }

  for (const auto& fd : factor_data) {
    md += "\n## One-way ANOVA: " + fd.name + "\n\n";
    if (fd.groups.size() < 2) {
      md += "not enough groups\n";
      continue;
    }
    stats::AnovaResult aov = stats::anova_oneway(fd.groups);
    bool sig = aov.p < a.alpha;
    md += "| Source | Df. | Sum Sq. | Mean Sq. | F-value | p-value |\n|---|---|---|---|---|---|\n";
    md += "| " + factor_label + " | " + std::to_string(aov.df_between) + " | " + fmt(aov.ss_between, 5) +
          " | " + fmt(aov.ms_between, 6) + " | " + fmt(aov.f, 3) + " | " + fmt(aov.p, 5) +
          (sig ? "*" : "") + " |\n";
    md += "| Residuals | " + std::to_string(aov.df_within) + " | " + fmt(aov.ss_within, 5) +
          " | " + fmt(aov.ms_within, 6) + " | | |\n";
    anova_csv += fd.name + "," + std::to_string(aov.df_between) + "," +
                 std::to_string(aov.df_within) + "," + fmt(aov.ss_between) + "," +
                 fmt(aov.ss_within) + "," + fmt(aov.ms_between) + "," + fmt(aov.ms_within) +
                 "," + fmt(aov.f) + "," + fmt(aov.p) + "," + (sig ? "1" : "0") + "\n";

    stats::TukeyResult tukey = stats::tukey_hsd(fd.groups, fd.group_names, a.alpha);
    md += "\n### Post hoc (Tukey HSD)\n\n| Treatments | Diff | Lower | Upper | p-adj |\n"
          "|---|---|---|---|---|\n";
    for (const auto& pair : tukey.pairs) {
      bool pair_sig = pair.p_adj < a.alpha;
      md += "| " + pair.label + " | " + fmt(pair.diff, 5) + " | " + fmt(pair.lower, 5) + " | " +
            fmt(pair.upper, 5) + " | " + fmt(pair.p_adj, 7) + (pair_sig ? "*" : "") + " |\n";
      tukey_csv += fd.name + "," + pair.label + "," + fmt(pair.diff) + "," + fmt(pair.lower) +
                   "," + fmt(pair.upper) + "," + fmt(pair.p_adj) + "," + (pair_sig ? "1" : "0") +
                   "\n";
    }
  }

  atomic_write(dir / "stats.md", md);
  atomic_write(dir / "normality.csv", sw_csv);
  atomic_write(dir / "anova.csv", anova_csv);
  atomic_write(dir / "tukey.csv", tukey_csv);
  std::cout << "wrote stats.md, normality.csv, anova.csv, tukey.csv in " << g.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"devmine: developer fingerprints from IDE/judge event logs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags win");

  Global g;
  app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel worker limit")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")
      ->envname("DEVMINE_OUT")
      ->capture_default_str();

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic event log");
  synth_cmd->add_option("--out", synth_args.out_file, "Output JSON-lines file name")
      ->capture_default_str();
  synth_cmd->add_option("--manifest", synth_args.manifest_file,
                        "Also write participant/profile/score manifest CSV");
  synth_cmd->add_option("--participants", synth_args.participants, "Participant count")
      ->capture_default_str();
  synth_cmd->add_option("--sessions-min", synth_args.sessions_min, "Sessions per participant, min")
      ->capture_default_str();
  synth_cmd->add_option("--sessions-max", synth_args.sessions_max, "Sessions per participant, max")
      ->capture_default_str();
  synth_cmd->add_option("--len-min", synth_args.len_min, "Events per session, min")
      ->capture_default_str();
  synth_cmd->add_option("--len-max", synth_args.len_max, "Events per session, max")
      ->capture_default_str();

  IngestArgs ingest_args;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Parse, verify, dedupe, and recode raw event logs");
  ingest_cmd->add_option("--input", ingest_args.inputs, "Raw event files (JSON array or JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--case-key", ingest_args.case_key, "Case identifier attribute")
      ->capture_default_str();
  ingest_cmd->add_option("--activity-map", ingest_args.activity_map,
                         "Activity map CSV (pattern_field,pattern,activity)")
      ->check(CLI::ExistingFile);
  ingest_cmd->add_option("--secret", ingest_args.secret, "Keyed-hash secret for tamper checks");

  EntropyArgs entropy_args;
  CLI::App* entropy_cmd =
      app.add_subcommand("entropy", "N-gram cross-entropy with k-fold cross-validation");
  entropy_cmd->add_option("--input", entropy_args.input, "Canonical log (JSONL)")
      ->capture_default_str();
  entropy_cmd->add_option("--levels", entropy_args.levels, "Token levels")->capture_default_str();
  entropy_cmd->add_option("--orders", entropy_args.orders, "N-gram orders")->capture_default_str();
  entropy_cmd->add_option("--folds", entropy_args.folds, "Cross-validation folds")
      ->capture_default_str();
  entropy_cmd->add_option("--smoothing", entropy_args.smoothing, "mle | add_k | katz")
      ->capture_default_str();
  entropy_cmd->add_option("--add-k", entropy_args.add_k, "Pseudo-count for add_k")
      ->capture_default_str();
  entropy_cmd->add_option("--unk-cutoff", entropy_args.unk_cutoff,
                          "Training tokens with count < cutoff become <unk>")
      ->capture_default_str();
  entropy_cmd->add_option("--sentence-key", entropy_args.sentence_key,
                          "Attribute that delimits sentences")
      ->capture_default_str();
  entropy_cmd->add_option("--english", entropy_args.english_file,
                          "Plain-text file scored as an extra 'english' series")
      ->check(CLI::ExistingFile);

  TopicsArgs topics_args;
  CLI::App* topics_cmd =
      app.add_subcommand("topics", "LDA topic-count selection and fingerprints");
  topics_cmd->add_option("--input", topics_args.input, "Canonical log (JSONL)")
      ->capture_default_str();
  topics_cmd->add_option("--ngrams", topics_args.ngrams, "N-gram windows for documents")
      ->capture_default_str();
  topics_cmd->add_option("--k-min", topics_args.k_min, "Smallest topic count")
      ->capture_default_str();
  topics_cmd->add_option("--k-max", topics_args.k_max, "Largest topic count")
      ->capture_default_str();
  topics_cmd->add_option("--iterations", topics_args.iterations, "Gibbs sweeps")
      ->capture_default_str();
  topics_cmd->add_option("--burn-in", topics_args.burn_in, "Burn-in sweeps")
      ->capture_default_str();
  topics_cmd->add_option("--alpha", topics_args.alpha, "Document-topic prior (<= 0 means 50/k)")
      ->capture_default_str();
  topics_cmd->add_option("--beta", topics_args.beta, "Topic-term prior")->capture_default_str();
  topics_cmd->add_flag("--per-session", topics_args.per_session,
                       "One document per session instead of per participant");
  topics_cmd->add_option("--top-n", topics_args.top_n, "Activities listed per fingerprint")
      ->capture_default_str();
  topics_cmd->add_option("--fingerprint-ngram", topics_args.fingerprint_ngram,
                         "Window used for the fingerprint fit")
      ->capture_default_str();
  topics_cmd->add_option("--k-fixed", topics_args.k_fixed,
                         "Skip selection for the fingerprint fit and use this k");
  topics_cmd->add_flag("--heldout", topics_args.heldout,
                       "Also compute held-out entropy curves per (w, k)");
  topics_cmd->add_option("--folds", topics_args.folds, "Folds for --heldout")
      ->capture_default_str();
  topics_cmd->add_option("--foldin-sweeps", topics_args.foldin_sweeps,
                         "Gibbs sweeps when folding in held-out documents")
      ->capture_default_str();
  topics_cmd->add_option("--sentence-key", topics_args.sentence_key,
                         "Attribute that delimits sentences")
      ->capture_default_str();
  topics_cmd->add_option("--level", topics_args.level, "Token level for documents")
      ->capture_default_str();

  ProcessArgs process_args;
  CLI::App* process_cmd =
      app.add_subcommand("process", "Discover per-case process models and quality metrics");
  process_cmd->add_option("--input", process_args.input, "Canonical log (JSONL)")
      ->capture_default_str();
  process_cmd->add_option("--group-by", process_args.group_by,
                          "Build one model per value of this attribute instead of per case");
  process_cmd->add_option("--fingerprints", process_args.fingerprints_file,
                          "fingerprints.json for the fingerprint column")
      ->check(CLI::ExistingFile);
  process_cmd->add_option("--sentence-key", process_args.sentence_key,
                          "Attribute that delimits traces")
      ->capture_default_str();
  process_cmd->add_option("--min-edge-freq", process_args.min_edge_freq,
                          "Drop DFG edges rarer than this (default keeps all)");
  process_cmd->add_flag("!--no-nets", process_args.export_nets, "Skip DOT/JSON net export");

  StatsArgs stats_args;
  CLI::App* stats_cmd =
      app.add_subcommand("stats", "Normality, ANOVA, and Tukey HSD over per-case metrics");
  stats_cmd->add_option("--metrics", stats_args.metrics_file, "process_quality.csv path")
      ->capture_default_str();
  stats_cmd->add_option("--factors", stats_args.factors, "Metric columns to compare")
      ->capture_default_str();
  stats_cmd->add_option("--group-col", stats_args.group_col,
                        "Group by this column of the metrics CSV (default 'group')");
  stats_cmd->add_option("--top", stats_args.top_cases, "Explicit Top group case ids");
  stats_cmd->add_option("--bottom", stats_args.bottom_cases, "Explicit Bottom group case ids");
  stats_cmd->add_option("--score-file", stats_args.score_file,
                        "CSV with participant scores for quantile grouping")
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--score-col", stats_args.score_col, "Score column name")
      ->capture_default_str();
  stats_cmd->add_option("--top-count", stats_args.top_count, "Top group size (overrides quantile)");
  stats_cmd->add_option("--bottom-count", stats_args.bottom_count,
                        "Bottom group size (overrides quantile)");
  stats_cmd->add_option("--top-quantile", stats_args.top_quantile, "Top group quantile")
      ->capture_default_str();
  stats_cmd->add_option("--bottom-quantile", stats_args.bottom_quantile, "Bottom group quantile")
      ->capture_default_str();
  stats_cmd->add_option("--alpha", stats_args.alpha, "Significance threshold")
      ->capture_default_str();

  CLI::App* report_cmd = app.add_subcommand(
      "report", "Run ingest, entropy, topics, process, and stats in sequence");
  std::vector<std::string> report_inputs;
  std::string report_english;
  report_cmd->add_option("--input", report_inputs, "Raw event files")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--english", report_english, "Plain-text file for the entropy series")
      ->check(CLI::ExistingFile);
  int report_iterations = 2000, report_burn_in = 500;
  report_cmd->add_option("--iterations", report_iterations, "Gibbs sweeps")->capture_default_str();
  report_cmd->add_option("--burn-in", report_burn_in, "Burn-in sweeps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(g, synth_args, config_digest(*synth_cmd));
    if (ingest_cmd->parsed()) return run_ingest(g, ingest_args, config_digest(*ingest_cmd));
    if (entropy_cmd->parsed()) return run_entropy(g, entropy_args, config_digest(*entropy_cmd));
    if (topics_cmd->parsed()) return run_topics(g, topics_args, config_digest(*topics_cmd));
    if (process_cmd->parsed()) return run_process(g, process_args, config_digest(*process_cmd));
    if (stats_cmd->parsed()) return run_stats(g, stats_args, config_digest(*stats_cmd));
    if (report_cmd->parsed()) {
      std::string digest = config_digest(*report_cmd);
      IngestArgs ia;
      ia.inputs = report_inputs;
      run_ingest(g, ia, digest);
      std::string canonical = (fs::path(g.out_dir) / "canonical.jsonl").string();
      EntropyArgs ea;
      ea.input = canonical;
      ea.english_file = report_english;
      run_entropy(g, ea, digest);
      TopicsArgs ta;
      ta.input = canonical;
      ta.iterations = report_iterations;
      ta.burn_in = report_burn_in;
      run_topics(g, ta, digest);
      ProcessArgs pa;
      pa.input = canonical;
      pa.fingerprints_file = (fs::path(g.out_dir) / "fingerprints.json").string();
      run_process(g, pa, digest);
      StatsArgs sa;
      sa.metrics_file = (fs::path(g.out_dir) / "process_quality.csv").string();
      run_stats(g, sa, digest);
      return 0;
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
