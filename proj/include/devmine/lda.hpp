#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "devmine/eventlog.hpp"

namespace devmine::lda {

// Documents as bags of sliding-window n-grams.
struct DocTermMatrix {
  int ngram_order = 1;
  std::vector<std::string> terms;     // index -> term
  std::vector<std::string> doc_ids;   // index -> document id
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> rows;  // (term, count)

  std::size_t n_docs() const { return rows.size(); }
  std::size_t n_terms() const { return terms.size(); }
  std::size_t doc_total(std::size_t d) const;
  std::size_t total_tokens() const;

  DocTermMatrix subset(const std::vector<std::size_t>& doc_indices) const;  // shared term space
};

// One document per sentence. Sentences shorter than the window are dropped;
// dropped ids are reported through `dropped` when given.
DocTermMatrix build_docs(const Corpus& corpus, int ngram_order,
                         std::vector<std::string>* dropped = nullptr);

// One document per group (e.g. per participant): n-grams are windowed within
// each sentence, then pooled into the sentence's group.
DocTermMatrix build_docs_grouped(const Corpus& corpus, const std::vector<std::string>& group_ids,
                                 int ngram_order, std::vector<std::string>* dropped = nullptr);

struct LdaConfig {
  double alpha = 0.0;  // <= 0 selects 50/k
  double beta = 0.1;
  int iterations = 2000;
  int burn_in = 500;
  int sample_lag = 10;  // likelihood samples every this many post-burn-in sweeps
  std::uint64_t seed = 1;
};

// Collapsed-Gibbs LDA fit. phi rows (topics) and theta rows (documents) are
// posterior means averaged over post-burn-in sweeps.
struct LdaModel {
  int k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  int burn_in = 0;
  std::vector<std::vector<double>> phi;    // k x V
  std::vector<std::vector<double>> theta;  // D x k
  double log_likelihood = 0.0;             // harmonic-mean estimate of log P(data | k)
};

LdaModel fit_lda(const DocTermMatrix& dtm, int k, const LdaConfig& config);

// ---- topic-count selection metrics ----

// Mean pairwise cosine similarity of topic rows; minimized.
double metric_cao2009(const std::vector<std::vector<double>>& phi);
// Symmetric KL divergence between the normalized singular-value spectrum of
// phi and the document-length-weighted topic mass; minimized.
double metric_arun2010(const std::vector<std::vector<double>>& phi,
                       const std::vector<std::vector<double>>& theta,
                       const std::vector<double>& doc_lengths);
// Mean pairwise Jensen-Shannon divergence of topic rows; maximized.
double metric_deveaud2014(const std::vector<std::vector<double>>& phi);

struct SelectionRow {
  int k = 0;
  double griffiths = 0.0;  // maximize
  double cao = 0.0;        // minimize
  double arun = 0.0;       // minimize
  double deveaud = 0.0;    // maximize
  // min-max normalized columns in [0,1], for plotting and the chosen-k rule
  double n_griffiths = 0.0, n_cao = 0.0, n_arun = 0.0, n_deveaud = 0.0;
};

struct TopicSelectionReport {
  int ngram_order = 1;
  std::vector<SelectionRow> rows;
  int chosen_k = 0;
};

// Fits one model per candidate k (same seed for each) and evaluates all four
// metrics. The chosen k is the largest candidate where any minimize-metric
// normalizes to <= 0.05 or any maximize-metric normalizes to >= 0.95.
TopicSelectionReport select_k(const DocTermMatrix& dtm, const std::vector<int>& k_range,
                              const LdaConfig& config);

// ---- held-out evaluation ----

// Bits per term of test documents under a fitted model: theta re-estimated
// by fold-in Gibbs sweeps with phi frozen. Terms unseen in training receive
// their beta-smoothed mass.
double heldout_entropy(const LdaModel& model, const DocTermMatrix& test, int foldin_sweeps = 100,
                       std::uint64_t seed = 1);

struct HeldoutReport {
  int k = 0;
  int ngram_order = 1;
  std::vector<double> fold_bits;
  double mean = 0.0;
};

// 5-fold protocol over documents; the term space is the full matrix's.
HeldoutReport kfold_heldout_entropy(const DocTermMatrix& full, int k, int folds,
                                    const LdaConfig& config, int foldin_sweeps = 100);

// ---- fingerprints ----

struct Fingerprint {
  int topic_id = 0;  // 1-indexed
  std::vector<std::pair<std::string, double>> top_activities;  // probability descending
  std::vector<std::string> members;                            // document ids
};

struct FingerprintReport {
  std::vector<Fingerprint> fingerprints;        // nonempty topics only
  std::vector<int> assignment;                  // per document, 1-indexed topic
  std::size_t distinct_patterns = 0;
};

// Assigns each document to its argmax-theta topic (ties: lowest topic id).
FingerprintReport extract_fingerprints(const LdaModel& model, const DocTermMatrix& dtm,
                                       std::size_t top_n = 8);

}  // namespace devmine::lda
