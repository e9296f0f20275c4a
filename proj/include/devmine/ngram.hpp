#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "devmine/eventlog.hpp"

namespace devmine::ngram {

enum class Smoothing { mle, add_k, katz_good_turing };

Smoothing smoothing_from_string(std::string_view s);
std::string to_string(Smoothing s);

struct SmoothingConfig {
  Smoothing method = Smoothing::katz_good_turing;
  double add_k = 1.0;   // pseudo-count for add-k smoothing
  int gt_max = 5;       // counts above this are not discounted (Katz cutoff)
  int unk_cutoff = 2;   // training tokens with count < cutoff become <unk>; <= 1 disables
  bool append_end = true;  // model the sentence-end sentinel
};

// Back-off n-gram model over an activity vocabulary extended with the
// sentinels <s>, </s>, <unk>. Immutable after training; scoring is pure.
class NGramModel {
 public:
  static constexpr std::uint32_t kBos = 0;
  static constexpr std::uint32_t kEos = 1;
  static constexpr std::uint32_t kUnk = 2;

  int order() const { return order_; }
  const SmoothingConfig& config() const { return config_; }
  std::size_t vocab_size() const { return tokens_.size(); }
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::uint32_t token_id(std::string_view tok) const;  // OOV maps to kUnk

  // Ids the model can predict: the full vocabulary minus <s> (and minus
  // </s> when sentence ends are not modeled).
  const std::vector<std::uint32_t>& predictable() const { return predictable_; }

  // P(token | context); context longer than order-1 is truncated on the left.
  double prob(std::span<const std::uint32_t> context, std::uint32_t token) const;

  struct Score {
    double log2_prob = 0.0;  // -inf when not finite
    std::size_t tokens = 0;  // scored events, sentence-end included
    std::size_t oov = 0;
    bool finite = true;
  };

  Score score(const Sentence& sentence) const;

  // Contexts of a given length that were observed in training, as token-id
  // vectors. Exposed for normalization sweeps.
  std::vector<std::vector<std::uint32_t>> observed_contexts(int context_len) const;

 private:
  friend NGramModel train(const Corpus&, int, const SmoothingConfig&);

  struct ContextTable {
    std::uint64_t total = 0;
    std::unordered_map<std::uint32_t, std::uint64_t> counts;
    std::unordered_map<std::uint32_t, double> probs;  // Katz: discounted P for seen tokens
    double backoff = 0.0;                             // Katz: weight for unseen tokens
  };

  using ContextKey = std::string;  // packed little-endian token ids
  static ContextKey pack(std::span<const std::uint32_t> ctx);

  const ContextTable* table(std::span<const std::uint32_t> ctx, int order) const;

  int order_ = 1;
  SmoothingConfig config_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::uint32_t> predictable_;
  std::vector<double> unigram_;                                   // P(token), by id
  std::vector<std::unordered_map<ContextKey, ContextTable>> by_order_;  // [o-1] for order o
};

// Trains a model of the given order. Sentences are padded with order-1
// leading <s> and one trailing </s>; training tokens under the unk cutoff
// collapse into <unk>. Throws std::invalid_argument for order < 1 and
// InputError for an empty corpus.
NGramModel train(const Corpus& corpus, int order, const SmoothingConfig& config = {});

// Bits per token over the corpus: -(sum of sentence log2 probabilities) /
// (token count including </s>, excluding <s>). Throws NumericalError when a
// zero-probability event is hit.
double cross_entropy(const NGramModel& model, const Corpus& corpus);

struct EntropyReport {
  int order = 0;
  std::vector<double> fold_entropy;  // bits/token per fold
  std::vector<std::size_t> fold_tokens;
  std::vector<std::size_t> fold_oov;
  double mean = 0.0;
  double stddev = 0.0;      // sample standard deviation over folds
  double perplexity = 0.0;  // 2^mean
  std::size_t tokens = 0;
  std::size_t oov = 0;
  double oov_rate = 0.0;
};

struct FoldAssignment {
  std::vector<std::vector<std::size_t>> test_indices;  // per fold
};

// Deterministic shuffled partition into near-equal folds.
FoldAssignment make_folds(std::size_t n, int folds, std::uint64_t seed);

// The cross-validation protocol: for each order, train on 80% and score the
// held-out 20%, five times by default.
std::vector<EntropyReport> kfold_cross_entropy(const Corpus& corpus,
                                               const std::vector<int>& orders, int folds,
                                               std::uint64_t seed,
                                               const SmoothingConfig& config = {});

// Plain-text helper for natural-language comparisons: lowercases, strips
// punctuation, splits sentences on ./!/? and tokens on whitespace.
Corpus tokenize_text(std::string_view text);

}  // namespace devmine::ngram
