#include "devmine/ngram.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

#include "devmine/util.hpp"

namespace devmine::ngram {

namespace {
constexpr double kDiscountEps = 1e-3;  // epsilon discount when Good-Turing stats are unusable
constexpr double kTiny = 1e-12;
}  // namespace

Smoothing smoothing_from_string(std::string_view s) {
  if (s == "mle") return Smoothing::mle;
  if (s == "add_k" || s == "addk") return Smoothing::add_k;
  if (s == "katz" || s == "katz_good_turing") return Smoothing::katz_good_turing;
  throw std::invalid_argument("unknown smoothing method: " + std::string(s));
}

std::string to_string(Smoothing s) {
  switch (s) {
    case Smoothing::mle: return "mle";
    case Smoothing::add_k: return "add_k";
    case Smoothing::katz_good_turing: return "katz";
  }
  return "?";
}

NGramModel::ContextKey NGramModel::pack(std::span<const std::uint32_t> ctx) {
  ContextKey key;
  key.resize(ctx.size() * 4);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    std::uint32_t v = ctx[i];
    key[4 * i] = static_cast<char>(v & 0xff);
    key[4 * i + 1] = static_cast<char>((v >> 8) & 0xff);
    key[4 * i + 2] = static_cast<char>((v >> 16) & 0xff);
    key[4 * i + 3] = static_cast<char>((v >> 24) & 0xff);
  }
  return key;
}

std::uint32_t NGramModel::token_id(std::string_view tok) const {
  auto it = index_.find(std::string(tok));
  return it == index_.end() ? kUnk : it->second;
}

const NGramModel::ContextTable* NGramModel::table(std::span<const std::uint32_t> ctx,
                                                  int order) const {
  const auto& m = by_order_.at(static_cast<std::size_t>(order - 1));
  auto it = m.find(pack(ctx));
  return it == m.end() ? nullptr : &it->second;
}

double NGramModel::prob(std::span<const std::uint32_t> context, std::uint32_t token) const {
  // Truncate to the model's context length.
  std::size_t max_ctx = static_cast<std::size_t>(order_ - 1);
  if (context.size() > max_ctx) context = context.subspan(context.size() - max_ctx);

  if (config_.method == Smoothing::add_k) {
    double k = config_.add_k;
    double denom_add = k * static_cast<double>(predictable_.size());
    const ContextTable* t = table(context, static_cast<int>(context.size()) + 1);
    double count = 0.0, total = 0.0;
    if (t) {
      total = static_cast<double>(t->total);
      auto it = t->counts.find(token);
      if (it != t->counts.end()) count = static_cast<double>(it->second);
    }
    return (count + k) / (total + denom_add);
  }

  if (context.empty()) {
    return token < unigram_.size() ? unigram_[token] : 0.0;
  }

  const ContextTable* t = table(context, static_cast<int>(context.size()) + 1);
  auto shorter = context.subspan(1);
  if (config_.method == Smoothing::mle) {
    if (!t || t->total == 0) return 0.0;
    auto it = t->counts.find(token);
    if (it == t->counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(t->total);
  }

  // Katz back-off.
  if (!t || t->total == 0) return prob(shorter, token);
  auto it = t->probs.find(token);
  if (it != t->probs.end()) return it->second;
  return t->backoff * prob(shorter, token);
}

NGramModel::Score NGramModel::score(const Sentence& sentence) const {
  Score s;
  std::vector<std::uint32_t> ids;
  ids.reserve(sentence.size() + static_cast<std::size_t>(order_));
  for (int i = 0; i + 1 < order_; ++i) ids.push_back(kBos);
  for (const auto& tok : sentence) {
    std::uint32_t id = token_id(tok);
    if (id == kUnk && tok != tokens_[kUnk]) ++s.oov;
    ids.push_back(id);
  }
  if (config_.append_end) ids.push_back(kEos);

  std::size_t start = static_cast<std::size_t>(order_ - 1);
  for (std::size_t i = start; i < ids.size(); ++i) {
    std::span<const std::uint32_t> ctx(ids.data() + (i - start), start);
    double p = prob(ctx, ids[i]);
    ++s.tokens;
    if (!(p > 0.0)) {
      s.finite = false;
      s.log2_prob = -std::numeric_limits<double>::infinity();
      continue;
    }
    if (s.finite) s.log2_prob += std::log2(p);
  }
  return s;
}

std::vector<std::vector<std::uint32_t>> NGramModel::observed_contexts(int context_len) const {
  std::vector<std::vector<std::uint32_t>> out;
  if (context_len < 0 || context_len >= order_) return out;
  for (const auto& [key, tbl] : by_order_.at(static_cast<std::size_t>(context_len))) {
    std::vector<std::uint32_t> ctx(key.size() / 4);
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      ctx[i] = static_cast<std::uint8_t>(key[4 * i]) |
               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 1])) << 8) |
               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 2])) << 16) |
               (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 3])) << 24);
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

namespace {

// Good-Turing discount ratios d_r for r = 1..gt_max, from the count-of-count
// histogram of one order. Falls back to an epsilon discount where the
// histogram violates the Good-Turing assumptions.
std::vector<double> katz_discounts(const std::map<std::uint64_t, std::uint64_t>& count_of_counts,
                                   int gt_max) {
  auto n = [&](std::uint64_t r) -> double {
    auto it = count_of_counts.find(r);
    return it == count_of_counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  double k1 = static_cast<double>(gt_max + 1);
  double rnorm = n(1) > 0.0 ? k1 * n(static_cast<std::uint64_t>(gt_max) + 1) / n(1) : 1.0;
  std::vector<double> d(static_cast<std::size_t>(gt_max) + 1, 1.0);
  for (int r = 1; r <= gt_max; ++r) {
    double dr = 1.0 - kDiscountEps;
    if (n(r) > 0.0 && rnorm < 1.0) {
      double rstar = (r + 1) * n(static_cast<std::uint64_t>(r) + 1) / n(r);
      dr = (rstar / r - rnorm) / (1.0 - rnorm);
      if (!(dr > 0.0) || dr >= 1.0) dr = 1.0 - kDiscountEps;
    }
    d[static_cast<std::size_t>(r)] = dr;
  }
  return d;
}

double discount_for(const std::vector<double>& d, std::uint64_t r) {
  if (r == 0) return 0.0;
  if (r >= d.size()) return 1.0;
  return d[static_cast<std::size_t>(r)];
}

}  // namespace

NGramModel train(const Corpus& corpus, int order, const SmoothingConfig& config) {
  if (order < 1) throw std::invalid_argument("n-gram order must be >= 1");
  if (corpus.sentences.empty()) throw InputError("cannot train on an empty corpus");

  NGramModel m;
  m.order_ = order;
  m.config_ = config;
  m.tokens_ = {"<s>", "</s>", "<unk>"};
  for (std::size_t i = 0; i < m.tokens_.size(); ++i) m.index_[m.tokens_[i]] = static_cast<std::uint32_t>(i);

  // Pass 1: raw token frequencies to decide the <unk> mapping.
  std::map<std::string, std::uint64_t> raw_freq;
  for (const auto& sent : corpus.sentences)
    for (const auto& tok : sent) ++raw_freq[tok];
  for (const auto& [tok, freq] : raw_freq) {
    if (config.unk_cutoff > 1 && freq < static_cast<std::uint64_t>(config.unk_cutoff)) continue;
    std::uint32_t id = static_cast<std::uint32_t>(m.tokens_.size());
    m.tokens_.push_back(tok);
    m.index_[tok] = id;
  }

  for (std::uint32_t id = 0; id < m.tokens_.size(); ++id) {
    if (id == NGramModel::kBos) continue;
    if (id == NGramModel::kEos && !config.append_end) continue;
    m.predictable_.push_back(id);
  }

  // Pass 2: count n-grams of every order over padded sentences.
  m.by_order_.resize(static_cast<std::size_t>(order));
  std::vector<std::map<std::uint64_t, std::uint64_t>> count_of_counts(
      static_cast<std::size_t>(order));
  for (const auto& sent : corpus.sentences) {
    std::vector<std::uint32_t> ids;
    ids.reserve(sent.size() + static_cast<std::size_t>(order));
    for (int i = 0; i + 1 < order; ++i) ids.push_back(NGramModel::kBos);
    for (const auto& tok : sent) ids.push_back(m.token_id(tok));
    if (config.append_end) ids.push_back(NGramModel::kEos);
    std::size_t pad = static_cast<std::size_t>(order - 1);
    for (std::size_t i = pad; i < ids.size(); ++i) {
      for (int o = 1; o <= order; ++o) {
        std::span<const std::uint32_t> ctx(ids.data() + (i - static_cast<std::size_t>(o - 1)),
                                           static_cast<std::size_t>(o - 1));
        auto& tbl = m.by_order_[static_cast<std::size_t>(o - 1)][NGramModel::pack(ctx)];
        ++tbl.total;
        ++tbl.counts[ids[i]];
      }
    }
  }
  for (int o = 1; o <= order; ++o)
    for (const auto& [key, tbl] : m.by_order_[static_cast<std::size_t>(o - 1)])
      for (const auto& [tok, cnt] : tbl.counts) ++count_of_counts[static_cast<std::size_t>(o - 1)][cnt];

  // Unigram distribution.
  const auto& uni = m.by_order_[0].at(NGramModel::pack({}));
  double n_total = static_cast<double>(uni.total);
  m.unigram_.assign(m.tokens_.size(), 0.0);
  if (config.method == Smoothing::katz_good_turing) {
    auto d1 = katz_discounts(count_of_counts[0], config.gt_max);
    double seen_mass = 0.0;
    for (const auto& [tok, cnt] : uni.counts) {
      double p = discount_for(d1, cnt) * static_cast<double>(cnt) / n_total;
      m.unigram_[tok] = p;
      seen_mass += p;
    }
    std::vector<std::uint32_t> zeros;
    for (std::uint32_t id : m.predictable_)
      if (uni.counts.find(id) == uni.counts.end()) zeros.push_back(id);
    double leftover = 1.0 - seen_mass;
    if (!zeros.empty()) {
      if (leftover <= kTiny) {
        // No Good-Turing mass was freed; reserve an epsilon so every token
        // keeps a nonzero probability.
        double scale = (1.0 - kDiscountEps) / seen_mass;
        for (std::uint32_t id : m.predictable_) m.unigram_[id] *= scale;
        leftover = kDiscountEps;
      }
      for (std::uint32_t id : zeros) m.unigram_[id] = leftover / static_cast<double>(zeros.size());
    } else if (seen_mass > 0.0) {
      for (std::uint32_t id : m.predictable_) m.unigram_[id] /= seen_mass;
    }
  } else {
    for (const auto& [tok, cnt] : uni.counts)
      m.unigram_[tok] = static_cast<double>(cnt) / n_total;
  }

  // Katz tables for higher orders, bottom-up so back-off sums are available.
  if (config.method == Smoothing::katz_good_turing) {
    for (int o = 2; o <= order; ++o) {
      auto d = katz_discounts(count_of_counts[static_cast<std::size_t>(o - 1)], config.gt_max);
      for (auto& [key, tbl] : m.by_order_[static_cast<std::size_t>(o - 1)]) {
        std::vector<std::uint32_t> ctx(key.size() / 4);
        for (std::size_t i = 0; i < ctx.size(); ++i) {
          ctx[i] = static_cast<std::uint8_t>(key[4 * i]) |
                   (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 1])) << 8) |
                   (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 2])) << 16) |
                   (static_cast<std::uint32_t>(static_cast<std::uint8_t>(key[4 * i + 3])) << 24);
        }
        std::span<const std::uint32_t> shorter(ctx.data() + 1, ctx.size() - 1);
        double seen_mass = 0.0;
        double seen_backoff_mass = 0.0;
        for (const auto& [tok, cnt] : tbl.counts) {
          double p = discount_for(d, cnt) * static_cast<double>(cnt) /
                     static_cast<double>(tbl.total);
          tbl.probs[tok] = p;
          seen_mass += p;
          seen_backoff_mass += m.prob(shorter, tok);
        }
        double leftover = 1.0 - seen_mass;
        double missing = 1.0 - seen_backoff_mass;
        if (missing > kTiny) {
          if (leftover <= kTiny) {
            // Good-Turing freed no mass for this context; reserve an epsilon
            // so unseen continuations stay reachable through the back-off.
            double scale = (1.0 - kDiscountEps) / seen_mass;
            for (auto& [tok, p] : tbl.probs) p *= scale;
            leftover = kDiscountEps;
          }
          tbl.backoff = leftover / missing;
        } else {
          // Every predictable token was seen after this context: fold the
          // leftover back in.
          tbl.backoff = 0.0;
          if (seen_mass > 0.0)
            for (auto& [tok, p] : tbl.probs) p /= seen_mass;
        }
      }
    }
  }
  return m;
}

double cross_entropy(const NGramModel& model, const Corpus& corpus) {
  if (corpus.sentences.empty()) throw InputError("cross_entropy: empty corpus");
  double log2_sum = 0.0;
  std::size_t tokens = 0;
  for (const auto& sent : corpus.sentences) {
    auto s = model.score(sent);
    if (!s.finite)
      throw NumericalError(
          "zero-probability event while scoring; enable smoothing (add_k or katz)");
    log2_sum += s.log2_prob;
    tokens += s.tokens;
  }
  if (tokens == 0) throw NumericalError("cross_entropy: no tokens to score");
  double h = -log2_sum / static_cast<double>(tokens);
  return h < 0.0 && h > -1e-12 ? 0.0 : h;
}

FoldAssignment make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n)
    throw std::invalid_argument("folds must be in [2, corpus size]");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  FoldAssignment fa;
  fa.test_indices.resize(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::size_t lo = n * static_cast<std::size_t>(f) / static_cast<std::size_t>(folds);
    std::size_t hi = n * static_cast<std::size_t>(f + 1) / static_cast<std::size_t>(folds);
    for (std::size_t i = lo; i < hi; ++i)
      fa.test_indices[static_cast<std::size_t>(f)].push_back(idx[i]);
    std::sort(fa.test_indices[static_cast<std::size_t>(f)].begin(),
              fa.test_indices[static_cast<std::size_t>(f)].end());
  }
  return fa;
}

std::vector<EntropyReport> kfold_cross_entropy(const Corpus& corpus,
                                               const std::vector<int>& orders, int folds,
                                               std::uint64_t seed,
                                               const SmoothingConfig& config) {
  auto fa = make_folds(corpus.sentences.size(), folds, seed);
  std::vector<EntropyReport> reports;
  for (int order : orders) {
    EntropyReport rep;
    rep.order = order;
    for (int f = 0; f < folds; ++f) {
      const auto& test_idx = fa.test_indices[static_cast<std::size_t>(f)];
      std::vector<bool> in_test(corpus.sentences.size(), false);
      for (std::size_t i : test_idx) in_test[i] = true;
      Corpus train_c, test_c;
      for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
        (in_test[i] ? test_c : train_c).sentences.push_back(corpus.sentences[i]);
      }
      NGramModel model = train(train_c, order, config);
      double log2_sum = 0.0;
      std::size_t tokens = 0, oov = 0;
      for (const auto& sent : test_c.sentences) {
        auto s = model.score(sent);
        if (!s.finite)
          throw NumericalError(
              "zero-probability event in held-out scoring; enable smoothing (add_k or katz)");
        log2_sum += s.log2_prob;
        tokens += s.tokens;
        oov += s.oov;
      }
      rep.fold_entropy.push_back(tokens ? -log2_sum / static_cast<double>(tokens) : 0.0);
      rep.fold_tokens.push_back(tokens);
      rep.fold_oov.push_back(oov);
      rep.tokens += tokens;
      rep.oov += oov;
    }
    double sum = 0.0;
    for (double h : rep.fold_entropy) sum += h;
    rep.mean = sum / static_cast<double>(rep.fold_entropy.size());
    double sq = 0.0;
    for (double h : rep.fold_entropy) sq += (h - rep.mean) * (h - rep.mean);
    rep.stddev = rep.fold_entropy.size() > 1
                     ? std::sqrt(sq / static_cast<double>(rep.fold_entropy.size() - 1))
                     : 0.0;
    rep.perplexity = std::exp2(rep.mean);
    rep.oov_rate = rep.tokens ? static_cast<double>(rep.oov) / static_cast<double>(rep.tokens) : 0.0;
    reports.push_back(std::move(rep));
  }
  return reports;
}

Corpus tokenize_text(std::string_view text) {
  Corpus corpus;
  Sentence current;
  std::string word;
  auto flush_word = [&] {
    if (!word.empty()) {
      corpus.vocab.intern(word);
      current.push_back(word);
      word.clear();
    }
  };
  auto flush_sentence = [&] {
    flush_word();
    if (!current.empty()) {
      corpus.sentences.push_back(current);
      corpus.sentence_ids.push_back("s" + std::to_string(corpus.sentences.size()));
      current.clear();
    }
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (c == '.' || c == '!' || c == '?') {
      flush_sentence();
    } else if (std::isalnum(c) || raw == '\'') {
      word += static_cast<char>(std::tolower(c));
    } else {
      flush_word();
    }
  }
  flush_sentence();
  return corpus;
}

}  // namespace devmine::ngram
