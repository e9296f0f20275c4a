#include "devmine/lda.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "devmine/ngram.hpp"
#include "devmine/util.hpp"

namespace devmine::lda {

namespace {
constexpr double kTiny = 1e-12;
}

std::size_t DocTermMatrix::doc_total(std::size_t d) const {
  std::size_t n = 0;
  for (const auto& [term, count] : rows.at(d)) n += count;
  return n;
}

std::size_t DocTermMatrix::total_tokens() const {
  std::size_t n = 0;
  for (std::size_t d = 0; d < rows.size(); ++d) n += doc_total(d);
  return n;
}

DocTermMatrix DocTermMatrix::subset(const std::vector<std::size_t>& doc_indices) const {
  DocTermMatrix out;
  out.ngram_order = ngram_order;
  out.terms = terms;
  for (std::size_t d : doc_indices) {
    out.doc_ids.push_back(doc_ids.at(d));
    out.rows.push_back(rows.at(d));
  }
  return out;
}

namespace {

void add_sentence_ngrams(const Sentence& sentence, int w, Vocabulary& term_vocab,
                         std::map<std::uint32_t, std::uint32_t>& counts) {
  if (static_cast<int>(sentence.size()) < w) return;
  for (std::size_t i = 0; i + static_cast<std::size_t>(w) <= sentence.size(); ++i) {
    std::string term = sentence[i];
    for (int j = 1; j < w; ++j) {
      term += '_';
      term += sentence[i + static_cast<std::size_t>(j)];
    }
    ++counts[term_vocab.intern(term)];
  }
}

DocTermMatrix finish_matrix(int w, Vocabulary& term_vocab,
                            std::vector<std::pair<std::string, std::map<std::uint32_t, std::uint32_t>>>& docs,
                            std::vector<std::string>* dropped) {
  DocTermMatrix dtm;
  dtm.ngram_order = w;
  dtm.terms = term_vocab.tokens();
  for (auto& [id, counts] : docs) {
    if (counts.empty()) {
      if (dropped) dropped->push_back(id);
      continue;
    }
    dtm.doc_ids.push_back(id);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> row(counts.begin(), counts.end());
    dtm.rows.push_back(std::move(row));
  }
  if (dtm.rows.empty()) throw InputError("build_docs: every document is shorter than the n-gram window");
  return dtm;
}

}  // namespace

DocTermMatrix build_docs(const Corpus& corpus, int ngram_order, std::vector<std::string>* dropped) {
  if (ngram_order < 1) throw std::invalid_argument("build_docs: ngram order must be >= 1");
  if (corpus.sentences.empty()) throw InputError("build_docs: empty corpus");
  Vocabulary term_vocab;
  std::vector<std::pair<std::string, std::map<std::uint32_t, std::uint32_t>>> docs;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    std::string id = i < corpus.sentence_ids.size() ? corpus.sentence_ids[i]
                                                    : "doc" + std::to_string(i + 1);
    docs.emplace_back(id, std::map<std::uint32_t, std::uint32_t>{});
    add_sentence_ngrams(corpus.sentences[i], ngram_order, term_vocab, docs.back().second);
  }
  return finish_matrix(ngram_order, term_vocab, docs, dropped);
}

DocTermMatrix build_docs_grouped(const Corpus& corpus, const std::vector<std::string>& group_ids,
                                 int ngram_order, std::vector<std::string>* dropped) {
  if (ngram_order < 1) throw std::invalid_argument("build_docs: ngram order must be >= 1");
  if (corpus.sentences.size() != group_ids.size())
    throw std::invalid_argument("build_docs_grouped: group_ids size mismatch");
  if (corpus.sentences.empty()) throw InputError("build_docs: empty corpus");
  Vocabulary term_vocab;
  std::vector<std::pair<std::string, std::map<std::uint32_t, std::uint32_t>>> docs;
  std::map<std::string, std::size_t> doc_of_group;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    auto [it, fresh] = doc_of_group.try_emplace(group_ids[i], docs.size());
    if (fresh) docs.emplace_back(group_ids[i], std::map<std::uint32_t, std::uint32_t>{});
    add_sentence_ngrams(corpus.sentences[i], ngram_order, term_vocab, docs[it->second].second);
  }
  return finish_matrix(ngram_order, term_vocab, docs, dropped);
}

namespace {

struct GibbsState {
  int k = 0;
  std::size_t n_terms = 0;
  double alpha = 0.0, beta = 0.0;
  std::vector<std::vector<std::uint32_t>> doc_tokens;  // term id per token instance
  std::vector<std::vector<int>> z;                     // topic per token instance
  std::vector<std::vector<std::uint32_t>> n_dk;        // D x k
  std::vector<std::vector<std::uint32_t>> n_kw;        // k x V
  std::vector<std::uint32_t> n_k;                      // k
};

GibbsState init_state(const DocTermMatrix& dtm, int k, double alpha, double beta, Rng& rng) {
  GibbsState st;
  st.k = k;
  st.n_terms = dtm.n_terms();
  st.alpha = alpha;
  st.beta = beta;
  st.doc_tokens.resize(dtm.n_docs());
  st.z.resize(dtm.n_docs());
  st.n_dk.assign(dtm.n_docs(), std::vector<std::uint32_t>(static_cast<std::size_t>(k), 0));
  st.n_kw.assign(static_cast<std::size_t>(k), std::vector<std::uint32_t>(st.n_terms, 0));
  st.n_k.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t d = 0; d < dtm.n_docs(); ++d) {
    for (const auto& [term, count] : dtm.rows[d])
      for (std::uint32_t c = 0; c < count; ++c) st.doc_tokens[d].push_back(term);
    st.z[d].resize(st.doc_tokens[d].size());
    for (std::size_t i = 0; i < st.doc_tokens[d].size(); ++i) {
      int topic = static_cast<int>(rng.uniform(static_cast<std::size_t>(k)));
      st.z[d][i] = topic;
      ++st.n_dk[d][static_cast<std::size_t>(topic)];
      ++st.n_kw[static_cast<std::size_t>(topic)][st.doc_tokens[d][i]];
      ++st.n_k[static_cast<std::size_t>(topic)];
    }
  }
  return st;
}

void sweep(GibbsState& st, Rng& rng, std::vector<double>& weights) {
  const double vbeta = static_cast<double>(st.n_terms) * st.beta;
  for (std::size_t d = 0; d < st.doc_tokens.size(); ++d) {
    for (std::size_t i = 0; i < st.doc_tokens[d].size(); ++i) {
      const std::uint32_t w = st.doc_tokens[d][i];
      const int old_topic = st.z[d][i];
      --st.n_dk[d][static_cast<std::size_t>(old_topic)];
      --st.n_kw[static_cast<std::size_t>(old_topic)][w];
      --st.n_k[static_cast<std::size_t>(old_topic)];
      for (int t = 0; t < st.k; ++t) {
        const std::size_t ts = static_cast<std::size_t>(t);
        weights[ts] = (st.n_dk[d][ts] + st.alpha) * (st.n_kw[ts][w] + st.beta) /
                      (st.n_k[ts] + vbeta);
      }
      const int topic = static_cast<int>(rng.discrete(weights));
      st.z[d][i] = topic;
      ++st.n_dk[d][static_cast<std::size_t>(topic)];
      ++st.n_kw[static_cast<std::size_t>(topic)][w];
      ++st.n_k[static_cast<std::size_t>(topic)];
    }
  }
}

// log P(data | z) for the Griffiths-style harmonic mean estimate:
// sum over topics of lgamma(V b) - lgamma(n_k + V b)
//   + sum over words of lgamma(n_kw + b) - lgamma(b),
// where the zero-count words drop out of the word sum.
double complete_log_likelihood(const GibbsState& st) {
  const double vbeta = static_cast<double>(st.n_terms) * st.beta;
  const double lg_beta = std::lgamma(st.beta);
  double ll = 0.0;
  for (int t = 0; t < st.k; ++t) {
    const std::size_t ts = static_cast<std::size_t>(t);
    ll += std::lgamma(vbeta) - std::lgamma(st.n_k[ts] + vbeta);
    for (std::size_t w = 0; w < st.n_terms; ++w)
      if (st.n_kw[ts][w] > 0) ll += std::lgamma(st.n_kw[ts][w] + st.beta) - lg_beta;
  }
  return ll;
}

}  // namespace

LdaModel fit_lda(const DocTermMatrix& dtm, int k, const LdaConfig& config) {
  if (k < 2) throw std::invalid_argument("fit_lda: k must be >= 2");
  if (config.iterations <= config.burn_in)
    throw std::invalid_argument("fit_lda: iterations must exceed burn_in");
  double alpha = config.alpha > 0.0 ? config.alpha : 50.0 / static_cast<double>(k);
  double beta = config.beta;
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("fit_lda: hyperparameters must be positive");

  Rng rng(config.seed);
  GibbsState st = init_state(dtm, k, alpha, beta, rng);
  std::vector<double> weights(static_cast<std::size_t>(k), 0.0);

  const std::size_t D = dtm.n_docs();
  const std::size_t V = dtm.n_terms();
  std::vector<std::vector<double>> phi_acc(static_cast<std::size_t>(k),
                                           std::vector<double>(V, 0.0));
  std::vector<std::vector<double>> theta_acc(D, std::vector<double>(static_cast<std::size_t>(k), 0.0));
  std::size_t samples = 0;
  std::vector<double> ll_samples;

  const double vbeta = static_cast<double>(V) * beta;
  for (int iter = 0; iter < config.iterations; ++iter) {
    sweep(st, rng, weights);
    if (iter < config.burn_in) continue;
    ++samples;
    for (int t = 0; t < st.k; ++t) {
      const std::size_t ts = static_cast<std::size_t>(t);
      const double denom = st.n_k[ts] + vbeta;
      for (std::size_t w = 0; w < V; ++w) phi_acc[ts][w] += (st.n_kw[ts][w] + beta) / denom;
    }
    for (std::size_t d = 0; d < D; ++d) {
      const double denom = static_cast<double>(st.doc_tokens[d].size()) +
                           static_cast<double>(k) * alpha;
      for (int t = 0; t < st.k; ++t)
        theta_acc[d][static_cast<std::size_t>(t)] +=
            (st.n_dk[d][static_cast<std::size_t>(t)] + alpha) / denom;
    }
    int post = iter - config.burn_in;
    if (config.sample_lag > 0 && post % config.sample_lag == 0)
      ll_samples.push_back(complete_log_likelihood(st));
  }

  LdaModel model;
  model.k = k;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = config.seed;
  model.iterations = config.iterations;
  model.burn_in = config.burn_in;
  model.phi = std::move(phi_acc);
  model.theta = std::move(theta_acc);
  for (auto& row : model.phi) {
    double sum = 0.0;
    for (double& v : row) {
      v /= static_cast<double>(samples);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  for (auto& row : model.theta) {
    double sum = 0.0;
    for (double& v : row) {
      v /= static_cast<double>(samples);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }

  // Harmonic mean of the likelihood samples, in log space:
  // log(S) - logsumexp(-ll_s).
  if (!ll_samples.empty()) {
    double max_neg = -ll_samples[0];
    for (double ll : ll_samples) max_neg = std::max(max_neg, -ll);
    double acc = 0.0;
    for (double ll : ll_samples) acc += std::exp(-ll - max_neg);
    model.log_likelihood =
        std::log(static_cast<double>(ll_samples.size())) - (max_neg + std::log(acc));
  }
  return model;
}

double metric_cao2009(const std::vector<std::vector<double>>& phi) {
  const std::size_t k = phi.size();
  if (k < 2) throw std::invalid_argument("metric_cao2009: need at least 2 topics");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (std::size_t w = 0; w < phi[i].size(); ++w) {
        dot += phi[i][w] * phi[j][w];
        ni += phi[i][w] * phi[i][w];
        nj += phi[j][w] * phi[j][w];
      }
      sum += dot / std::sqrt(std::max(ni * nj, kTiny));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double metric_arun2010(const std::vector<std::vector<double>>& phi,
                       const std::vector<std::vector<double>>& theta,
                       const std::vector<double>& doc_lengths) {
  const std::size_t k = phi.size();
  if (k < 2) throw std::invalid_argument("metric_arun2010: need at least 2 topics");
  if (theta.size() != doc_lengths.size())
    throw std::invalid_argument("metric_arun2010: theta/doc_lengths size mismatch");

  // Singular values of phi from the eigenvalues of phi * phi^T (k x k).
  Eigen::MatrixXd gram(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double dot = 0.0;
      for (std::size_t w = 0; w < phi[i].size(); ++w) dot += phi[i][w] * phi[j][w];
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dot;
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dot;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  std::vector<double> sv;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    sv.push_back(std::sqrt(std::max(solver.eigenvalues()[i], 0.0)));
  std::sort(sv.begin(), sv.end(), std::greater<double>());

  std::vector<double> mass(k, 0.0);
  for (std::size_t d = 0; d < theta.size(); ++d)
    for (std::size_t t = 0; t < k; ++t) mass[t] += doc_lengths[d] * theta[d][t];
  std::sort(mass.begin(), mass.end(), std::greater<double>());

  auto normalize = [](std::vector<double>& v) {
    double sum = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x = std::max(x / std::max(sum, kTiny), kTiny);
  };
  normalize(sv);
  normalize(mass);
  double kl = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    kl += sv[i] * std::log(sv[i] / mass[i]);
    kl += mass[i] * std::log(mass[i] / sv[i]);
  }
  return kl;
}

double metric_deveaud2014(const std::vector<std::vector<double>>& phi) {
  const std::size_t k = phi.size();
  if (k < 2) throw std::invalid_argument("metric_deveaud2014: need at least 2 topics");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double jsd = 0.0;
      for (std::size_t w = 0; w < phi[i].size(); ++w) {
        double p = std::max(phi[i][w], kTiny);
        double q = std::max(phi[j][w], kTiny);
        double m = 0.5 * (p + q);
        jsd += 0.5 * p * std::log(p / m) + 0.5 * q * std::log(q / m);
      }
      sum += jsd;
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

TopicSelectionReport select_k(const DocTermMatrix& dtm, const std::vector<int>& k_range,
                              const LdaConfig& config) {
  if (k_range.empty()) throw std::invalid_argument("select_k: empty k range");
  for (int k : k_range)
    if (k < 2 || static_cast<std::size_t>(k) > dtm.n_docs())
      throw std::invalid_argument("select_k: k must lie in [2, number of documents]");

  std::vector<double> lengths;
  for (std::size_t d = 0; d < dtm.n_docs(); ++d)
    lengths.push_back(static_cast<double>(dtm.doc_total(d)));

  TopicSelectionReport report;
  report.ngram_order = dtm.ngram_order;
  for (int k : k_range) {
    LdaModel model = fit_lda(dtm, k, config);
    SelectionRow row;
    row.k = k;
    row.griffiths = model.log_likelihood;
    row.cao = metric_cao2009(model.phi);
    row.arun = metric_arun2010(model.phi, model.theta, lengths);
    row.deveaud = metric_deveaud2014(model.phi);
    report.rows.push_back(row);
  }

  auto normalize = [&](auto get, auto set) {
    double lo = get(report.rows.front()), hi = lo;
    for (const auto& r : report.rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    for (auto& r : report.rows) set(r, hi > lo ? (get(r) - lo) / (hi - lo) : 0.0);
  };
  normalize([](const SelectionRow& r) { return r.griffiths; },
            [](SelectionRow& r, double v) { r.n_griffiths = v; });
  normalize([](const SelectionRow& r) { return r.cao; },
            [](SelectionRow& r, double v) { r.n_cao = v; });
  normalize([](const SelectionRow& r) { return r.arun; },
            [](SelectionRow& r, double v) { r.n_arun = v; });
  normalize([](const SelectionRow& r) { return r.deveaud; },
            [](SelectionRow& r, double v) { r.n_deveaud = v; });

  report.chosen_k = report.rows.front().k;
  for (const auto& r : report.rows) {
    bool close = r.n_cao <= 0.05 || r.n_arun <= 0.05 || r.n_griffiths >= 0.95 ||
                 r.n_deveaud >= 0.95;
    if (report.rows.size() == 1) close = true;
    if (close && r.k >= report.chosen_k) report.chosen_k = r.k;
  }
  return report;
}

double heldout_entropy(const LdaModel& model, const DocTermMatrix& test, int foldin_sweeps,
                       std::uint64_t seed) {
  if (model.phi.empty() || test.n_terms() != model.phi[0].size())
    throw std::invalid_argument("heldout_entropy: test matrix term space differs from model");
  const int k = model.k;
  Rng rng(seed);
  double log2_sum = 0.0;
  std::size_t tokens = 0;
  std::vector<double> weights(static_cast<std::size_t>(k), 0.0);
  for (std::size_t d = 0; d < test.n_docs(); ++d) {
    std::vector<std::uint32_t> doc;
    for (const auto& [term, count] : test.rows[d])
      for (std::uint32_t c = 0; c < count; ++c) doc.push_back(term);
    if (doc.empty()) continue;
    std::vector<int> z(doc.size());
    std::vector<std::uint32_t> n_dk(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < doc.size(); ++i) {
      int topic = static_cast<int>(rng.uniform(static_cast<std::size_t>(k)));
      z[i] = topic;
      ++n_dk[static_cast<std::size_t>(topic)];
    }
    for (int sweep_i = 0; sweep_i < foldin_sweeps; ++sweep_i) {
      for (std::size_t i = 0; i < doc.size(); ++i) {
        --n_dk[static_cast<std::size_t>(z[i])];
        for (int t = 0; t < k; ++t)
          weights[static_cast<std::size_t>(t)] =
              (n_dk[static_cast<std::size_t>(t)] + model.alpha) *
              model.phi[static_cast<std::size_t>(t)][doc[i]];
        z[i] = static_cast<int>(rng.discrete(weights));
        ++n_dk[static_cast<std::size_t>(z[i])];
      }
    }
    std::vector<double> theta(static_cast<std::size_t>(k), 0.0);
    const double denom =
        static_cast<double>(doc.size()) + static_cast<double>(k) * model.alpha;
    for (int t = 0; t < k; ++t)
      theta[static_cast<std::size_t>(t)] =
          (n_dk[static_cast<std::size_t>(t)] + model.alpha) / denom;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      double p = 0.0;
      for (int t = 0; t < k; ++t)
        p += theta[static_cast<std::size_t>(t)] * model.phi[static_cast<std::size_t>(t)][doc[i]];
      log2_sum += std::log2(std::max(p, kTiny));
      ++tokens;
    }
  }
  if (tokens == 0) throw InputError("heldout_entropy: no test tokens");
  return -log2_sum / static_cast<double>(tokens);
}

HeldoutReport kfold_heldout_entropy(const DocTermMatrix& full, int k, int folds,
                                    const LdaConfig& config, int foldin_sweeps) {
  auto fa = ngram::make_folds(full.n_docs(), folds, config.seed);
  HeldoutReport report;
  report.k = k;
  report.ngram_order = full.ngram_order;
  for (int f = 0; f < folds; ++f) {
    std::vector<bool> in_test(full.n_docs(), false);
    for (std::size_t i : fa.test_indices[static_cast<std::size_t>(f)]) in_test[i] = true;
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < full.n_docs(); ++i)
      (in_test[i] ? test_idx : train_idx).push_back(i);
    DocTermMatrix train = full.subset(train_idx);
    DocTermMatrix test = full.subset(test_idx);
    LdaConfig fold_config = config;
    fold_config.seed = config.seed + static_cast<std::uint64_t>(f) * 7919;
    LdaModel model = fit_lda(train, k, fold_config);
    report.fold_bits.push_back(
        heldout_entropy(model, test, foldin_sweeps, fold_config.seed ^ 0x5bd1e995));
  }
  double sum = 0.0;
  for (double b : report.fold_bits) sum += b;
  report.mean = sum / static_cast<double>(report.fold_bits.size());
  return report;
}

FingerprintReport extract_fingerprints(const LdaModel& model, const DocTermMatrix& dtm,
                                       std::size_t top_n) {
  if (model.theta.size() != dtm.n_docs())
    throw std::invalid_argument("extract_fingerprints: model/docs size mismatch");
  FingerprintReport report;
  report.assignment.resize(dtm.n_docs(), 0);
  std::map<int, std::vector<std::string>> members;
  for (std::size_t d = 0; d < dtm.n_docs(); ++d) {
    const auto& row = model.theta[d];
    std::size_t best = 0;
    for (std::size_t t = 1; t < row.size(); ++t)
      if (row[t] > row[best]) best = t;  // strict: ties keep the lowest id
    int topic = static_cast<int>(best) + 1;
    report.assignment[d] = topic;
    members[topic].push_back(dtm.doc_ids[d]);
  }
  for (const auto& [topic, ids] : members) {
    Fingerprint fp;
    fp.topic_id = topic;
    fp.members = ids;
    const auto& phi_row = model.phi.at(static_cast<std::size_t>(topic - 1));
    std::vector<std::size_t> order(phi_row.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return phi_row[a] > phi_row[b]; });
    for (std::size_t i = 0; i < std::min(top_n, order.size()); ++i)
      fp.top_activities.emplace_back(dtm.terms[order[i]], phi_row[order[i]]);
    report.fingerprints.push_back(std::move(fp));
  }
  report.distinct_patterns = report.fingerprints.size();
  return report;
}

}  // namespace devmine::lda
