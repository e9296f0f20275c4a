#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here is deliberately brute-force: it must stay independent of the library
// code paths it checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "devmine/eventlog.hpp"
#include "devmine/util.hpp"

namespace testutil {

// Raw event record in the collector's format, with a convenience builder.
inline std::string make_record(const std::map<std::string, std::string>& overrides,
                               bool with_hash = false, const std::string& hash = "") {
  std::map<std::string, std::string> fields = {
      {"session", "c51973e3-562a-4b65-b6df-49f4c37792e1"},
      {"timestamp_begin", "2020-09-18T09:00:06.054Z"},
      {"username", "87788"},
      {"graduation", "IGE"},
      {"projectname", "ContestSolutions"},
      {"filename", "P4.py"},
      {"extension", "py"},
      {"categoryName", "NavBarToolbar"},
      {"commandName", "Run"},
      {"platform", "JetBrains s.r.o. / PyCharmCore"},
      {"platform_branch", "PyCharm"},
      {"platform_version", "2020.2.1"},
      {"java", "11.0.8+10-b944.31"},
      {"os", "Mac OS X 10.15.6"},
      {"os_arch", "x86_64"},
      {"country", "Portugal"},
      {"city", "Lisbon"},
  };
  for (const auto& [k, v] : overrides) fields[k] = v;
  std::ostringstream os;
  os << "{";
  bool head = true;
  for (const auto& [k, v] : fields) {
    if (!head) os << ",";
    os << "\"" << k << "\":\"" << v << "\"";
    head = false;
  }
  if (with_hash) os << ",\"hash\":\"" << hash << "\"";
  os << "}";
  return os.str();
}

// Random corpus over a small alphabet.
inline devmine::Corpus random_corpus(devmine::Rng& rng, std::size_t sentences,
                                     std::size_t max_len, std::size_t alphabet) {
  devmine::Corpus corpus;
  for (std::size_t s = 0; s < sentences; ++s) {
    devmine::Sentence sent;
    std::size_t len = 1 + rng.uniform(max_len);
    for (std::size_t i = 0; i < len; ++i) {
      std::string tok(1, static_cast<char>('A' + rng.uniform(alphabet)));
      corpus.vocab.intern(tok);
      sent.push_back(tok);
    }
    corpus.sentences.push_back(std::move(sent));
    corpus.sentence_ids.push_back("s" + std::to_string(s));
  }
  return corpus;
}

// Sessions from a two-state Markov chain with strong self-transitions.
inline devmine::Corpus markov2_corpus(devmine::Rng& rng, std::size_t sentences, std::size_t len,
                                      double stay = 0.9) {
  devmine::Corpus corpus;
  corpus.vocab.intern("A");
  corpus.vocab.intern("B");
  for (std::size_t s = 0; s < sentences; ++s) {
    devmine::Sentence sent;
    int state = static_cast<int>(rng.uniform(2));
    for (std::size_t i = 0; i < len; ++i) {
      sent.push_back(state == 0 ? "A" : "B");
      if (rng.real() > stay) state = 1 - state;
    }
    corpus.sentences.push_back(std::move(sent));
    corpus.sentence_ids.push_back("m" + std::to_string(s));
  }
  return corpus;
}

// Spearman rank correlation, average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(rx.size());
  my /= static_cast<double>(ry.size());
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

}  // namespace testutil
