#include "devmine/procmine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace devmine::pm {

std::string Dfg::to_csv() const {
  std::string out = "from,to,frequency\n";
  for (const auto& [edge, freq] : edge_freq) {
    out += csv_escape(edge.first);
    out += ',';
    out += csv_escape(edge.second);
    out += ',';
    out += std::to_string(freq);
    out += '\n';
  }
  return out;
}

Dfg discover_dfg(const std::vector<Trace>& traces) {
  if (traces.empty()) throw InputError("discover_dfg: no traces");
  Dfg dfg;
  for (const auto& trace : traces) {
    if (trace.empty()) continue;
    ++dfg.trace_count;
    ++dfg.start_freq[trace.front()];
    ++dfg.end_freq[trace.back()];
    for (std::size_t i = 0; i < trace.size(); ++i) {
      ++dfg.activity_freq[trace[i]];
      if (i + 1 < trace.size()) ++dfg.edge_freq[{trace[i], trace[i + 1]}];
    }
  }
  if (dfg.trace_count == 0) throw InputError("discover_dfg: all traces empty");
  return dfg;
}

Dfg discover_dfg(const std::vector<Session>& sessions) {
  std::vector<Trace> traces;
  traces.reserve(sessions.size());
  for (const auto& s : sessions) {
    Trace t;
    t.reserve(s.events.size());
    for (const auto& e : s.events) t.push_back(e.activity);
    traces.push_back(std::move(t));
  }
  return discover_dfg(traces);
}

Dfg filter_edges(const Dfg& dfg, std::uint64_t min_edge_freq) {
  if (min_edge_freq <= 1) return dfg;
  Dfg out = dfg;
  out.edge_freq.clear();
  for (const auto& [edge, freq] : dfg.edge_freq)
    if (freq >= min_edge_freq) out.edge_freq.emplace(edge, freq);
  std::set<std::string> keep;
  for (const auto& [edge, freq] : out.edge_freq) {
    keep.insert(edge.first);
    keep.insert(edge.second);
  }
  for (const auto& [a, f] : dfg.start_freq) keep.insert(a);
  for (const auto& [a, f] : dfg.end_freq) keep.insert(a);
  std::map<std::string, std::uint64_t> acts;
  for (const auto& [a, f] : dfg.activity_freq)
    if (keep.count(a)) acts.emplace(a, f);
  out.activity_freq = std::move(acts);
  return out;
}

std::size_t PetriNet::visible_count() const {
  std::size_t n = 0;
  for (const auto& t : transitions)
    if (!t.silent()) ++n;
  return n;
}

std::size_t PetriNet::arc_count() const {
  std::size_t n = 0;
  for (const auto& t : transitions) n += t.in.size() + t.out.size();
  return n;
}

std::vector<std::string> PetriNet::validate() const {
  std::vector<std::string> problems;
  auto check_marking = [&](const std::map<std::uint32_t, std::uint32_t>& m, const char* which) {
    if (m.size() != 1 || m.begin()->second != 1)
      problems.push_back(std::string(which) + " marking is not a single place with one token");
    else if (m.begin()->first >= places.size())
      problems.push_back(std::string(which) + " marking references an unknown place");
  };
  check_marking(initial_marking, "initial");
  check_marking(final_marking, "final");
  for (const auto& t : transitions) {
    for (std::uint32_t p : t.in)
      if (p >= places.size()) problems.push_back("transition " + t.name + " has a dangling input");
    for (std::uint32_t p : t.out)
      if (p >= places.size()) problems.push_back("transition " + t.name + " has a dangling output");
  }
  // Undirected connectivity from the source place.
  if (!initial_marking.empty() && initial_marking.begin()->first < places.size()) {
    std::vector<std::vector<std::size_t>> place_to_trans(places.size());
    for (std::size_t ti = 0; ti < transitions.size(); ++ti) {
      for (std::uint32_t p : transitions[ti].in) place_to_trans[p].push_back(ti);
      for (std::uint32_t p : transitions[ti].out) place_to_trans[p].push_back(ti);
    }
    std::vector<bool> seen_p(places.size(), false), seen_t(transitions.size(), false);
    std::deque<std::uint32_t> queue{initial_marking.begin()->first};
    seen_p[queue.front()] = true;
    while (!queue.empty()) {
      std::uint32_t p = queue.front();
      queue.pop_front();
      for (std::size_t ti : place_to_trans[p]) {
        if (seen_t[ti]) continue;
        seen_t[ti] = true;
        for (std::uint32_t q : transitions[ti].in)
          if (!seen_p[q]) {
            seen_p[q] = true;
            queue.push_back(q);
          }
        for (std::uint32_t q : transitions[ti].out)
          if (!seen_p[q]) {
            seen_p[q] = true;
            queue.push_back(q);
          }
      }
    }
    for (std::size_t ti = 0; ti < transitions.size(); ++ti)
      if (!seen_t[ti])
        problems.push_back("transition " + transitions[ti].name +
                           " is not connected to the source place");
  }
  return problems;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string PetriNet::to_dot() const {
  std::ostringstream os;
  os << "digraph petri {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < places.size(); ++i) {
    std::string extra;
    if (initial_marking.count(static_cast<std::uint32_t>(i))) extra = ", penwidth=2";
    if (final_marking.count(static_cast<std::uint32_t>(i))) extra = ", peripheries=2";
    os << "  p" << i << " [shape=circle, label=\"" << dot_escape(places[i]) << "\"" << extra
       << "];\n";
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& t = transitions[i];
    if (t.silent())
      os << "  t" << i << " [shape=box, style=filled, fillcolor=black, label=\"\", width=0.15];\n";
    else
      os << "  t" << i << " [shape=box, label=\"" << dot_escape(t.label) << "\"];\n";
  }
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    for (std::uint32_t p : transitions[i].in) os << "  p" << p << " -> t" << i << ";\n";
    for (std::uint32_t p : transitions[i].out) os << "  t" << i << " -> p" << p << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string PetriNet::to_json() const {
  nlohmann::ordered_json j;
  j["places"] = places;
  auto trans = nlohmann::ordered_json::array();
  for (const auto& t : transitions) {
    nlohmann::ordered_json tj;
    tj["name"] = t.name;
    tj["label"] = t.label;
    tj["silent"] = t.silent();
    tj["in"] = t.in;
    tj["out"] = t.out;
    trans.push_back(tj);
  }
  j["transitions"] = trans;
  auto marking = [&](const std::map<std::uint32_t, std::uint32_t>& m) {
    nlohmann::ordered_json mj = nlohmann::ordered_json::object();
    for (const auto& [p, n] : m) mj[places.at(p)] = n;
    return mj;
  };
  j["initial_marking"] = marking(initial_marking);
  j["final_marking"] = marking(final_marking);
  return j.dump(2) + "\n";
}

ConversionResult dfg_to_petri(const Dfg& dfg) {
  if (dfg.activity_freq.empty()) throw InputError("dfg_to_petri: empty DFG");
  ConversionResult result;
  PetriNet& net = result.net;

  std::map<std::string, std::uint32_t> place_of;
  net.places.push_back("source");
  for (const auto& [act, freq] : dfg.activity_freq) {
    place_of[act] = static_cast<std::uint32_t>(net.places.size());
    net.places.push_back("after " + act);
  }
  std::uint32_t sink = static_cast<std::uint32_t>(net.places.size());
  net.places.push_back("sink");

  for (const auto& [act, freq] : dfg.start_freq) {
    auto it = place_of.find(act);
    if (it == place_of.end()) continue;
    PetriNet::Transition t;
    t.name = "start " + act;
    t.label = act;
    t.in = {0};
    t.out = {it->second};
    net.transitions.push_back(std::move(t));
  }
  for (const auto& [edge, freq] : dfg.edge_freq) {
    auto from = place_of.find(edge.first);
    auto to = place_of.find(edge.second);
    if (from == place_of.end() || to == place_of.end()) continue;
    PetriNet::Transition t;
    t.name = edge.first + " -> " + edge.second;
    t.label = edge.second;
    t.in = {from->second};
    t.out = {to->second};
    net.transitions.push_back(std::move(t));
  }
  for (const auto& [act, freq] : dfg.end_freq) {
    auto it = place_of.find(act);
    if (it == place_of.end()) continue;
    PetriNet::Transition t;
    t.name = "end " + act;
    t.in = {it->second};
    t.out = {sink};
    net.transitions.push_back(std::move(t));
  }
  net.initial_marking[0] = 1;
  net.final_marking[sink] = 1;

  // Activities with no DFG path to any end activity can never hand their
  // token to the sink; replay will penalize them.
  std::set<std::string> reaches_end;
  for (const auto& [act, freq] : dfg.end_freq) reaches_end.insert(act);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [edge, freq] : dfg.edge_freq) {
      if (reaches_end.count(edge.second) && !reaches_end.count(edge.first)) {
        reaches_end.insert(edge.first);
        changed = true;
      }
    }
  }
  for (const auto& [act, freq] : dfg.activity_freq)
    if (!reaches_end.count(act))
      result.warnings.push_back("activity '" + act + "' has no path to an end activity");
  return result;
}

// ---- replay ----

namespace {

using Marking = std::map<std::uint32_t, std::uint32_t>;

bool enabled(const PetriNet::Transition& t, const Marking& m) {
  for (std::uint32_t p : t.in) {
    auto it = m.find(p);
    if (it == m.end() || it->second == 0) return false;
  }
  return true;
}

void fire(const PetriNet::Transition& t, Marking& m) {
  for (std::uint32_t p : t.in) {
    auto it = m.find(p);
    if (--it->second == 0) m.erase(it);
  }
  for (std::uint32_t p : t.out) ++m[p];
}

std::string marking_key(const Marking& m) {
  std::string key;
  for (const auto& [p, n] : m) {
    key += std::to_string(p);
    key += ':';
    key += std::to_string(n);
    key += ';';
  }
  return key;
}

// Shortest sequence of silent firings from m that enables `target`
// (or reaches `goal` when target is null), bounded by max_hops.
std::optional<std::vector<std::size_t>> silent_path(const PetriNet& net, const Marking& m,
                                                    const PetriNet::Transition* target,
                                                    const Marking* goal, int max_hops) {
  struct Node {
    Marking marking;
    std::vector<std::size_t> fired;
  };
  auto satisfied = [&](const Marking& mk) {
    if (target) return enabled(*target, mk);
    return mk == *goal;
  };
  if (satisfied(m)) return std::vector<std::size_t>{};
  std::deque<Node> queue{{m, {}}};
  std::unordered_set<std::string> seen{marking_key(m)};
  while (!queue.empty()) {
    Node node = std::move(queue.front());
    queue.pop_front();
    if (static_cast<int>(node.fired.size()) >= max_hops) continue;
    for (std::size_t ti = 0; ti < net.transitions.size(); ++ti) {
      const auto& t = net.transitions[ti];
      if (!t.silent() || !enabled(t, node.marking)) continue;
      Node next = node;
      fire(t, next.marking);
      next.fired.push_back(ti);
      if (satisfied(next.marking)) return next.fired;
      if (seen.insert(marking_key(next.marking)).second) queue.push_back(std::move(next));
    }
  }
  return std::nullopt;
}

struct ReplayState {
  Marking marking;
  TraceReplay counters;
};

// Fires t, inserting missing tokens first; updates the token ledger.
void force_fire(const PetriNet::Transition& t, ReplayState& st) {
  for (std::uint32_t p : t.in) {
    auto it = st.marking.find(p);
    if (it == st.marking.end() || it->second == 0) {
      st.counters.missing += 1.0;
      ++st.marking[p];
    }
  }
  st.counters.consumed += static_cast<double>(t.in.size());
  st.counters.produced += static_cast<double>(t.out.size());
  fire(t, st.marking);
}

}  // namespace

ReplayResult replay(const PetriNet& net, const std::vector<Trace>& traces, int max_silent_hops) {
  ReplayResult result;
  result.exec_count.assign(net.transitions.size(), 0);

  std::unordered_map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t ti = 0; ti < net.transitions.size(); ++ti)
    if (!net.transitions[ti].silent()) by_label[net.transitions[ti].label].push_back(ti);

  for (const auto& trace : traces) {
    ReplayState st;
    st.marking = net.initial_marking;
    for (const auto& [p, n] : net.initial_marking) st.counters.produced += n;

    for (const auto& label : trace) {
      auto it = by_label.find(label);
      if (it == by_label.end()) {
        // Foreign activity: its token demand is missing by definition.
        st.counters.missing += 1.0;
        st.counters.consumed += 1.0;
        continue;
      }
      // Prefer an already-enabled transition with this label; otherwise try
      // to enable one through silent hops; otherwise force the first.
      std::size_t chosen = it->second.front();
      bool found = false;
      for (std::size_t ti : it->second) {
        if (enabled(net.transitions[ti], st.marking)) {
          chosen = ti;
          found = true;
          break;
        }
      }
      if (!found) {
        for (std::size_t ti : it->second) {
          auto path = silent_path(net, st.marking, &net.transitions[ti], nullptr, max_silent_hops);
          if (path) {
            for (std::size_t si : *path) {
              force_fire(net.transitions[si], st);
              ++result.exec_count[si];
            }
            chosen = ti;
            found = true;
            break;
          }
        }
      }
      force_fire(net.transitions[chosen], st);
      ++result.exec_count[chosen];
    }

    // Head for the final marking through silent transitions, then settle the
    // ledger: final tokens are consumed, leftovers remain, shortfalls are
    // missing.
    auto path = silent_path(net, st.marking, nullptr, &net.final_marking, max_silent_hops);
    if (path) {
      for (std::size_t si : *path) {
        force_fire(net.transitions[si], st);
        ++result.exec_count[si];
      }
    }
    for (const auto& [p, need] : net.final_marking) {
      auto it = st.marking.find(p);
      std::uint32_t have = it == st.marking.end() ? 0 : it->second;
      st.counters.consumed += need;
      if (have < need) st.counters.missing += static_cast<double>(need - have);
    }
    for (const auto& [p, have] : st.marking) {
      auto it = net.final_marking.find(p);
      std::uint32_t need = it == net.final_marking.end() ? 0 : it->second;
      if (have > need) st.counters.remaining += static_cast<double>(have - need);
    }
    result.per_trace.push_back(st.counters);
  }

  double sum = 0.0;
  for (const auto& c : result.per_trace) sum += c.fitness();
  result.fitness = result.per_trace.empty() ? 0.0 : sum / static_cast<double>(result.per_trace.size());
  return result;
}

double replay_fitness(const PetriNet& net, const std::vector<Trace>& traces) {
  return replay(net, traces, 10).fitness;
}

double precision_escaping(const PetriNet& net, const std::vector<Trace>& traces,
                          int max_silent_hops) {
  // Visible labels enabled from a marking, silent closure included.
  auto enabled_labels = [&](const Marking& m) {
    std::set<std::string> labels;
    std::deque<std::pair<Marking, int>> queue{{m, 0}};
    std::unordered_set<std::string> seen{marking_key(m)};
    while (!queue.empty()) {
      auto [cur, depth] = std::move(queue.front());
      queue.pop_front();
      for (const auto& t : net.transitions) {
        if (!enabled(t, cur)) continue;
        if (!t.silent()) {
          labels.insert(t.label);
        } else if (depth < max_silent_hops) {
          Marking next = cur;
          fire(t, next);
          if (seen.insert(marking_key(next)).second) queue.push_back({next, depth + 1});
        }
      }
    }
    return labels;
  };

  std::unordered_map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t ti = 0; ti < net.transitions.size(); ++ti)
    if (!net.transitions[ti].silent()) by_label[net.transitions[ti].label].push_back(ti);

  // State per distinct log prefix: visit count and observed continuations.
  struct PrefixState {
    std::uint64_t visits = 0;
    std::set<std::string> observed;
    Marking marking;
    bool marking_set = false;
  };
  std::map<std::string, PrefixState> states;

  for (const auto& trace : traces) {
    ReplayState st;
    st.marking = net.initial_marking;
    std::string prefix_key;
    for (std::size_t pos = 0; pos <= trace.size(); ++pos) {
      PrefixState& ps = states[prefix_key];
      ++ps.visits;
      if (!ps.marking_set) {
        ps.marking = st.marking;
        ps.marking_set = true;
      }
      if (pos == trace.size()) break;
      const std::string& label = trace[pos];
      ps.observed.insert(label);
      // Advance the replay as in fitness computation.
      auto it = by_label.find(label);
      if (it != by_label.end()) {
        std::size_t chosen = it->second.front();
        bool found = false;
        for (std::size_t ti : it->second)
          if (enabled(net.transitions[ti], st.marking)) {
            chosen = ti;
            found = true;
            break;
          }
        if (!found) {
          for (std::size_t ti : it->second) {
            auto path =
                silent_path(net, st.marking, &net.transitions[ti], nullptr, max_silent_hops);
            if (path) {
              for (std::size_t si : *path) force_fire(net.transitions[si], st);
              chosen = ti;
              break;
            }
          }
        }
        force_fire(net.transitions[chosen], st);
      }
      prefix_key += label;
      prefix_key += '\x1f';
    }
  }

  double weighted_enabled = 0.0;
  double weighted_escaping = 0.0;
  for (auto& [key, ps] : states) {
    auto labels = enabled_labels(ps.marking);
    if (labels.empty()) continue;
    std::size_t escaping = 0;
    for (const auto& l : labels)
      if (!ps.observed.count(l)) ++escaping;
    weighted_enabled += static_cast<double>(ps.visits) * static_cast<double>(labels.size());
    weighted_escaping += static_cast<double>(ps.visits) * static_cast<double>(escaping);
  }
  if (weighted_enabled <= 0.0) return 1.0;
  return std::clamp(1.0 - weighted_escaping / weighted_enabled, 0.0, 1.0);
}

double generalization_from_counts(const std::vector<std::uint64_t>& exec_counts) {
  if (exec_counts.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint64_t n : exec_counts)
    sum += n == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(n));
  return std::clamp(1.0 - sum / static_cast<double>(exec_counts.size()), 0.0, 1.0);
}

double generalization(const PetriNet& net, const std::vector<Trace>& traces) {
  ReplayResult rr = replay(net, traces, 10);
  std::vector<std::uint64_t> visible;
  for (std::size_t ti = 0; ti < net.transitions.size(); ++ti)
    if (!net.transitions[ti].silent()) visible.push_back(rr.exec_count[ti]);
  return generalization_from_counts(visible);
}

double simplicity(const PetriNet& net) {
  std::size_t nodes = net.places.size() + net.transitions.size();
  if (nodes == 0) throw InputError("simplicity: empty net");
  // Every arc contributes one degree at a place and one at a transition.
  double degree_sum = 2.0 * static_cast<double>(net.arc_count());
  double mean_degree = degree_sum / static_cast<double>(nodes);
  return 1.0 / (1.0 + std::max(0.0, mean_degree - 2.0));
}

QualityMetrics quality(const PetriNet& net, const std::vector<Trace>& traces,
                       std::uint64_t interactions) {
  auto t0 = std::chrono::steady_clock::now();
  QualityMetrics q;
  ReplayResult rr = replay(net, traces, 10);
  q.fitness = rr.fitness;
  q.precision = precision_escaping(net, traces);
  std::vector<std::uint64_t> visible;
  for (std::size_t ti = 0; ti < net.transitions.size(); ++ti)
    if (!net.transitions[ti].silent()) visible.push_back(rr.exec_count[ti]);
  q.generalization = generalization_from_counts(visible);
  q.simplicity = simplicity(net);
  q.average = (q.fitness + q.precision + q.generalization + q.simplicity) / 4.0;
  q.interactions = interactions;
  auto t1 = std::chrono::steady_clock::now();
  q.duration_seconds = std::chrono::duration<double>(t1 - t0).count();
  return q;
}

std::uint64_t interactions_count(const EventLog& log, const std::string& case_id) {
  std::uint64_t n = 0;
  bool found = false;
  for (const auto& s : log.sessions) {
    if (s.case_id != case_id) continue;
    found = true;
    n += s.events.size();
  }
  if (!found) throw InputError("interactions_count: unknown case '" + case_id + "'");
  return n;
}

std::vector<Trace> random_playouts(const PetriNet& net, std::size_t count, std::size_t max_steps,
                                   Rng& rng) {
  std::vector<Trace> traces;
  std::size_t attempts = 0;
  const std::size_t max_attempts = count * 200 + 100;
  while (traces.size() < count && attempts < max_attempts) {
    ++attempts;
    Marking m = net.initial_marking;
    Trace trace;
    bool done = false;
    for (std::size_t step = 0; step < max_steps; ++step) {
      if (m == net.final_marking) {
        done = true;
        break;
      }
      std::vector<std::size_t> choices;
      for (std::size_t ti = 0; ti < net.transitions.size(); ++ti)
        if (enabled(net.transitions[ti], m)) choices.push_back(ti);
      if (choices.empty()) break;
      std::size_t ti = choices[rng.uniform(choices.size())];
      fire(net.transitions[ti], m);
      if (!net.transitions[ti].silent()) trace.push_back(net.transitions[ti].label);
    }
    if (!done && m == net.final_marking) done = true;
    if (done && !trace.empty()) traces.push_back(std::move(trace));
  }
  if (traces.size() < count)
    throw NumericalError("random_playouts: could not generate enough complete traces");
  return traces;
}

}  // namespace devmine::pm
