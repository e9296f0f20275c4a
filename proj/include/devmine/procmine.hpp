#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "devmine/eventlog.hpp"
#include "devmine/util.hpp"

namespace devmine::pm {

using Trace = std::vector<std::string>;

// Directly-Follows Graph: activities, weighted succession edges, and the
// first/last-activity frequency maps.
struct Dfg {
  std::map<std::string, std::uint64_t> activity_freq;
  std::map<std::pair<std::string, std::string>, std::uint64_t> edge_freq;
  std::map<std::string, std::uint64_t> start_freq;
  std::map<std::string, std::uint64_t> end_freq;
  std::uint64_t trace_count = 0;

  std::string to_csv() const;  // edge list: from,to,frequency
};

Dfg discover_dfg(const std::vector<Trace>& traces);
Dfg discover_dfg(const std::vector<Session>& sessions);

// Optional frequency filter: drops edges below the threshold, then prunes
// activities that lost every edge (unless they still start or end traces).
Dfg filter_edges(const Dfg& dfg, std::uint64_t min_edge_freq);

// Workflow Petri net derived from a DFG. One place per activity ("the last
// executed activity"), one transition per DFG edge labeled with its target,
// one labeled transition per start activity out of the source place, and one
// silent transition per end activity into the sink place.
struct PetriNet {
  struct Transition {
    std::string name;
    std::string label;  // empty for silent transitions
    std::vector<std::uint32_t> in;   // place ids
    std::vector<std::uint32_t> out;  // place ids
    bool silent() const { return label.empty(); }
  };

  std::vector<std::string> places;
  std::vector<Transition> transitions;
  std::map<std::uint32_t, std::uint32_t> initial_marking;  // place -> tokens
  std::map<std::uint32_t, std::uint32_t> final_marking;

  std::size_t visible_count() const;
  std::size_t arc_count() const;

  // Structural checks: bipartiteness holds by construction; verifies single
  // single-token initial/final markings and that every transition is
  // connected to the source place. Returns problems found.
  std::vector<std::string> validate() const;

  std::string to_dot() const;
  std::string to_json() const;
};

struct ConversionResult {
  PetriNet net;
  std::vector<std::string> warnings;  // activities with no path to an end activity
};

ConversionResult dfg_to_petri(const Dfg& dfg);

// ---- token-based replay ----

struct TraceReplay {
  double produced = 0.0;
  double consumed = 0.0;
  double missing = 0.0;
  double remaining = 0.0;

  double fitness() const {
    double a = consumed > 0.0 ? 1.0 - missing / consumed : 1.0;
    double b = produced > 0.0 ? 1.0 - remaining / produced : 1.0;
    return 0.5 * a + 0.5 * b;
  }
};

struct ReplayResult {
  std::vector<TraceReplay> per_trace;
  std::vector<std::uint64_t> exec_count;  // per transition id, silent included
  double fitness = 0.0;                   // mean of per-trace fitness
};

// Fires each trace's labeled transitions, enabling them through silent
// transitions where needed (breadth-first, at most max_silent_hops firings),
// inserting missing tokens when a transition still cannot fire.
ReplayResult replay(const PetriNet& net, const std::vector<Trace>& traces,
                    int max_silent_hops = 10);

double replay_fitness(const PetriNet& net, const std::vector<Trace>& traces);

// Escaping-edges precision over log-prefix states: at each distinct prefix,
// compares the activities the model enables against the activities the log
// actually continues with, weighted by prefix frequency.
double precision_escaping(const PetriNet& net, const std::vector<Trace>& traces,
                          int max_silent_hops = 10);

// 1 - (sum over visible transitions of 1/sqrt(executions)) / #visible, with
// never-executed transitions contributing a full unit.
double generalization(const PetriNet& net, const std::vector<Trace>& traces);
double generalization_from_counts(const std::vector<std::uint64_t>& exec_counts);

// Inverse arc degree: 1 / (1 + max(0, mean node degree - 2)) over all places
// and transitions.
double simplicity(const PetriNet& net);

struct QualityMetrics {
  double fitness = 0.0;
  double precision = 0.0;
  double generalization = 0.0;
  double simplicity = 0.0;
  double average = 0.0;
  std::uint64_t interactions = 0;
  double duration_seconds = 0.0;
};

// Runs the four conformance metrics and assembles the evaluation row.
// duration_seconds covers the metric computation; callers add discovery time.
QualityMetrics quality(const PetriNet& net, const std::vector<Trace>& traces,
                       std::uint64_t interactions);

// IDE command events plus submission events for one case.
std::uint64_t interactions_count(const EventLog& log, const std::string& case_id);

// Random firing sequences from initial to final marking; visible labels only.
// Walks that fail to reach the final marking within max_steps are retried.
std::vector<Trace> random_playouts(const PetriNet& net, std::size_t count, std::size_t max_steps,
                                   Rng& rng);

}  // namespace devmine::pm
