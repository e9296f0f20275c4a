#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "devmine/eventlog.hpp"
#include "devmine/synth.hpp"
#include "devmine/util.hpp"

using namespace devmine;
using namespace devmine::synth;

TEST_CASE("built-in profiles are well-formed") {
  auto profiles = builtin_profiles();
  CHECK(profiles.size() == 19);
  for (const auto& p : profiles) {
    REQUIRE(p.activities.size() == p.transition.size());
    double init_sum = 0.0;
    for (double v : p.initial) init_sum += v;
    CHECK(init_sum == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& row : p.transition) {
      REQUIRE(row.size() == p.activities.size());
      double sum = 0.0;
      for (double v : row) sum += v;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("generated logs round-trip through the parser with clean hashes") {
  SyntheticSpec spec;
  spec.participants = 8;
  spec.sessions_min = spec.sessions_max = 2;
  spec.session_len_min = 20;
  spec.session_len_max = 30;
  spec.seed = 99;
  std::string jsonl = generate_jsonl(spec);
  auto parsed = parse_events(std::string_view(jsonl));
  CHECK(parsed.issues.empty());
  CHECK(parsed.log.sessions.size() == 8);
  CHECK(parsed.log.event_count() >= 8 * 2 * spec.session_len_min);
  CHECK(parsed.log.event_count() <= 8 * 2 * spec.session_len_max);

  TamperReport report = verify_hashes(parsed.log);
  CHECK(report.mismatch == 0);
  CHECK(report.missing == 0);
  CHECK(report.ok == parsed.log.event_count());

  SUBCASE("every command recodes onto its intended activity") {
    EventLog recoded = recode_activities(parsed.log, ActivityMap::builtin());
    std::set<std::string> labels;
    for (const auto& s : recoded.sessions)
      for (const auto& e : s.events) labels.insert(e.activity);
    for (const auto& label : labels) {
      bool known = label == "Editing" || label == "Navigating" || label == "Debugging" ||
                   label == "Refactoring" || label == "Executing" || label == "Spurious" ||
                   label == "Accepted_Answer" || label == "Wrong_Answer" ||
                   label == "Compile_Time_Error" || label == "Invalid_Submission" ||
                   label == "Runtime_Error" || label == "Time_Limit_Exceeded";
      CHECK(known);
    }
  }
}

TEST_CASE("generation is byte-deterministic per seed") {
  SyntheticSpec spec;
  spec.participants = 5;
  spec.seed = 42;
  CHECK(generate_jsonl(spec) == generate_jsonl(spec));
  SyntheticSpec other = spec;
  other.seed = 43;
  CHECK(generate_jsonl(spec) != generate_jsonl(other));
}

TEST_CASE("zero participants yields an empty, valid log") {
  SyntheticSpec spec;
  spec.participants = 0;
  std::string jsonl = generate_jsonl(spec);
  CHECK(jsonl.empty());
  auto parsed = parse_events(std::string_view(jsonl));
  CHECK(parsed.log.sessions.empty());
}

TEST_CASE("default assignment plants simple and dense tails") {
  auto assignment = default_assignment(37, 19);
  REQUIRE(assignment.size() == 37);
  for (std::size_t i = 0; i < 5; ++i) CHECK(assignment[i] == i);
  for (std::size_t i = 0; i < 5; ++i) CHECK(assignment[32 + i] == 14 + i);
  std::set<std::size_t> used(assignment.begin(), assignment.end());
  CHECK(used.size() == 19);  // every profile occupied
}

TEST_CASE("manifest lists every participant with profile and score") {
  SyntheticSpec spec;
  spec.participants = 12;
  std::string csv = generate_manifest_csv(spec);
  auto rows = parse_csv(csv);
  REQUIRE(rows.size() == 13);
  CHECK(rows[0][0] == "participant");
  CHECK(rows[1][0] == participant_name(0));
}
