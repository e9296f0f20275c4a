#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace devmine::synth {

// A planted behavior: a Markov chain over activity labels plus a pool of
// concrete command/category spellings per label.
struct Profile {
  std::string name;
  std::vector<std::string> activities;             // chain states
  std::vector<double> initial;                     // distribution over states
  std::vector<std::vector<double>> transition;     // rows sum to 1
};

struct SyntheticSpec {
  std::size_t participants = 37;
  std::vector<Profile> profiles;                   // defaults to builtin_profiles()
  // participant -> profile index; empty selects the built-in assignment:
  // first five participants take the simplest profiles, the last five the
  // densest, the middle round-robins the rest.
  std::vector<std::size_t> assignment;
  std::size_t sessions_min = 2, sessions_max = 3;
  std::size_t session_len_min = 40, session_len_max = 90;
  std::uint64_t seed = 1;
};

// 19 built-in profiles ordered from structurally simplest (near-deterministic
// activity cycles) to densest (near-uniform switching); the planted gap
// drives the group-comparison demos.
std::vector<Profile> builtin_profiles();

std::vector<std::size_t> default_assignment(std::size_t participants, std::size_t profile_count);

// Raw event records in the collector's JSON-lines format, hashes included.
// Byte-identical for identical specs.
std::string generate_jsonl(const SyntheticSpec& spec);

// participant,profile,profile_name,score rows; score is a synthetic quality
// rank aligned with profile simplicity (higher = better).
std::string generate_manifest_csv(const SyntheticSpec& spec);

std::string participant_name(std::size_t index);

}  // namespace devmine::synth
