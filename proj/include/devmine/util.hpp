#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace devmine {

// Bad or unreadable input data; maps to CLI exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A computation could not produce a meaningful number; maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic PRNG used everywhere randomness is needed. All derived draws
// (indices, reals, normals, shuffles) are implemented here so that results
// depend only on the seed, not on standard-library distribution details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, bound). bound must be > 0.
  std::size_t uniform(std::size_t bound);

  // Uniform in [0, 1).
  double real();

  // Standard normal deviate (Box-Muller).
  double normal();

  // Index sampled from unnormalized nonnegative weights.
  std::size_t discrete(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = uniform(i + 1);
      std::swap(v[i], v[j]);
    }
  }

  // Independent stream for a named subtask of this generator's seed.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// ---- strings ----

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string lower(std::string_view s);
std::string trim(std::string_view s);

// Glob-style match: '*' = any run, '?' = any single char. Case sensitive.
bool wildcard_match(std::string_view pattern, std::string_view text);

// ---- timestamps ----

// Parses "YYYY-MM-DDTHH:MM:SS[.fff](Z|±HH:MM|±HHMM)" to UTC milliseconds
// since the Unix epoch. Throws InputError on malformed input.
std::int64_t parse_iso8601_ms(std::string_view s);
std::string format_iso8601_ms(std::int64_t ms);

// ---- files ----

// Writes content to a temp file in the target directory, then renames it
// over the destination.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// ---- parallelism ----

// Runs fn(0..n-1) on up to `jobs` worker threads. Units must be independent;
// callers are responsible for writing results into per-index slots so output
// never depends on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// ---- csv ----

// Quotes a field if it contains a separator, quote, or newline.
std::string csv_escape(std::string_view field);

// Minimal CSV reader: handles quoted fields and embedded newlines; lines
// starting with '#' outside of quotes are skipped as comments.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

}  // namespace devmine
