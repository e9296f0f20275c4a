#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace devmine {

// One recorded development action: an IDE command or a judge submission.
struct Event {
  std::string activity;    // token: commandName at parse time, activity label after recoding
  std::string case_id;     // value of the chosen case key
  std::int64_t timestamp_ms = 0;  // UTC milliseconds
  std::uint64_t seq = 0;          // input order, used for stable tie-breaking
  // Every raw field of the source record except "hash", in input order.
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string hash;  // empty when the record carried none

  const std::string* attr(std::string_view name) const;
};

// Nonempty, time-ordered trace of events sharing a case id.
struct Session {
  std::string case_id;
  std::vector<Event> events;
};

struct EventLog {
  std::vector<Session> sessions;

  std::size_t event_count() const;
  std::vector<Event> flatten() const;  // events in (session, position) order
};

// Ordered, distinct token strings with a bijective index.
class Vocabulary {
 public:
  std::uint32_t intern(const std::string& token);
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// A sentence is one session rendered as tokens; the corpus carries the
// vocabulary derived from all sentences.
using Sentence = std::vector<std::string>;

struct Corpus {
  std::vector<Sentence> sentences;
  std::vector<std::string> sentence_ids;  // case id of each sentence, parallel to sentences
  Vocabulary vocab;

  std::size_t token_count() const;
};

enum class TokenLevel { command, category, activity };

TokenLevel token_level_from_string(std::string_view s);
std::string to_string(TokenLevel level);

// Ordered recoding rules; the first matching rule wins, otherwise the
// default label applies.
struct ActivityRule {
  std::string field;    // "commandName" or "categoryName"
  std::string pattern;  // wildcard pattern ('*', '?')
  std::string label;
};

struct ActivityMap {
  std::vector<ActivityRule> rules;
  std::string default_label = "Spurious";

  const std::string& label_for(const Event& e) const;

  // The mapping shipped with the tool: PyCharm command/category names onto
  // {Editing, Navigating, Debugging, Refactoring, Executing, Spurious} plus
  // pass-through of judge submission outcomes.
  static ActivityMap builtin();
  // CSV with columns pattern_field,pattern,activity.
  static ActivityMap from_csv(const std::filesystem::path& path);
};

// ---- parsing ----

struct ParseIssue {
  std::size_t record_index = 0;
  std::string message;
};

struct ParseResult {
  EventLog log;
  std::vector<ParseIssue> issues;
  std::size_t records_total = 0;
};

// Accepts a JSON array or newline-delimited JSON records with the raw field
// names (session, timestamp_begin, username, categoryName, commandName, ...).
// Structurally malformed JSON throws InputError with a byte offset; records
// missing required fields are collected as issues; if every record is bad,
// throws InputError.
ParseResult parse_events(std::istream& in, const std::string& case_key = "username");
ParseResult parse_events(std::string_view text, const std::string& case_key = "username");
ParseResult parse_events_file(const std::filesystem::path& path,
                              const std::string& case_key = "username");

// ---- tamper check ----

enum class HashVerdict { ok, mismatch, missing };

struct TamperReport {
  std::vector<HashVerdict> verdicts;  // one per event, in log order
  std::size_t ok = 0;
  std::size_t mismatch = 0;
  std::size_t missing = 0;

  std::size_t total() const { return ok + mismatch + missing; }
};

// Canonical serialization: values of all non-hash fields, ordered by
// lexicographic field name, joined with '|'. The digest is MD5 over
// secret + '|' + canonical (or just the canonical form when secret is empty).
std::string event_canonical(const Event& e);
std::string event_digest(const Event& e, std::string_view secret = {});

TamperReport verify_hashes(const EventLog& log, std::string_view secret = {});

// ---- transforms ----

// Keeps the first event (in input order) per (username, timestamp) key.
EventLog dedupe(const EventLog& log);

// Replaces each event's activity by the mapped label; attributes (including
// the original commandName) are untouched.
EventLog recode_activities(const EventLog& log, const ActivityMap& map);

// Re-partitions all events by the given attribute; events sorted by
// timestamp, ties broken by input order. Sessions ordered by case id of
// first appearance. Throws InputError if any event lacks the key.
std::vector<Session> sessionize(const std::vector<Event>& events, const std::string& case_key);
EventLog sessionize(const EventLog& log, const std::string& case_key);

// One sentence per session at the requested granularity.
Corpus to_sentences(const std::vector<Session>& sessions, TokenLevel level);

// ---- canonical log serialization ----

std::string to_jsonl(const EventLog& log);
EventLog from_jsonl(std::string_view text);
std::string to_csv(const EventLog& log);  // case_id,timestamp,activity,command,category

}  // namespace devmine
