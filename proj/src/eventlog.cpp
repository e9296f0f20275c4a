#include "devmine/eventlog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "devmine/digest.hpp"
#include "devmine/util.hpp"

namespace devmine {

using ordered_json = nlohmann::ordered_json;

const std::string* Event::attr(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return &v;
  }
  return nullptr;
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.events.size();
  return n;
}

std::vector<Event> EventLog::flatten() const {
  std::vector<Event> out;
  out.reserve(event_count());
  for (const auto& s : sessions)
    for (const auto& e : s.events) out.push_back(e);
  return out;
}

std::uint32_t Vocabulary::intern(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

TokenLevel token_level_from_string(std::string_view s) {
  if (s == "command") return TokenLevel::command;
  if (s == "category") return TokenLevel::category;
  if (s == "activity") return TokenLevel::activity;
  throw std::invalid_argument("unknown token level: " + std::string(s));
}

std::string to_string(TokenLevel level) {
  switch (level) {
    case TokenLevel::command: return "command";
    case TokenLevel::category: return "category";
    case TokenLevel::activity: return "activity";
  }
  return "?";
}

const std::string& ActivityMap::label_for(const Event& e) const {
  for (const auto& rule : rules) {
    const std::string* value = e.attr(rule.field);
    if (value && wildcard_match(rule.pattern, *value)) return rule.label;
  }
  return default_label;
}

ActivityMap ActivityMap::builtin() {
  ActivityMap m;
  auto cmd = [&](const char* pattern, const char* label) {
    m.rules.push_back({"commandName", pattern, label});
  };
  auto cat = [&](const char* pattern, const char* label) {
    m.rules.push_back({"categoryName", pattern, label});
  };
  // Judge submission outcomes keep their native identifiers.
  for (const char* outcome :
       {"Accepted_Answer", "Wrong_Answer", "Compile_Time_Error", "Invalid_Submission",
        "Runtime_Error", "Time_Limit_Exceeded"}) {
    cmd(outcome, outcome);
  }
  // Debugging before executing: "Debug" would otherwise match Run-ish rules.
  cmd("*Debug*", "Debugging");
  cmd("*Breakpoint*", "Debugging");
  cmd("Step*", "Debugging");
  cmd("Resume*", "Debugging");
  cmd("*Refactor*", "Refactoring");
  cmd("Rename*", "Refactoring");
  cmd("Extract*", "Refactoring");
  cmd("Inline*", "Refactoring");
  cmd("Move*", "Refactoring");
  cmd("Run*", "Executing");
  cmd("Rerun*", "Executing");
  cmd("Stop*", "Executing");
  cmd("Execute*", "Executing");
  cmd("*Goto*", "Navigating");
  cmd("GoTo*", "Navigating");
  cmd("Back", "Navigating");
  cmd("Forward", "Navigating");
  cmd("*Find*", "Navigating");
  cmd("*Search*", "Navigating");
  cmd("*Select*", "Navigating");
  cmd("Show*", "Navigating");
  cmd("*Scroll*", "Navigating");
  cmd("*Tab*", "Navigating");
  cmd("Typing", "Editing");
  cmd("Backspace", "Editing");
  cmd("Delete*", "Editing");
  cmd("Paste*", "Editing");
  cmd("Copy*", "Editing");
  cmd("Cut*", "Editing");
  cmd("Undo*", "Editing");
  cmd("Redo*", "Editing");
  cmd("Save*", "Editing");
  cmd("Enter", "Editing");
  cmd("*Completion*", "Editing");
  cmd("Reformat*", "Editing");
  cmd("Indent*", "Editing");
  cmd("Comment*", "Editing");
  // Category fallbacks for commands the rules above do not name.
  cat("*Editor*", "Editing");
  cat("*Edit*", "Editing");
  cat("*Navigate*", "Navigating");
  cat("*NavBar*", "Navigating");
  cat("*Debugger*", "Debugging");
  cat("*Refactor*", "Refactoring");
  cat("*Run*", "Executing");
  return m;
}

ActivityMap ActivityMap::from_csv(const std::filesystem::path& path) {
  ActivityMap m;
  auto rows = parse_csv(read_file(path));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (i == 0 && !row.empty() && lower(row[0]) == "pattern_field") continue;  // header
    if (row.size() != 3)
      throw InputError("activity map row " + std::to_string(i + 1) + ": expected 3 columns");
    if (row[0] != "commandName" && row[0] != "categoryName")
      throw InputError("activity map row " + std::to_string(i + 1) +
                       ": pattern_field must be commandName or categoryName");
    m.rules.push_back({row[0], row[1], row[2]});
  }
  if (m.rules.empty()) throw InputError("activity map is empty: " + path.string());
  return m;
}

namespace {

constexpr const char* kRequiredFields[] = {"session", "timestamp_begin", "username",
                                           "categoryName", "commandName"};

std::string json_value_to_string(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Builds an Event from one parsed record; returns an error message on failure.
std::optional<std::string> record_to_event(const ordered_json& rec, std::uint64_t seq,
                                           const std::string& case_key, Event& out) {
  if (!rec.is_object()) return "record is not a JSON object";
  for (const char* field : kRequiredFields) {
    if (!rec.contains(field)) return std::string("missing required field: ") + field;
  }
  Event e;
  e.seq = seq;
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    if (it.key() == "hash") {
      e.hash = json_value_to_string(it.value());
      continue;
    }
    e.attributes.emplace_back(it.key(), json_value_to_string(it.value()));
  }
  const std::string* ts = e.attr("timestamp_begin");
  try {
    e.timestamp_ms = parse_iso8601_ms(*ts);
  } catch (const InputError& ex) {
    return ex.what();
  }
  e.activity = *e.attr("commandName");
  const std::string* key = e.attr(case_key);
  if (!key || key->empty()) return "missing or empty case key attribute: " + case_key;
  e.case_id = *key;
  out = std::move(e);
  return std::nullopt;
}

}  // namespace

ParseResult parse_events(std::string_view text, const std::string& case_key) {
  ParseResult result;
  std::vector<Event> events;
  std::uint64_t seq = 0;

  std::size_t first = text.find_first_not_of(" \t\r\n");
  bool is_array = first != std::string_view::npos && text[first] == '[';

  auto consume_record = [&](const ordered_json& rec) {
    ++result.records_total;
    Event e;
    if (auto err = record_to_event(rec, seq++, case_key, e)) {
      result.issues.push_back({result.records_total - 1, *err});
    } else {
      events.push_back(std::move(e));
    }
  };

  if (is_array) {
    ordered_json doc;
    try {
      doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& ex) {
      throw InputError(std::string("JSON parse error: ") + ex.what());
    }
    for (const auto& rec : doc) consume_record(rec);
  } else if (first != std::string_view::npos) {
    std::size_t offset = 0;
    std::size_t line_no = 0;
    while (offset <= text.size()) {
      std::size_t nl = text.find('\n', offset);
      std::string_view line =
          text.substr(offset, nl == std::string_view::npos ? text.size() - offset : nl - offset);
      ++line_no;
      std::string trimmed = trim(line);
      if (!trimmed.empty() && trimmed[0] != '#') {
        ordered_json rec;
        try {
          rec = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& ex) {
          throw InputError("JSON parse error at byte " + std::to_string(offset + ex.byte) +
                           " (line " + std::to_string(line_no) + "): " + ex.what());
        }
        consume_record(rec);
      }
      if (nl == std::string_view::npos) break;
      offset = nl + 1;
    }
  }

  if (result.records_total > 0 && events.empty()) {
    std::string detail = result.issues.empty() ? "" : (": first issue: " + result.issues[0].message);
    throw InputError("no parseable event records" + detail);
  }
  result.log.sessions = sessionize(events, case_key);
  return result;
}

ParseResult parse_events(std::istream& in, const std::string& case_key) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_events(std::string_view(ss.str()), case_key);
}

ParseResult parse_events_file(const std::filesystem::path& path, const std::string& case_key) {
  return parse_events(std::string_view(read_file(path)), case_key);
}

std::string event_canonical(const Event& e) {
  std::map<std::string, std::string> ordered;
  for (const auto& [k, v] : e.attributes) ordered.emplace(k, v);
  std::string out;
  bool head = true;
  for (const auto& [k, v] : ordered) {
    if (!head) out += '|';
    out += v;
    head = false;
  }
  return out;
}

std::string event_digest(const Event& e, std::string_view secret) {
  std::string canonical = event_canonical(e);
  if (secret.empty()) return md5_hex(canonical);
  return md5_hex(std::string(secret) + "|" + canonical);
}

TamperReport verify_hashes(const EventLog& log, std::string_view secret) {
  TamperReport report;
  for (const auto& session : log.sessions) {
    for (const auto& e : session.events) {
      HashVerdict v;
      if (e.hash.empty()) {
        v = HashVerdict::missing;
        ++report.missing;
      } else if (event_digest(e, secret) == e.hash) {
        v = HashVerdict::ok;
        ++report.ok;
      } else {
        v = HashVerdict::mismatch;
        ++report.mismatch;
      }
      report.verdicts.push_back(v);
    }
  }
  return report;
}

EventLog dedupe(const EventLog& log) {
  std::vector<Event> events = log.flatten();
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.seq < b.seq; });
  std::map<std::pair<std::string, std::int64_t>, bool> seen;
  std::vector<Event> kept;
  kept.reserve(events.size());
  for (auto& e : events) {
    const std::string* user = e.attr("username");
    std::pair<std::string, std::int64_t> key{user ? *user : e.case_id, e.timestamp_ms};
    if (seen.emplace(key, true).second) kept.push_back(std::move(e));
  }
  EventLog out;
  if (kept.empty()) return out;
  // Preserve the original partition key: events carry case_id already.
  std::vector<std::string> order;
  std::map<std::string, std::vector<Event>> by_case;
  for (auto& e : kept) {
    if (by_case.find(e.case_id) == by_case.end()) order.push_back(e.case_id);
    by_case[e.case_id].push_back(std::move(e));
  }
  for (const auto& id : order) {
    Session s;
    s.case_id = id;
    s.events = std::move(by_case[id]);
    std::stable_sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
      if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
      return a.seq < b.seq;
    });
    out.sessions.push_back(std::move(s));
  }
  return out;
}

EventLog recode_activities(const EventLog& log, const ActivityMap& map) {
  if (map.rules.empty()) throw std::invalid_argument("recode_activities: empty activity map");
  EventLog out = log;
  for (auto& session : out.sessions)
    for (auto& e : session.events) e.activity = map.label_for(e);
  return out;
}

std::vector<Session> sessionize(const std::vector<Event>& events, const std::string& case_key) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Event>> by_case;
  for (const auto& e : events) {
    const std::string* key = e.attr(case_key);
    if (!key || key->empty())
      throw InputError("event at input position " + std::to_string(e.seq) +
                       " lacks case key attribute '" + case_key + "'");
    if (by_case.find(*key) == by_case.end()) order.push_back(*key);
    Event copy = e;
    copy.case_id = *key;
    by_case[*key].push_back(std::move(copy));
  }
  std::vector<Session> sessions;
  sessions.reserve(order.size());
  for (const auto& id : order) {
    Session s;
    s.case_id = id;
    s.events = std::move(by_case[id]);
    std::sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
      if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
      return a.seq < b.seq;
    });
    sessions.push_back(std::move(s));
  }
  return sessions;
}

EventLog sessionize(const EventLog& log, const std::string& case_key) {
  std::vector<Event> events = log.flatten();
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.seq < b.seq; });
  EventLog out;
  out.sessions = sessionize(events, case_key);
  return out;
}

Corpus to_sentences(const std::vector<Session>& sessions, TokenLevel level) {
  Corpus corpus;
  for (const auto& session : sessions) {
    Sentence sentence;
    sentence.reserve(session.events.size());
    for (const auto& e : session.events) {
      const std::string* tok = nullptr;
      switch (level) {
        case TokenLevel::command: tok = e.attr("commandName"); break;
        case TokenLevel::category: tok = e.attr("categoryName"); break;
        case TokenLevel::activity: tok = &e.activity; break;
      }
      if (!tok)
        throw InputError("event at input position " + std::to_string(e.seq) +
                         " lacks the attribute for level '" + to_string(level) + "'");
      corpus.vocab.intern(*tok);
      sentence.push_back(*tok);
    }
    corpus.sentences.push_back(std::move(sentence));
    corpus.sentence_ids.push_back(session.case_id);
  }
  return corpus;
}

std::string to_jsonl(const EventLog& log) {
  std::string out;
  for (const auto& session : log.sessions) {
    for (const auto& e : session.events) {
      ordered_json rec;
      rec["case"] = e.case_id;
      rec["timestamp"] = format_iso8601_ms(e.timestamp_ms);
      rec["activity"] = e.activity;
      const std::string* cmd = e.attr("commandName");
      const std::string* cat = e.attr("categoryName");
      rec["command"] = cmd ? *cmd : "";
      rec["category"] = cat ? *cat : "";
      ordered_json attrs = ordered_json::object();
      for (const auto& [k, v] : e.attributes) attrs[k] = v;
      rec["attributes"] = attrs;
      if (!e.hash.empty()) rec["hash"] = e.hash;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

EventLog from_jsonl(std::string_view text) {
  std::vector<Event> events;
  std::uint64_t seq = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    std::size_t nl = text.find('\n', offset);
    std::string_view line =
        text.substr(offset, nl == std::string_view::npos ? text.size() - offset : nl - offset);
    std::string trimmed = trim(line);
    if (!trimmed.empty() && trimmed[0] != '#') {
      ordered_json rec;
      try {
        rec = ordered_json::parse(line);
      } catch (const nlohmann::json::parse_error& ex) {
        throw InputError("canonical log parse error at byte " + std::to_string(offset + ex.byte) +
                         ": " + ex.what());
      }
      Event e;
      e.seq = seq++;
      e.case_id = rec.at("case").get<std::string>();
      e.timestamp_ms = parse_iso8601_ms(rec.at("timestamp").get<std::string>());
      e.activity = rec.at("activity").get<std::string>();
      if (rec.contains("attributes"))
        for (auto it = rec["attributes"].begin(); it != rec["attributes"].end(); ++it)
          e.attributes.emplace_back(it.key(), json_value_to_string(it.value()));
      if (rec.contains("hash")) e.hash = rec["hash"].get<std::string>();
      events.push_back(std::move(e));
    }
    if (nl == std::string_view::npos) break;
    offset = nl + 1;
  }
  EventLog out;
  // Rebuild sessions grouped by the stored case id, preserving order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<Event>> by_case;
  for (auto& e : events) {
    if (by_case.find(e.case_id) == by_case.end()) order.push_back(e.case_id);
    by_case[e.case_id].push_back(std::move(e));
  }
  for (const auto& id : order) {
    Session s;
    s.case_id = id;
    s.events = std::move(by_case[id]);
    out.sessions.push_back(std::move(s));
  }
  return out;
}

std::string to_csv(const EventLog& log) {
  std::string out = "case_id,timestamp,activity,command,category\n";
  for (const auto& session : log.sessions) {
    for (const auto& e : session.events) {
      const std::string* cmd = e.attr("commandName");
      const std::string* cat = e.attr("categoryName");
      out += csv_escape(e.case_id);
      out += ',';
      out += format_iso8601_ms(e.timestamp_ms);
      out += ',';
      out += csv_escape(e.activity);
      out += ',';
      out += csv_escape(cmd ? *cmd : "");
      out += ',';
      out += csv_escape(cat ? *cat : "");
      out += '\n';
    }
  }
  return out;
}

}  // namespace devmine
