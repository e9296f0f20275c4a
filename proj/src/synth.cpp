#include "devmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "devmine/digest.hpp"
#include "devmine/util.hpp"

namespace devmine::synth {

namespace {

using ordered_json = nlohmann::ordered_json;

// Concrete command spellings per activity label; the shipped activity map
// recodes every spelling back onto its label.
const std::map<std::string, std::vector<std::pair<std::string, std::string>>>& command_pools() {
  static const std::map<std::string, std::vector<std::pair<std::string, std::string>>> pools = {
      {"Editing",
       {{"EditorActions", "Typing"},
        {"EditorActions", "Backspace"},
        {"EditorActions", "Paste"},
        {"EditorActions", "Copy"},
        {"EditorActions", "Undo"},
        {"MainMenu", "SaveAll"},
        {"EditorActions", "ReformatCode"}}},
      {"Navigating",
       {{"Navigate", "GotoDeclaration"},
        {"Navigate", "Back"},
        {"Navigate", "Forward"},
        {"FindActions", "FindInPath"},
        {"FindActions", "SearchEverywhere"},
        {"Navigate", "ShowUsages"}}},
      {"Debugging",
       {{"Debugger", "Debug"},
        {"Debugger", "ToggleLineBreakpoint"},
        {"Debugger", "StepOver"},
        {"Debugger", "StepInto"},
        {"Debugger", "Resume"}}},
      {"Refactoring",
       {{"Refactor", "RenameElement"},
        {"Refactor", "ExtractMethod"},
        {"Refactor", "InlineVariable"},
        {"Refactor", "MoveElement"}}},
      {"Executing",
       {{"NavBarToolbar", "Run"},
        {"NavBarToolbar", "Rerun"},
        {"RunMenu", "RunClass"},
        {"NavBarToolbar", "Stop"}}},
      {"Spurious",
       {{"Platform", "WelcomeScreen"},
        {"Platform", "CheckForUpdate"},
        {"System", "AboutDialog"},
        {"System", "ChangeLaf"}}},
      {"Accepted_Answer", {{"Mooshak", "Accepted_Answer"}}},
      {"Wrong_Answer", {{"Mooshak", "Wrong_Answer"}}},
      {"Compile_Time_Error", {{"Mooshak", "Compile_Time_Error"}}},
      {"Invalid_Submission", {{"Mooshak", "Invalid_Submission"}}},
      {"Runtime_Error", {{"Mooshak", "Runtime_Error"}}},
      {"Time_Limit_Exceeded", {{"Mooshak", "Time_Limit_Exceeded"}}},
  };
  return pools;
}

Profile cycle_profile(std::string name, std::vector<std::string> states, double stickiness) {
  // Mostly follows the cycle s0 -> s1 -> ... -> s0; `stickiness` is the
  // probability of staying on the current state instead.
  Profile p;
  p.name = std::move(name);
  p.activities = std::move(states);
  const std::size_t n = p.activities.size();
  p.initial.assign(n, 0.0);
  p.initial[0] = 1.0;
  p.transition.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t next = (i + 1) % n;
    if (n == 1) {
      p.transition[i][i] = 1.0;
      continue;
    }
    p.transition[i][i] = stickiness;
    p.transition[i][next] = 1.0 - stickiness;
  }
  return p;
}

Profile mixed_profile(std::string name, std::vector<std::string> states,
                      std::vector<std::vector<double>> transition) {
  Profile p;
  p.name = std::move(name);
  p.activities = std::move(states);
  p.transition = std::move(transition);
  p.initial.assign(p.activities.size(), 0.0);
  p.initial[0] = 1.0;
  return p;
}

Profile uniform_profile(std::string name, std::vector<std::string> states) {
  Profile p;
  p.name = std::move(name);
  p.activities = std::move(states);
  const std::size_t n = p.activities.size();
  p.initial.assign(n, 1.0 / static_cast<double>(n));
  p.transition.assign(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  return p;
}

}  // namespace

std::vector<Profile> builtin_profiles() {
  std::vector<Profile> profiles;
  // Structurally simple behaviors: tight activity cycles.
  profiles.push_back(cycle_profile("steady_editor_runner", {"Editing", "Executing"}, 0.72));
  profiles.push_back(
      cycle_profile("edit_run_submit", {"Editing", "Executing", "Accepted_Answer"}, 0.60));
  profiles.push_back(cycle_profile("careful_reviewer", {"Editing", "Navigating"}, 0.75));
  profiles.push_back(cycle_profile("focused_editor", {"Editing", "Executing"}, 0.88));
  profiles.push_back(
      cycle_profile("methodical_tester", {"Editing", "Executing", "Navigating"}, 0.65));
  // Moderate mixes.
  profiles.push_back(mixed_profile("debug_centric", {"Editing", "Debugging", "Executing"},
                                   {{0.50, 0.35, 0.15}, {0.30, 0.55, 0.15}, {0.60, 0.20, 0.20}}));
  profiles.push_back(mixed_profile("refactor_centric", {"Editing", "Refactoring", "Navigating"},
                                   {{0.55, 0.30, 0.15}, {0.50, 0.30, 0.20}, {0.60, 0.20, 0.20}}));
  profiles.push_back(mixed_profile("explorer", {"Navigating", "Editing", "Spurious"},
                                   {{0.45, 0.40, 0.15}, {0.35, 0.55, 0.10}, {0.40, 0.40, 0.20}}));
  profiles.push_back(mixed_profile(
      "trial_submitter", {"Editing", "Executing", "Wrong_Answer", "Accepted_Answer"},
      {{0.55, 0.30, 0.10, 0.05},
       {0.50, 0.20, 0.20, 0.10},
       {0.70, 0.20, 0.05, 0.05},
       {0.80, 0.10, 0.05, 0.05}}));
  profiles.push_back(mixed_profile("distracted", {"Editing", "Spurious", "Navigating"},
                                   {{0.50, 0.25, 0.25}, {0.40, 0.35, 0.25}, {0.45, 0.25, 0.30}}));
  profiles.push_back(mixed_profile("debug_submit", {"Editing", "Debugging", "Wrong_Answer"},
                                   {{0.50, 0.40, 0.10}, {0.45, 0.40, 0.15}, {0.65, 0.25, 0.10}}));
  profiles.push_back(
      mixed_profile("balanced", {"Editing", "Navigating", "Executing", "Debugging"},
                    {{0.40, 0.20, 0.20, 0.20},
                     {0.40, 0.25, 0.20, 0.15},
                     {0.45, 0.20, 0.20, 0.15},
                     {0.40, 0.20, 0.15, 0.25}}));
  profiles.push_back(mixed_profile("run_heavy", {"Executing", "Editing", "Wrong_Answer"},
                                   {{0.40, 0.40, 0.20}, {0.45, 0.45, 0.10}, {0.30, 0.60, 0.10}}));
  profiles.push_back(mixed_profile("refactor_test", {"Editing", "Refactoring", "Executing"},
                                   {{0.45, 0.30, 0.25}, {0.50, 0.25, 0.25}, {0.55, 0.25, 0.20}}));
  // Dense behaviors: near-uniform switching across many activities.
  profiles.push_back(uniform_profile("scattered_a", {"Editing", "Navigating", "Debugging",
                                                     "Refactoring", "Executing", "Spurious",
                                                     "Wrong_Answer"}));
  profiles.push_back(uniform_profile("scattered_b", {"Editing", "Navigating", "Debugging",
                                                     "Refactoring", "Executing", "Spurious",
                                                     "Wrong_Answer", "Compile_Time_Error"}));
  profiles.push_back(uniform_profile("scattered_c", {"Editing", "Navigating", "Debugging",
                                                     "Refactoring", "Executing", "Spurious",
                                                     "Wrong_Answer", "Runtime_Error"}));
  profiles.push_back(uniform_profile(
      "scattered_d", {"Editing", "Navigating", "Debugging", "Refactoring", "Executing",
                      "Spurious", "Wrong_Answer", "Time_Limit_Exceeded", "Invalid_Submission"}));
  profiles.push_back(uniform_profile(
      "scattered_e", {"Editing", "Navigating", "Debugging", "Refactoring", "Executing",
                      "Spurious", "Compile_Time_Error", "Runtime_Error", "Wrong_Answer"}));
  return profiles;
}

std::vector<std::size_t> default_assignment(std::size_t participants, std::size_t profile_count) {
  std::vector<std::size_t> assignment(participants, 0);
  if (profile_count == 0) throw std::invalid_argument("default_assignment: no profiles");
  if (profile_count < 11 || participants < 11) {
    for (std::size_t i = 0; i < participants; ++i) assignment[i] = i % profile_count;
    return assignment;
  }
  const std::size_t middle_profiles = profile_count - 10;
  for (std::size_t i = 0; i < participants; ++i) {
    if (i < 5) {
      assignment[i] = i;  // simplest profiles
    } else if (i >= participants - 5) {
      assignment[i] = profile_count - 5 + (i - (participants - 5));  // densest profiles
    } else {
      assignment[i] = 5 + (i - 5) % middle_profiles;
    }
  }
  return assignment;
}

std::string participant_name(std::size_t index) { return std::to_string(87701 + index); }

namespace {

std::string pseudo_uuid(Rng& rng) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  const char* pattern = "xxxxxxxx-xxxx-xxxx-xxxx-xxxxxxxxxxxx";
  for (const char* p = pattern; *p; ++p) {
    if (*p == '-')
      s += '-';
    else
      s += hex[rng.uniform(16)];
  }
  return s;
}

}  // namespace

std::string generate_jsonl(const SyntheticSpec& spec) {
  std::vector<Profile> profiles = spec.profiles.empty() ? builtin_profiles() : spec.profiles;
  for (const auto& p : profiles) {
    for (const auto& row : p.transition) {
      double sum = 0.0;
      for (double v : row) sum += v;
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("profile '" + p.name + "': transition rows must sum to 1");
    }
  }
  std::vector<std::size_t> assignment = spec.assignment.empty()
                                            ? default_assignment(spec.participants, profiles.size())
                                            : spec.assignment;
  if (assignment.size() != spec.participants)
    throw std::invalid_argument("assignment size must match participant count");

  static const char* kCourses[] = {"LEI", "ETI", "IGE", "LCD"};
  static const char* kOses[] = {"Mac OS X 10.15.6", "Windows 10 10.0", "Linux 5.4.0"};

  Rng rng(spec.seed);
  std::string out;
  const std::int64_t base_ms = parse_iso8601_ms("2020-09-18T09:00:00.000Z");

  for (std::size_t pi = 0; pi < spec.participants; ++pi) {
    const Profile& profile = profiles.at(assignment[pi]);
    Rng prng = rng.fork(pi + 1);
    std::int64_t clock_ms = base_ms + static_cast<std::int64_t>(pi) * 137;
    std::size_t n_sessions =
        spec.sessions_min +
        (spec.sessions_max > spec.sessions_min
             ? prng.uniform(spec.sessions_max - spec.sessions_min + 1)
             : 0);
    for (std::size_t si = 0; si < n_sessions; ++si) {
      std::string session_id = pseudo_uuid(prng);
      std::string filename = "P" + std::to_string(1 + (si % 6)) + ".py";
      std::size_t len =
          spec.session_len_min +
          (spec.session_len_max > spec.session_len_min
               ? prng.uniform(spec.session_len_max - spec.session_len_min + 1)
               : 0);
      std::size_t state = prng.discrete(profile.initial);
      for (std::size_t ei = 0; ei < len; ++ei) {
        const std::string& activity = profile.activities.at(state);
        const auto& pool = command_pools().at(activity);
        const auto& [category, command] = pool[prng.uniform(pool.size())];
        clock_ms += 1500 + static_cast<std::int64_t>(prng.uniform(6500));

        std::map<std::string, std::string> fields;
        fields["session"] = session_id;
        fields["timestamp_begin"] = format_iso8601_ms(clock_ms);
        fields["username"] = participant_name(pi);
        fields["graduation"] = kCourses[pi % 4];
        fields["projectname"] = "ContestSolutions";
        fields["filename"] = filename;
        fields["extension"] = "py";
        fields["categoryName"] = category;
        fields["commandName"] = command;
        fields["platform"] = "JetBrains s.r.o. / PyCharmCore";
        fields["platform_branch"] = "PyCharm";
        fields["platform_version"] = "2020.2.1";
        fields["java"] = "11.0.8+10-b944.31";
        fields["os"] = kOses[pi % 3];
        fields["os_arch"] = "x86_64";
        fields["country"] = "Portugal";
        fields["city"] = "Lisbon";

        std::string canonical;
        bool head = true;
        for (const auto& [k, v] : fields) {
          if (!head) canonical += '|';
          canonical += v;
          head = false;
        }

        ordered_json rec;
        rec["session"] = fields["session"];
        rec["timestamp_begin"] = fields["timestamp_begin"];
        rec["username"] = fields["username"];
        rec["graduation"] = fields["graduation"];
        rec["projectname"] = fields["projectname"];
        rec["filename"] = fields["filename"];
        rec["extension"] = fields["extension"];
        rec["categoryName"] = fields["categoryName"];
        rec["commandName"] = fields["commandName"];
        rec["platform"] = fields["platform"];
        rec["platform_branch"] = fields["platform_branch"];
        rec["platform_version"] = fields["platform_version"];
        rec["java"] = fields["java"];
        rec["os"] = fields["os"];
        rec["os_arch"] = fields["os_arch"];
        rec["country"] = fields["country"];
        rec["city"] = fields["city"];
        rec["hash"] = md5_hex(canonical);
        out += rec.dump();
        out += '\n';

        state = prng.discrete(profile.transition.at(state));
      }
      clock_ms += 600000;  // pause between sessions
    }
  }
  return out;
}

std::string generate_manifest_csv(const SyntheticSpec& spec) {
  std::vector<Profile> profiles = spec.profiles.empty() ? builtin_profiles() : spec.profiles;
  std::vector<std::size_t> assignment = spec.assignment.empty()
                                            ? default_assignment(spec.participants, profiles.size())
                                            : spec.assignment;
  std::string out = "participant,profile,profile_name,score\n";
  for (std::size_t pi = 0; pi < spec.participants; ++pi) {
    std::size_t p = assignment.at(pi);
    // Earlier profiles are structurally simpler; score them higher.
    double score = 100.0 - static_cast<double>(p) * 5.0 - static_cast<double>(pi) * 0.1;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", score);
    out += participant_name(pi) + "," + std::to_string(p) + "," +
           csv_escape(profiles.at(p).name) + "," + buf + "\n";
  }
  return out;
}

}  // namespace devmine::synth
