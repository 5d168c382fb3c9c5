#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "contagion/core.hpp"

namespace contagion {

// Match-log and ban-list ingestion.
//
// Match log: JSON Lines, one match per line:
//   {"match_id": "...", "mode": "solo|duo|squad", "start": <epoch s>,
//    "end": <epoch s>, "teams": [["p1","p2"], ...],
//    "kills": [{"t": <epoch s>, "killer": "p1", "victim": "p2"}, ...]}
// Ban list: CSV with header "player,ban_date", ISO-8601 dates.
//
// Each line parses independently; bad records are rejected with a
// line-number diagnostic and never abort the stream.

struct ParseDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct MatchParseResult {
  std::vector<MatchRecord> matches;
  std::vector<ParseDiagnostic> errors;
};

struct BanParseResult {
  std::vector<BanRecord> bans;
  std::vector<ParseDiagnostic> errors;
};

// Checks every MatchRecord invariant; returns an empty string when valid.
inline std::string validate_match(const MatchRecord& m) {
  if (m.match_id.empty()) return "empty match_id";
  if (m.end_time < m.start_time) return "end before start";
  if (m.teams.empty()) return "no teams";

  std::unordered_set<PlayerId> roster;
  const int limit = team_size_limit(m.mode);
  for (const auto& team : m.teams) {
    if (team.empty()) return "empty roster";
    if (static_cast<int>(team.size()) > limit)
      return "team larger than " + std::string(to_string(m.mode)) + " limit";
    for (const auto& p : team) {
      if (p.empty()) return "empty player id";
      if (!roster.insert(p).second) return "player '" + p + "' in two rosters";
    }
  }
  if (roster.size() > 100) return "more than 100 players";

  Timestamp prev = m.start_time;
  std::unordered_set<PlayerId> dead;
  for (const auto& k : m.kills) {
    if (k.self_kill != (k.killer == k.victim)) return "self_kill flag inconsistent";
    if (k.time < m.start_time || k.time > m.end_time) return "kill outside match interval";
    if (k.time < prev) return "kills not time-ordered";
    prev = k.time;
    if (!roster.count(k.killer)) return "killer '" + k.killer + "' not in roster";
    if (!roster.count(k.victim)) return "victim '" + k.victim + "' not in roster";
    if (!dead.insert(k.victim).second) return "duplicate death of '" + k.victim + "'";
  }
  return {};
}

namespace detail {

inline bool parse_match_line(const std::string& line, MatchRecord& out, std::string& err) {
  const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    err = "not a JSON object";
    return false;
  }
  try {
    out.match_id = j.at("match_id").get<std::string>();
    const auto mode = mode_from_string(j.at("mode").get<std::string>());
    if (!mode) {
      err = "unknown mode";
      return false;
    }
    out.mode = *mode;
    out.start_time = j.at("start").get<Timestamp>();
    out.end_time = j.at("end").get<Timestamp>();
    out.teams.clear();
    for (const auto& team : j.at("teams")) {
      out.teams.push_back(team.get<std::vector<PlayerId>>());
    }
    out.kills.clear();
    for (const auto& kill : j.at("kills")) {
      KillEvent ev;
      ev.time = kill.at("t").get<Timestamp>();
      ev.killer = kill.at("killer").get<std::string>();
      ev.victim = kill.at("victim").get<std::string>();
      ev.self_kill = ev.killer == ev.victim;
      out.kills.push_back(std::move(ev));
    }
  } catch (const nlohmann::json::exception& e) {
    err = e.what();
    return false;
  }
  // Tolerate unordered kill lists from upstream producers.
  std::stable_sort(out.kills.begin(), out.kills.end(),
                   [](const KillEvent& a, const KillEvent& b) { return a.time < b.time; });
  err = validate_match(out);
  return err.empty();
}

}  // namespace detail

inline MatchParseResult parse_match_log(std::istream& in) {
  MatchParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    MatchRecord record;
    std::string err;
    if (detail::parse_match_line(line, record, err)) {
      result.matches.push_back(std::move(record));
    } else {
      result.errors.push_back({line_no, err});
    }
  }
  return result;
}

inline BanParseResult load_ban_list(std::istream& in) {
  BanParseResult result;
  std::map<PlayerId, Date> earliest;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "player,ban_date") continue;  // header optional
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      result.errors.push_back({line_no, "expected player,ban_date"});
      continue;
    }
    const PlayerId player = line.substr(0, comma);
    const auto date = parse_date(line.substr(comma + 1));
    if (!date) {
      result.errors.push_back({line_no, "unparseable date '" + line.substr(comma + 1) + "'"});
      continue;
    }
    // Duplicate rows collapse to the earliest ban date.
    auto [it, inserted] = earliest.emplace(player, *date);
    if (!inserted && *date < it->second) it->second = *date;
  }
  for (const auto& [player, date] : earliest) result.bans.push_back({player, date});
  return result;
}

// Sorts, indexes, and summarizes. Deterministic and order-independent in the
// input permutation; banned players absent from matches produce warnings.
inline Dataset assemble_dataset(std::vector<MatchRecord> matches, std::vector<BanRecord> bans,
                                std::vector<std::string>* warnings = nullptr) {
  Dataset ds;
  ds.matches = std::move(matches);
  std::sort(ds.matches.begin(), ds.matches.end(), [](const MatchRecord& a, const MatchRecord& b) {
    if (a.start_time != b.start_time) return a.start_time < b.start_time;
    return a.match_id < b.match_id;
  });

  std::map<PlayerId, Date> ban_map;
  for (const auto& b : bans) {
    auto [it, inserted] = ban_map.emplace(b.player, b.ban_date);
    if (!inserted && b.ban_date < it->second) it->second = b.ban_date;
  }
  ds.bans.clear();
  for (const auto& [player, date] : ban_map) ds.bans.push_back({player, date});

  std::unordered_set<MatchId> seen_ids;
  bool have_window = false;
  for (std::size_t i = 0; i < ds.matches.size(); ++i) {
    const auto& m = ds.matches[i];
    if (!seen_ids.insert(m.match_id).second && warnings) {
      warnings->push_back("duplicate match_id '" + m.match_id + "'");
    }
    const Date d = date_of(m.start_time);
    if (!have_window) {
      ds.window_first = ds.window_last = d;
      have_window = true;
    } else {
      ds.window_first = std::min(ds.window_first, d);
      ds.window_last = std::max(ds.window_last, d);
    }
    for (const auto& team : m.teams) {
      for (const auto& p : team) ds.matches_by_player[p].push_back(i);
    }
    ds.stats.kill_count += m.kills.size();
  }
  for (const auto& b : ds.bans) {
    if (!have_window) {
      ds.window_first = ds.window_last = b.ban_date;
      have_window = true;
    } else {
      ds.window_first = std::min(ds.window_first, b.ban_date);
      ds.window_last = std::max(ds.window_last, b.ban_date);
    }
    if (warnings && !ds.matches_by_player.count(b.player)) {
      warnings->push_back("banned player '" + b.player + "' appears in no match");
    }
  }
  ds.stats.match_count = ds.matches.size();
  ds.stats.player_count = ds.matches_by_player.size();
  return ds;
}

inline nlohmann::json match_to_json(const MatchRecord& m) {
  nlohmann::json j;
  j["match_id"] = m.match_id;
  j["mode"] = to_string(m.mode);
  j["start"] = m.start_time;
  j["end"] = m.end_time;
  j["teams"] = m.teams;
  auto& kills = j["kills"] = nlohmann::json::array();
  for (const auto& k : m.kills) {
    kills.push_back({{"t", k.time}, {"killer", k.killer}, {"victim", k.victim}});
  }
  return j;
}

inline void write_match_log(std::ostream& out, const std::vector<MatchRecord>& matches) {
  for (const auto& m : matches) out << match_to_json(m).dump() << '\n';
}

inline void write_ban_list(std::ostream& out, const std::vector<BanRecord>& bans) {
  out << "player,ban_date\n";
  for (const auto& b : bans) out << b.player << ',' << format_date(b.ban_date) << '\n';
}

// Canonical single-file dataset: typed JSON lines, summary first, matches in
// sorted order, then bans. Serialize -> parse -> serialize is byte-stable.
inline void write_dataset(std::ostream& out, const Dataset& ds) {
  nlohmann::json summary;
  summary["type"] = "summary";
  summary["matches"] = ds.stats.match_count;
  summary["players"] = ds.stats.player_count;
  summary["kills"] = ds.stats.kill_count;
  summary["window"] = {format_date(ds.window_first), format_date(ds.window_last)};
  out << summary.dump() << '\n';
  for (const auto& m : ds.matches) {
    nlohmann::json j = match_to_json(m);
    j["type"] = "match";
    out << j.dump() << '\n';
  }
  for (const auto& b : ds.bans) {
    nlohmann::json j;
    j["type"] = "ban";
    j["player"] = b.player;
    j["ban_date"] = format_date(b.ban_date);
    out << j.dump() << '\n';
  }
}

inline Dataset read_dataset(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  std::vector<MatchRecord> matches;
  std::vector<BanRecord> bans;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": not JSON");
    }
    const std::string type = j.value("type", "match");
    if (type == "summary") continue;  // recomputed on assembly
    if (type == "ban") {
      const auto date = parse_date(j.at("ban_date").get<std::string>());
      if (!date) {
        throw std::runtime_error("dataset line " + std::to_string(line_no) + ": bad ban_date");
      }
      bans.push_back({j.at("player").get<std::string>(), *date});
      continue;
    }
    MatchRecord record;
    std::string err;
    if (!detail::parse_match_line(line, record, err)) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + err);
    }
    matches.push_back(std::move(record));
  }
  return assemble_dataset(std::move(matches), std::move(bans), warnings);
}

}  // namespace contagion
