#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "contagion/core.hpp"
#include "contagion/onset.hpp"

namespace contagion {

// Observation and victimization detection.
//
// Simple definition: observation when an active cheater's 2nd non-self kill
// falls strictly before the subject's exit; victimization on any non-self
// kill by an active cheater. Strict definition raises the observation
// threshold to 5 kills and requires the victim to be among the last 30% of
// survivors at the moment of the kill.
//
// Detection runs in position space (roster slots), so the same code path
// serves both the empirical network and every node-label permutation of it:
// kill topology, timestamps, and survivor timing are properties of positions,
// and relabeling only changes which player occupies each slot.

enum class ExposureKind { observation, victimization };

inline const char* to_string(ExposureKind k) {
  return k == ExposureKind::observation ? "observation" : "victimization";
}

struct ExposureDefinition {
  std::string name = "simple";
  int observation_min_kills = 2;
  std::optional<double> victimization_survivor_fraction;  // strict: 0.30
  bool teammates_observe = true;  // non-cheating teammates count as observers

  static ExposureDefinition simple() { return {}; }
  static ExposureDefinition strict() { return {"strict", 5, 0.30, true}; }
};

inline std::optional<ExposureDefinition> definition_from_name(const std::string& name) {
  if (name == "simple") return ExposureDefinition::simple();
  if (name == "strict") return ExposureDefinition::strict();
  return std::nullopt;
}

struct ExposureEvent {
  PlayerId subject;
  PlayerId cheater;
  MatchId match_id;
  ExposureKind kind = ExposureKind::observation;
  Timestamp time = 0;
};

// Players in the match whose cheating interval [onset, ban] (inclusive)
// contains the match start date.
inline std::unordered_set<PlayerId> active_cheaters(const MatchRecord& match,
                                                    const std::vector<CheaterProfile>& profiles) {
  std::unordered_set<PlayerId> roster;
  for (const auto& team : match.teams) roster.insert(team.begin(), team.end());
  const Date match_date = date_of(match.start_time);
  std::unordered_set<PlayerId> active;
  for (const auto& p : profiles) {
    if (p.onset_date <= match_date && match_date <= p.ban_date && roster.count(p.player)) {
      active.insert(p.player);
    }
  }
  return active;
}

// Position-space view of one match.
struct MatchFrame {
  struct Kill {
    Timestamp time;
    int killer;
    int victim;
    bool self;
  };
  Timestamp start_time = 0;
  Timestamp end_time = 0;
  std::vector<PlayerId> labels;     // position -> player occupying it
  std::vector<int> team_of;         // position -> team index
  std::vector<char> cheater_at;     // position -> active-cheater flag
  std::vector<Timestamp> exit_time;  // death time, or match end for survivors
  std::vector<Kill> kills;          // time order

  int player_count() const { return static_cast<int>(labels.size()); }
};

inline MatchFrame build_match_frame(const MatchRecord& match,
                                    const std::unordered_set<PlayerId>& cheaters) {
  MatchFrame f;
  f.start_time = match.start_time;
  f.end_time = match.end_time;
  std::unordered_map<PlayerId, int> pos_of;
  for (std::size_t t = 0; t < match.teams.size(); ++t) {
    for (const auto& p : match.teams[t]) {
      pos_of.emplace(p, static_cast<int>(f.labels.size()));
      f.labels.push_back(p);
      f.team_of.push_back(static_cast<int>(t));
      f.cheater_at.push_back(cheaters.count(p) ? 1 : 0);
    }
  }
  f.exit_time.assign(f.labels.size(), match.end_time);
  f.kills.reserve(match.kills.size());
  for (const auto& k : match.kills) {
    const auto killer = pos_of.find(k.killer);
    const auto victim = pos_of.find(k.victim);
    if (killer == pos_of.end() || victim == pos_of.end()) {
      throw std::invalid_argument("kill references player outside roster");
    }
    f.kills.push_back({k.time, killer->second, victim->second, k.self_kill});
    f.exit_time[victim->second] = k.time;
  }
  return f;
}

// [start, exit] for a player: exit is their death time if they die (self-kills
// included), otherwise the match end.
inline std::pair<Timestamp, Timestamp> in_game_interval(const MatchRecord& match,
                                                        const PlayerId& player) {
  bool in_roster = false;
  for (const auto& team : match.teams) {
    if (std::find(team.begin(), team.end(), player) != team.end()) {
      in_roster = true;
      break;
    }
  }
  if (!in_roster) throw std::invalid_argument("player '" + player + "' not in match roster");
  Timestamp exit = match.end_time;
  for (const auto& k : match.kills) {
    if (k.victim == player) {
      exit = k.time;
      break;
    }
  }
  return {match.start_time, exit};
}

// Fraction of the match's players not yet dead at instants strictly before
// `time`; the victim of a kill at `time` counts as still alive.
inline double survivor_fraction_at(const MatchRecord& match, Timestamp time) {
  const std::size_t total = match.player_count();
  if (total == 0) return 0.0;
  std::size_t dead_before = 0;
  for (const auto& k : match.kills) {
    if (k.time >= time) break;
    ++dead_before;
  }
  return static_cast<double>(total - dead_before) / static_cast<double>(total);
}

struct PositionExposure {
  int subject;
  int cheater;
  ExposureKind kind;
  Timestamp time;
};

inline std::vector<PositionExposure> detect_exposures_frame(const MatchFrame& f,
                                                            const ExposureDefinition& defn) {
  std::vector<PositionExposure> out;
  const int n = f.player_count();

  // Victimization: every non-self kill of a non-cheater by an active cheater;
  // under the strict definition only while at most the survivor-fraction
  // threshold of the match remains alive.
  int dead_before = 0;
  std::size_t i = 0;
  while (i < f.kills.size()) {
    // kills sharing a timestamp see the same strictly-before death count
    std::size_t j = i;
    while (j < f.kills.size() && f.kills[j].time == f.kills[i].time) ++j;
    for (std::size_t k = i; k < j; ++k) {
      const auto& kill = f.kills[k];
      if (kill.self || !f.cheater_at[kill.killer] || f.cheater_at[kill.victim]) continue;
      if (defn.victimization_survivor_fraction) {
        const double fraction = static_cast<double>(n - dead_before) / static_cast<double>(n);
        if (fraction > *defn.victimization_survivor_fraction) continue;
      }
      out.push_back({kill.victim, kill.killer, ExposureKind::victimization, kill.time});
    }
    dead_before += static_cast<int>(j - i);
    i = j;
  }

  // Observation: subject i observes cheater c at the time of c's k-th
  // non-self kill iff that time is strictly before i's exit. The subject's
  // own death by c is never the trigger for their own observation: if it
  // were the k-th kill, its time equals the subject's exit.
  for (int c = 0; c < n; ++c) {
    if (!f.cheater_at[c]) continue;
    int tally = 0;
    Timestamp kth_kill_time = 0;
    for (const auto& kill : f.kills) {
      if (kill.killer != c || kill.self) continue;
      if (++tally == defn.observation_min_kills) {
        kth_kill_time = kill.time;
        break;
      }
    }
    if (tally < defn.observation_min_kills) continue;
    for (int s = 0; s < n; ++s) {
      if (s == c || f.cheater_at[s]) continue;
      if (!defn.teammates_observe && f.team_of[s] == f.team_of[c]) continue;
      if (kth_kill_time < f.exit_time[s]) {
        out.push_back({s, c, ExposureKind::observation, kth_kill_time});
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const PositionExposure& a, const PositionExposure& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.cheater != b.cheater) return a.cheater < b.cheater;
    if (a.subject != b.subject) return a.subject < b.subject;
    return a.kind < b.kind;
  });
  return out;
}

inline std::vector<ExposureEvent> detect_exposures(const MatchRecord& match,
                                                   const std::unordered_set<PlayerId>& cheaters,
                                                   const ExposureDefinition& defn) {
  const MatchFrame frame = build_match_frame(match, cheaters);
  std::vector<ExposureEvent> out;
  for (const auto& pe : detect_exposures_frame(frame, defn)) {
    out.push_back({frame.labels[pe.subject], frame.labels[pe.cheater], match.match_id, pe.kind,
                   pe.time});
  }
  return out;
}

// Whole-dataset detection, concatenated in dataset match order.
inline std::vector<ExposureEvent> detect_all_exposures(const Dataset& dataset,
                                                       const std::vector<CheaterProfile>& profiles,
                                                       const ExposureDefinition& defn) {
  std::vector<ExposureEvent> out;
  for (const auto& match : dataset.matches) {
    const auto cheaters = active_cheaters(match, profiles);
    if (cheaters.empty()) continue;
    auto events = detect_exposures(match, cheaters, defn);
    out.insert(out.end(), std::make_move_iterator(events.begin()),
               std::make_move_iterator(events.end()));
  }
  return out;
}

}  // namespace contagion
