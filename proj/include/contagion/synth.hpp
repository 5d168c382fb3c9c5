#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "contagion/core.hpp"
#include "contagion/exposure.hpp"
#include "contagion/rng.hpp"
#include "contagion/telemetry.hpp"

namespace contagion {

// Synthetic match generator with plantable ground truth.
//
// Each match is a random elimination order biased by per-player skill, with
// active cheaters' weight multiplied by cheater_kill_boost and kill times
// spaced by exponential gaps. Cheating adoption is driven by seed cheaters
// (cheater_rate), an optional baseline hazard, and an optional planted
// contagion rule evaluated on the generator's own exposure ledger. Bans lag
// the true onset by ban_lag_days, which matches the onset fallback so the
// estimated cheating interval is exactly recoverable.
//
// cheater_behavior selects the performance regime:
//  - calibrated:      kill ratios aim at the 0.77 / 0.40 cheater/non-cheater
//                     means with ~140 s / ~194 s inter-kill gaps;
//  - super_threshold: every active cheater day is guaranteed to satisfy the
//                     onset rule (>= 4 kills per match at <= 140 s gaps, one
//                     match per day, non-cheaters capped at one kill);
//  - sub_threshold:   all inter-kill gaps exceed 140 s, so no day of any
//                     player can satisfy the onset rule.

struct ContagionRule {
  int min_observed = 2;
  int min_victimized = 2;
  double adoption_probability = 0.0;
  double baseline_adoption = 0.0;
};

enum class CheaterBehavior { calibrated, super_threshold, sub_threshold };

struct SynthConfig {
  int days = 31;
  int matches_per_day = 500;
  int players = 20000;
  double solo_fraction = 0.108;
  double duo_fraction = 0.314;
  double squad_fraction = 0.578;
  int match_size = 20;
  double cheater_rate = 0.003;
  double cheater_kill_boost = 2.8;
  std::optional<ContagionRule> contagion;
  std::uint64_t seed = 0;

  int ban_lag_days = 2;
  int delta_days = 7;
  double activity_rate = 0.35;
  double skill_spread = 0.35;     // sd of log skill
  double self_kill_rate = 0.05;
  double team_homophily = 0.0;    // chance a match clusters cheaters into teams
  CheaterBehavior cheater_behavior = CheaterBehavior::calibrated;
  ExposureDefinition ledger_definition = ExposureDefinition::simple();
  bool record_ledger = true;
  Date first_date = days_from_civil(2020, 1, 1);
};

struct PlayerTruth {
  bool cheater = false;
  Date onset_date = 0;
  Date ban_date = 0;
  bool contagion_triggered = false;
};

struct LedgerEntry {
  int day = 0;  // day index from first_date
  std::uint32_t cheater = 0;
  ExposureKind kind = ExposureKind::observation;
};

struct GroundTruth {
  Date first_date = 0;
  std::vector<PlayerId> player_ids;
  std::vector<PlayerTruth> players;
  std::vector<std::vector<LedgerEntry>> ledger;  // per player, day order
};

namespace detail {

// Calibrated-mode gap scales; per-killer gaps are sums of the global gaps
// between that killer's consecutive kills, so these sit well below the
// 140 s / 194 s targets.
inline constexpr double kCheaterKillGapMean = 24.0;
inline constexpr double kNormalKillGapMean = 45.0;
inline constexpr double kMaxGapSeconds = 600.0;
inline constexpr int kSuperKillsPerCheater = 4;

struct SynthState {
  SplitMix64 rng;
  std::vector<double> skill;
  std::vector<Date> onset;  // relative day; kNever if never adopts
  std::vector<char> triggered;
  static constexpr Date kNever = std::numeric_limits<Date>::max();

  explicit SynthState(const SynthConfig& cfg) : rng(cfg.seed) {}
};

inline bool active_cheater_on(const SynthState& st, int player, int day, int ban_lag) {
  return st.onset[player] != SynthState::kNever && st.onset[player] <= day &&
         day <= st.onset[player] + ban_lag;
}

inline bool banned_before(const SynthState& st, int player, int day, int ban_lag) {
  return st.onset[player] != SynthState::kNever && st.onset[player] + ban_lag < day;
}

}  // namespace detail

inline std::pair<Dataset, GroundTruth> generate_dataset(const SynthConfig& cfg) {
  if (cfg.players < cfg.match_size) throw std::invalid_argument("match_size exceeds players");
  if (cfg.match_size < 2) throw std::invalid_argument("match_size must be >= 2");
  if (cfg.match_size > 100) throw std::invalid_argument("match_size exceeds 100");
  if (cfg.days < cfg.ban_lag_days + 1) throw std::invalid_argument("window shorter than ban lag");
  const double mix = cfg.solo_fraction + cfg.duo_fraction + cfg.squad_fraction;
  if (std::fabs(mix - 1.0) > 1e-9) throw std::invalid_argument("mode mix must sum to 1");
  const bool super = cfg.cheater_behavior == CheaterBehavior::super_threshold;
  if (super && cfg.match_size < detail::kSuperKillsPerCheater + 4) {
    throw std::invalid_argument("super_threshold needs match_size >= 8");
  }

  detail::SynthState st(cfg);
  st.skill.resize(cfg.players);
  st.onset.assign(cfg.players, detail::SynthState::kNever);
  st.triggered.assign(cfg.players, 0);
  for (int i = 0; i < cfg.players; ++i) {
    st.skill[i] = std::exp(cfg.skill_spread * st.rng.normal());
  }
  const int last_onset_day = cfg.days - 1 - cfg.ban_lag_days;
  for (int i = 0; i < cfg.players; ++i) {
    if (st.rng.bernoulli(cfg.cheater_rate)) {
      st.onset[i] = static_cast<Date>(st.rng.next_below(last_onset_day + 1));
    }
  }

  const bool want_ledger = cfg.record_ledger || cfg.contagion.has_value();
  GroundTruth truth;
  truth.first_date = cfg.first_date;
  truth.player_ids.resize(cfg.players);
  {
    std::size_t digits = 1;
    for (int v = cfg.players; v >= 10; v /= 10) ++digits;
    for (int i = 0; i < cfg.players; ++i) {
      std::string id = std::to_string(i);
      truth.player_ids[i] = "p" + std::string(digits - id.size(), '0') + id;
    }
  }
  truth.ledger.resize(want_ledger ? cfg.players : 0);

  std::vector<MatchRecord> matches;
  matches.reserve(static_cast<std::size_t>(cfg.days) * cfg.matches_per_day);
  std::uint64_t match_counter = 0;

  std::vector<int> pool;              // day's regular active players
  std::vector<int> day_cheaters;      // day's active cheaters (guarantee modes)
  std::vector<int> participants;
  std::vector<char> is_cheater;
  std::vector<int> death_order;
  std::vector<double> score;
  std::vector<char> alive;
  std::vector<int> team_of_part;
  std::vector<int> kills_taken;

  for (int day = 0; day < cfg.days; ++day) {
    pool.clear();
    day_cheaters.clear();
    for (int i = 0; i < cfg.players; ++i) {
      if (detail::banned_before(st, i, day, cfg.ban_lag_days)) continue;
      const bool cheating = detail::active_cheater_on(st, i, day, cfg.ban_lag_days);
      if (cheating) {
        // Cheaters grind while the tool lasts; in the guarantee modes they
        // get one deterministic placement per day instead of pool sampling.
        if (cfg.cheater_behavior == CheaterBehavior::calibrated) {
          pool.push_back(i);
        } else {
          day_cheaters.push_back(i);
        }
      } else if (st.rng.bernoulli(cfg.activity_rate)) {
        pool.push_back(i);
      }
    }

    for (int m = 0; m < cfg.matches_per_day; ++m) {
      participants.clear();
      if (cfg.cheater_behavior != CheaterBehavior::calibrated) {
        // Round-robin forced placement: active cheater c plays match c % M.
        for (std::size_t c = m; c < day_cheaters.size();
             c += static_cast<std::size_t>(cfg.matches_per_day)) {
          participants.push_back(day_cheaters[c]);
        }
      }
      const int size = std::min<int>(cfg.match_size, static_cast<int>(pool.size()) +
                                                         static_cast<int>(participants.size()));
      if (size < 2 || static_cast<int>(participants.size()) >= size) continue;
      const int fill = size - static_cast<int>(participants.size());
      for (int i = 0; i < fill; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) + st.rng.next_below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        participants.push_back(pool[i]);
      }
      const double mode_draw = st.rng.next_double();
      Mode mode = Mode::squad;
      if (mode_draw < cfg.solo_fraction) {
        mode = Mode::solo;
      } else if (mode_draw < cfg.solo_fraction + cfg.duo_fraction) {
        mode = Mode::duo;
      }
      const int team_size = team_size_limit(mode);

      shuffle_all(participants, st.rng);
      is_cheater.assign(participants.size(), 0);
      int cheater_count = 0;
      for (std::size_t i = 0; i < participants.size(); ++i) {
        if (detail::active_cheater_on(st, participants[i], day, cfg.ban_lag_days)) {
          is_cheater[i] = 1;
          ++cheater_count;
        }
      }
      if (super && cheater_count * (detail::kSuperKillsPerCheater + 1) + 1 >
                       static_cast<int>(participants.size())) {
        continue;  // not enough victims to honor the per-cheater kill floor
      }
      if (cheater_count > 0 && cfg.team_homophily > 0.0 &&
          st.rng.bernoulli(cfg.team_homophily)) {
        std::vector<int> reordered;
        reordered.reserve(participants.size());
        for (std::size_t i = 0; i < participants.size(); ++i) {
          if (is_cheater[i]) reordered.push_back(participants[i]);
        }
        for (std::size_t i = 0; i < participants.size(); ++i) {
          if (!is_cheater[i]) reordered.push_back(participants[i]);
        }
        participants.swap(reordered);
        for (std::size_t i = 0; i < participants.size(); ++i) {
          is_cheater[i] = i < static_cast<std::size_t>(cheater_count) ? 1 : 0;
        }
      }

      const int n = static_cast<int>(participants.size());
      team_of_part.resize(n);
      for (int i = 0; i < n; ++i) team_of_part[i] = i / team_size;

      // Elimination order: everyone but one survivor dies, exactly once.
      death_order.clear();
      if (super) {
        std::vector<int> normals;
        std::vector<int> cheats;
        for (int i = 0; i < n; ++i) (is_cheater[i] ? cheats : normals).push_back(i);
        shuffle_all(normals, st.rng);
        const int reserved = cheater_count * detail::kSuperKillsPerCheater;
        death_order.assign(normals.begin(), normals.begin() + reserved);
        std::vector<int> tail(normals.begin() + reserved, normals.end());
        tail.insert(tail.end(), cheats.begin(), cheats.end());
        shuffle_all(tail, st.rng);
        tail.pop_back();  // survivor
        death_order.insert(death_order.end(), tail.begin(), tail.end());
      } else {
        score.resize(n);
        for (int i = 0; i < n; ++i) {
          double w = st.skill[participants[i]];
          if (is_cheater[i]) w *= cfg.cheater_kill_boost;
          score[i] = st.rng.exponential(1.0) * w;
        }
        death_order.resize(n);
        for (int i = 0; i < n; ++i) death_order[i] = i;
        std::sort(death_order.begin(), death_order.end(),
                  [&](int a, int b) { return score[a] != score[b] ? score[a] < score[b]
                                                                  : a < b; });
        death_order.pop_back();  // survivor
      }

      alive.assign(n, 1);
      kills_taken.assign(n, 0);
      MatchRecord record;
      {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "m%09llu",
                      static_cast<unsigned long long>(match_counter++));
        record.match_id = buf;
      }
      record.mode = mode;
      record.teams.resize((n + team_size - 1) / team_size);
      for (int i = 0; i < n; ++i) {
        record.teams[team_of_part[i]].push_back(truth.player_ids[participants[i]]);
      }

      Timestamp t_rel = 60;
      int super_cursor = 0;
      for (std::size_t d = 0; d < death_order.size(); ++d) {
        const int victim = death_order[d];
        int killer = -1;
        double gap;
        if (super && d < static_cast<std::size_t>(cheater_count) *
                             detail::kSuperKillsPerCheater) {
          // Consecutive kill batches per cheater keep their gaps at 30 s.
          while (!is_cheater[super_cursor]) ++super_cursor;
          killer = super_cursor;
          if ((d + 1) % detail::kSuperKillsPerCheater == 0) ++super_cursor;
          gap = 30.0;
        } else {
          double total = 0.0;
          for (int i = 0; i < n; ++i) {
            if (!alive[i] || i == victim || team_of_part[i] == team_of_part[victim]) continue;
            if (super && (is_cheater[i] || kills_taken[i] > 0)) continue;
            total += st.skill[participants[i]] *
                     (is_cheater[i] ? cfg.cheater_kill_boost : 1.0);
          }
          if (total <= 0.0 || (!super && st.rng.bernoulli(cfg.self_kill_rate))) {
            killer = victim;  // zone or bomb death
          } else {
            double pick = st.rng.next_double() * total;
            for (int i = 0; i < n; ++i) {
              if (!alive[i] || i == victim || team_of_part[i] == team_of_part[victim]) continue;
              if (super && (is_cheater[i] || kills_taken[i] > 0)) continue;
              pick -= st.skill[participants[i]] *
                      (is_cheater[i] ? cfg.cheater_kill_boost : 1.0);
              if (pick <= 0.0) {
                killer = i;
                break;
              }
            }
            if (killer < 0) killer = victim;
          }
          double mean = detail::kNormalKillGapMean;
          if (killer >= 0 && killer != victim && is_cheater[killer]) {
            mean = detail::kCheaterKillGapMean;
          }
          if (cfg.cheater_behavior == CheaterBehavior::sub_threshold) {
            gap = 150.0 + std::min(st.rng.exponential(50.0), 300.0);
          } else if (super) {
            gap = 200.0;
          } else {
            gap = std::min(st.rng.exponential(mean), detail::kMaxGapSeconds);
          }
        }
        t_rel += std::max<Timestamp>(1, static_cast<Timestamp>(std::llround(gap)));
        if (killer != victim) kills_taken[killer] += 1;
        alive[victim] = 0;
        KillEvent ev;
        ev.time = t_rel;
        ev.killer = truth.player_ids[participants[killer]];
        ev.victim = truth.player_ids[participants[victim]];
        ev.self_kill = killer == victim;
        record.kills.push_back(std::move(ev));
      }

      const Timestamp duration = t_rel + 60;
      const Timestamp offset = static_cast<Timestamp>(
          st.rng.next_below(static_cast<std::uint64_t>(kSecondsPerDay - duration)));
      record.start_time = day_start(cfg.first_date + day) + offset;
      record.end_time = record.start_time + duration;
      for (auto& k : record.kills) k.time += record.start_time;

      if (want_ledger && cheater_count > 0) {
        std::unordered_set<PlayerId> cheater_labels;
        for (int i = 0; i < n; ++i) {
          if (is_cheater[i]) cheater_labels.insert(truth.player_ids[participants[i]]);
        }
        const MatchFrame frame = build_match_frame(record, cheater_labels);
        for (const auto& pe : detect_exposures_frame(frame, cfg.ledger_definition)) {
          // frame positions follow team order, which is participant order here
          const int subject = participants[pe.subject];
          const int cheater = participants[pe.cheater];
          truth.ledger[subject].push_back(
              {day, static_cast<std::uint32_t>(cheater), pe.kind});
        }
      }

      matches.push_back(std::move(record));
    }

    // End-of-day adoption: planted rule on the trailing delta-day ledger,
    // baseline hazard otherwise; adopters start cheating the next day.
    if (cfg.contagion && day + 1 <= last_onset_day) {
      const ContagionRule& rule = *cfg.contagion;
      for (int i = 0; i < cfg.players; ++i) {
        if (st.onset[i] != detail::SynthState::kNever) continue;
        bool triggered = false;
        if (!truth.ledger.empty() && !truth.ledger[i].empty()) {
          const int window_start = day - cfg.delta_days + 1;
          std::vector<std::uint32_t> observed;
          std::vector<std::uint32_t> victimized;
          for (const auto& entry : truth.ledger[i]) {
            if (entry.day < window_start || entry.day > day) continue;
            auto& bucket = entry.kind == ExposureKind::observation ? observed : victimized;
            if (std::find(bucket.begin(), bucket.end(), entry.cheater) == bucket.end()) {
              bucket.push_back(entry.cheater);
            }
          }
          triggered = static_cast<int>(observed.size()) >= rule.min_observed &&
                      static_cast<int>(victimized.size()) >= rule.min_victimized;
        } else {
          triggered = rule.min_observed == 0 && rule.min_victimized == 0;
        }
        const double p = triggered ? rule.adoption_probability : rule.baseline_adoption;
        if (p > 0.0 && st.rng.bernoulli(p)) {
          st.onset[i] = day + 1;
          st.triggered[i] = triggered ? 1 : 0;
        }
      }
    }
  }

  std::vector<BanRecord> bans;
  truth.players.resize(cfg.players);
  for (int i = 0; i < cfg.players; ++i) {
    if (st.onset[i] == detail::SynthState::kNever) continue;
    PlayerTruth& pt = truth.players[i];
    pt.cheater = true;
    pt.onset_date = cfg.first_date + st.onset[i];
    pt.ban_date = pt.onset_date + cfg.ban_lag_days;
    pt.contagion_triggered = st.triggered[i] != 0;
    bans.push_back({truth.player_ids[i], pt.ban_date});
  }

  return {assemble_dataset(std::move(matches), std::move(bans)), std::move(truth)};
}

struct EmitPaths {
  std::filesystem::path matches;
  std::filesystem::path bans;
};

// Writes the dataset in the telemetry formats; deterministic bytes for a
// fixed generator seed.
inline EmitPaths emit_dataset_files(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  EmitPaths paths{dir / "matches.jsonl", dir / "bans.csv"};
  {
    std::ofstream out(paths.matches, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + paths.matches.string());
    write_match_log(out, dataset.matches);
  }
  {
    std::ofstream out(paths.bans, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + paths.bans.string());
    write_ban_list(out, dataset.bans);
  }
  return paths;
}

}  // namespace contagion
