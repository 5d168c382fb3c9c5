#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "contagion/core.hpp"
#include "contagion/distributions.hpp"

namespace contagion {

// Estimates each banned cheater's cheating interval [onset, ban] from two
// daily performance features: kill ratio and mean time between consecutive
// kills. A day qualifies when kill_ratio >= kill_ratio_min AND
// mean_interkill_gap <= max_interkill_gap_secs; the earliest qualifying day
// on or before the ban is taken as the onset. Cheaters with no qualifying
// day (including days with a missing feature) fall back to ban - fallback_days.

struct DailyPerformance {
  PlayerId player;
  Date date = 0;
  int kills = 0;   // non-self kills by the player
  int deaths = 0;  // times the player died, self-kills included
  std::optional<double> kill_ratio;         // kills / (kills + deaths)
  std::optional<double> mean_interkill_gap;  // seconds; needs >= 2 kills in one match
};

enum class OnsetMethod { rule_based, modal_fallback };

inline const char* to_string(OnsetMethod m) {
  return m == OnsetMethod::rule_based ? "rule_based" : "modal_fallback";
}

inline std::optional<OnsetMethod> onset_method_from_string(const std::string& s) {
  if (s == "rule_based") return OnsetMethod::rule_based;
  if (s == "modal_fallback") return OnsetMethod::modal_fallback;
  return std::nullopt;
}

struct CheaterProfile {
  PlayerId player;
  Date ban_date = 0;
  Date onset_date = 0;  // onset_date <= ban_date; interval is inclusive
  OnsetMethod estimation_method = OnsetMethod::modal_fallback;
};

struct OnsetConfig {
  double kill_ratio_min = 0.8;
  double max_interkill_gap_secs = 140.0;
  int fallback_days = 2;
};

inline std::vector<DailyPerformance> daily_performance(const Dataset& dataset,
                                                       const PlayerId& player) {
  struct DayAccum {
    int kills = 0;
    int deaths = 0;
    // per (date, match) kill times of this player, for the gap feature
    std::map<std::size_t, std::vector<Timestamp>> kill_times;
  };
  std::map<Date, DayAccum> days;

  const auto it = dataset.matches_by_player.find(player);
  if (it == dataset.matches_by_player.end()) return {};

  for (const std::size_t mi : it->second) {
    const MatchRecord& m = dataset.matches[mi];
    days[date_of(m.start_time)];  // played that day even with no events
    for (const auto& k : m.kills) {
      const Date d = date_of(k.time);
      if (k.victim == player) days[d].deaths += 1;
      if (k.killer == player && !k.self_kill) {
        auto& acc = days[d];
        acc.kills += 1;
        acc.kill_times[mi].push_back(k.time);
      }
    }
  }

  std::vector<DailyPerformance> out;
  out.reserve(days.size());
  for (const auto& [date, acc] : days) {
    DailyPerformance dp;
    dp.player = player;
    dp.date = date;
    dp.kills = acc.kills;
    dp.deaths = acc.deaths;
    if (acc.kills + acc.deaths > 0) {
      dp.kill_ratio = static_cast<double>(acc.kills) / (acc.kills + acc.deaths);
    }
    // Mean over that day's matches of the per-match mean gap between
    // consecutive kills; matches with fewer than two kills are excluded.
    double gap_sum = 0.0;
    int gap_matches = 0;
    for (const auto& [mi, times] : acc.kill_times) {
      if (times.size() < 2) continue;
      double total = 0.0;
      for (std::size_t i = 1; i < times.size(); ++i) {
        total += static_cast<double>(times[i] - times[i - 1]);
      }
      gap_sum += total / static_cast<double>(times.size() - 1);
      ++gap_matches;
    }
    if (gap_matches > 0) dp.mean_interkill_gap = gap_sum / gap_matches;
    out.push_back(std::move(dp));
  }
  return out;
}

inline CheaterProfile estimate_onset(const std::vector<DailyPerformance>& performances,
                                     const BanRecord& ban, const OnsetConfig& config = {}) {
  CheaterProfile profile;
  profile.player = ban.player;
  profile.ban_date = ban.ban_date;

  std::optional<Date> earliest;
  for (const auto& dp : performances) {
    if (dp.date > ban.ban_date) continue;
    if (!dp.kill_ratio || !dp.mean_interkill_gap) continue;
    if (*dp.kill_ratio >= config.kill_ratio_min &&
        *dp.mean_interkill_gap <= config.max_interkill_gap_secs) {
      if (!earliest || dp.date < *earliest) earliest = dp.date;
    }
  }
  if (earliest) {
    profile.onset_date = *earliest;
    profile.estimation_method = OnsetMethod::rule_based;
  } else {
    profile.onset_date = ban.ban_date - config.fallback_days;
    profile.estimation_method = OnsetMethod::modal_fallback;
  }
  return profile;
}

inline std::vector<CheaterProfile> estimate_all_onsets(const Dataset& dataset,
                                                       const std::vector<BanRecord>& bans,
                                                       const OnsetConfig& config = {}) {
  std::vector<CheaterProfile> out;
  out.reserve(bans.size());
  for (const auto& ban : bans) {
    out.push_back(estimate_onset(daily_performance(dataset, ban.player), ban, config));
  }
  return out;
}

struct WelchResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
};

// Welch's two-independent-samples t-test with the Welch-Satterthwaite df
// and a two-sided p-value.
inline WelchResult welch_t_test(std::span<const double> sample_a,
                                std::span<const double> sample_b) {
  const auto mean_and_var = [](std::span<const double> s) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair<double, double>{mean, ss / static_cast<double>(s.size() - 1)};
  };
  if (sample_a.size() < 2 || sample_b.size() < 2) {
    throw std::invalid_argument("welch_t_test: insufficient variance");
  }
  const auto [mean_a, var_a] = mean_and_var(sample_a);
  const auto [mean_b, var_b] = mean_and_var(sample_b);
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw std::invalid_argument("welch_t_test: insufficient variance");
  }
  const double na = static_cast<double>(sample_a.size());
  const double nb = static_cast<double>(sample_b.size());
  const double sa = var_a / na;
  const double sb = var_b / nb;
  WelchResult r;
  r.t_statistic = (mean_a - mean_b) / std::sqrt(sa + sb);
  r.degrees_of_freedom = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p_value = student_t_two_sided_p(r.t_statistic, r.degrees_of_freedom);
  return r;
}

}  // namespace contagion
