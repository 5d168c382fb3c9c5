#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace contagion {

using PlayerId = std::string;
using MatchId = std::string;
using Timestamp = std::int64_t;  // epoch seconds, UTC
using Date = std::int32_t;       // days since 1970-01-01, UTC

inline constexpr Timestamp kSecondsPerDay = 86400;

enum class Mode { solo, duo, squad };

inline int team_size_limit(Mode mode) {
  switch (mode) {
    case Mode::solo: return 1;
    case Mode::duo: return 2;
    case Mode::squad: return 4;
  }
  return 0;
}

inline const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::solo: return "solo";
    case Mode::duo: return "duo";
    case Mode::squad: return "squad";
  }
  return "solo";
}

inline std::optional<Mode> mode_from_string(const std::string& s) {
  if (s == "solo") return Mode::solo;
  if (s == "duo") return Mode::duo;
  if (s == "squad") return Mode::squad;
  return std::nullopt;
}

// Civil-date conversions (proleptic Gregorian), Hinnant's algorithms.
inline Date days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<Date>(era * 146097 + static_cast<int>(doe) - 719468);
}

struct CivilDate {
  int year;
  int month;
  int day;
};

inline CivilDate civil_from_days(Date z) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

inline std::optional<Date> parse_date(const std::string& s) {
  // ISO-8601 calendar date, YYYY-MM-DD.
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
  }
  const int y = std::stoi(s.substr(0, 4));
  const int m = std::stoi(s.substr(5, 2));
  const int d = std::stoi(s.substr(8, 2));
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  const Date days = days_from_civil(y, m, d);
  const CivilDate back = civil_from_days(days);
  if (back.year != y || back.month != m || back.day != d) return std::nullopt;
  return days;
}

inline std::string format_date(Date d) {
  const CivilDate c = civil_from_days(d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

inline Date date_of(Timestamp ts) {
  // Floored division so pre-1970 instants still land on the right day.
  Timestamp q = ts / kSecondsPerDay;
  if (ts % kSecondsPerDay < 0) --q;
  return static_cast<Date>(q);
}

inline Timestamp day_start(Date d) { return static_cast<Timestamp>(d) * kSecondsPerDay; }

struct KillEvent {
  Timestamp time = 0;
  PlayerId killer;
  PlayerId victim;
  bool self_kill = false;  // killer == victim: suicide or zone/bomb death
};

struct MatchRecord {
  MatchId match_id;
  Mode mode = Mode::solo;
  Timestamp start_time = 0;
  Timestamp end_time = 0;
  std::vector<std::vector<PlayerId>> teams;
  std::vector<KillEvent> kills;  // time-ordered

  std::vector<PlayerId> roster() const {
    std::vector<PlayerId> out;
    for (const auto& team : teams) out.insert(out.end(), team.begin(), team.end());
    return out;
  }

  std::size_t player_count() const {
    std::size_t n = 0;
    for (const auto& team : teams) n += team.size();
    return n;
  }
};

struct BanRecord {
  PlayerId player;
  Date ban_date = 0;
};

struct DatasetStats {
  std::size_t match_count = 0;
  std::size_t player_count = 0;
  std::size_t kill_count = 0;
};

// Canonical in-memory dataset. Matches sorted by (start_time, match_id);
// read-only after assembly and safe to share across threads.
struct Dataset {
  std::vector<MatchRecord> matches;
  std::vector<BanRecord> bans;  // sorted by player, one row per player
  Date window_first = 0;
  Date window_last = 0;
  DatasetStats stats;
  std::unordered_map<PlayerId, std::vector<std::size_t>> matches_by_player;

  bool empty() const { return matches.empty() && bans.empty(); }
};

}  // namespace contagion
