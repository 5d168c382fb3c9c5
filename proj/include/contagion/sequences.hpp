#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "contagion/core.hpp"
#include "contagion/exposure.hpp"
#include "contagion/onset.hpp"

namespace contagion {

// Contagion event sequences: a non-cheater observes n_o cheaters and/or is
// killed by n_v cheaters (distinct cheaters, overlap allowed) within the
// delta-day window before their own cheating onset.
//
// Two counting modes:
//  - per-cheater: obs-only sequences weighted by n_o, vict-only by n_v, and
//    observation-and-victimization by min(n_o, n_v);
//  - per-player: one count per adopter in a 3x3 {0, 1, 2+} bucket grid.

struct SequenceConfig {
  int delta_days = 7;
  ExposureDefinition definition = ExposureDefinition::simple();
};

struct ExposureProfile {
  PlayerId adopter;
  Timestamp onset_time = 0;  // start of the onset date
  int n_o = 0;               // distinct cheaters observed in window
  int n_v = 0;               // distinct cheaters who killed the adopter in window
};

// Window is half-open [onset - delta, onset): exposures at or after the
// onset instant do not count.
inline ExposureProfile exposure_profile(const CheaterProfile& adopter,
                                        const std::vector<ExposureEvent>& exposures,
                                        const SequenceConfig& config) {
  ExposureProfile profile;
  profile.adopter = adopter.player;
  profile.onset_time = day_start(adopter.onset_date);
  const Timestamp window_start =
      profile.onset_time - static_cast<Timestamp>(config.delta_days) * kSecondsPerDay;

  std::vector<PlayerId> observed;
  std::vector<PlayerId> victimized_by;
  for (const auto& e : exposures) {
    if (e.subject != adopter.player) continue;
    if (e.time < window_start || e.time >= profile.onset_time) continue;
    auto& bucket = e.kind == ExposureKind::observation ? observed : victimized_by;
    if (std::find(bucket.begin(), bucket.end(), e.cheater) == bucket.end()) {
      bucket.push_back(e.cheater);
    }
  }
  profile.n_o = static_cast<int>(observed.size());
  profile.n_v = static_cast<int>(victimized_by.size());
  return profile;
}

inline std::vector<ExposureProfile> build_profiles(const std::vector<CheaterProfile>& adopters,
                                                   const std::vector<ExposureEvent>& exposures,
                                                   const SequenceConfig& config) {
  std::unordered_map<PlayerId, std::vector<ExposureEvent>> by_subject;
  for (const auto& e : exposures) by_subject[e.subject].push_back(e);
  std::vector<ExposureProfile> out;
  out.reserve(adopters.size());
  static const std::vector<ExposureEvent> kNone;
  for (const auto& adopter : adopters) {
    const auto it = by_subject.find(adopter.player);
    out.push_back(exposure_profile(adopter, it == by_subject.end() ? kNone : it->second, config));
  }
  return out;
}

struct CategoryCounts {
  std::int64_t obs_only = 0;      // H1
  std::int64_t vict_only = 0;     // H2
  std::int64_t obs_and_vict = 0;  // H3

  bool operator==(const CategoryCounts&) const = default;
};

// Weighting of a profile with both exposure kinds: complete pairings
// min(n_o, n_v) by default, with the victimization count as an alternative.
enum class ObsVictWeighting { min_pairing, victimization_count };

inline CategoryCounts count_per_cheater(
    const std::vector<ExposureProfile>& profiles,
    ObsVictWeighting weighting = ObsVictWeighting::min_pairing) {
  CategoryCounts c;
  for (const auto& p : profiles) {
    if (p.n_o > 0 && p.n_v == 0) {
      c.obs_only += p.n_o;
    } else if (p.n_o == 0 && p.n_v > 0) {
      c.vict_only += p.n_v;
    } else if (p.n_o > 0 && p.n_v > 0) {
      c.obs_and_vict +=
          weighting == ObsVictWeighting::min_pairing ? std::min(p.n_o, p.n_v) : p.n_v;
    }
  }
  return c;
}

// Bucket index for an exposure count: 0, 1, or 2+ (index 2).
inline int exposure_bucket(int n) { return n >= 2 ? 2 : n; }

inline const char* bucket_name(int b) {
  switch (b) {
    case 0: return "0";
    case 1: return "1";
    default: return "2+";
  }
}

struct BucketMatrix {
  // cells[n_o bucket][n_v bucket]; (0,0) is never populated
  std::array<std::array<std::int64_t, 3>, 3> cells{};

  std::int64_t& at(int bo, int bv) { return cells[bo][bv]; }
  std::int64_t at(int bo, int bv) const { return cells[bo][bv]; }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : cells)
      for (std::int64_t v : row) t += v;
    return t;
  }

  bool operator==(const BucketMatrix&) const = default;
};

inline BucketMatrix count_per_player(const std::vector<ExposureProfile>& profiles) {
  BucketMatrix m;
  for (const auto& p : profiles) {
    if (p.n_o == 0 && p.n_v == 0) continue;
    m.at(exposure_bucket(p.n_o), exposure_bucket(p.n_v)) += 1;
  }
  return m;
}

}  // namespace contagion
