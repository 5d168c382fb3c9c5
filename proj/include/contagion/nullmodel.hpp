#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "contagion/core.hpp"
#include "contagion/exposure.hpp"
#include "contagion/rng.hpp"
#include "contagion/sequences.hpp"

namespace contagion {

// Constrained node-label permutation null model: per match, reshuffle player
// ids within cells that share team and active-cheater status, keeping the
// kill structure, timestamps, and roster positions fixed. Adoption attributes
// (onset, ban) travel with the labels.
//
// The ensemble detects exposures once per match in position space and maps
// positions through each replicate's label assignment; the empirical counts
// use the identity assignment of the same path. This is equivalent to
// re-running detection on explicitly relabeled matches (survivor timing and
// kill tallies are position properties), which the test suite asserts.

struct PermutationConfig {
  int n_r = 1000;
  std::uint64_t master_seed = 0;
  // Relaxed variant: cheaters in team modes may swap across teams.
  bool cross_team_cheater_swap = false;
};

struct PermutationCell {
  MatchId match_id;
  std::vector<PlayerId> members;
};

struct LabelMapping {
  MatchId match_id;
  std::unordered_map<PlayerId, PlayerId> map;  // identity outside the map

  const PlayerId& operator()(const PlayerId& p) const {
    const auto it = map.find(p);
    return it == map.end() ? p : it->second;
  }
};

inline std::vector<PermutationCell> permutation_cells(const MatchRecord& match,
                                                      const std::unordered_set<PlayerId>& cheaters,
                                                      bool cross_team_cheater_swap = false) {
  std::vector<PermutationCell> cells;
  const bool solo = match.mode == Mode::solo;
  const bool pool_cheaters = solo || cross_team_cheater_swap;

  PermutationCell cheater_pool{match.match_id, {}};
  if (solo) {
    PermutationCell rest{match.match_id, {}};
    for (const auto& team : match.teams) {
      for (const auto& p : team) (cheaters.count(p) ? cheater_pool : rest).members.push_back(p);
    }
    if (!rest.members.empty()) cells.push_back(std::move(rest));
  } else {
    for (const auto& team : match.teams) {
      PermutationCell team_cheaters{match.match_id, {}};
      PermutationCell team_rest{match.match_id, {}};
      for (const auto& p : team) {
        (cheaters.count(p) ? team_cheaters : team_rest).members.push_back(p);
      }
      if (!team_cheaters.members.empty()) {
        if (pool_cheaters) {
          cheater_pool.members.insert(cheater_pool.members.end(), team_cheaters.members.begin(),
                                      team_cheaters.members.end());
        } else {
          cells.push_back(std::move(team_cheaters));
        }
      }
      if (!team_rest.members.empty()) cells.push_back(std::move(team_rest));
    }
  }
  if (!cheater_pool.members.empty()) cells.push_back(std::move(cheater_pool));
  return cells;
}

// Independent uniform permutation within each cell.
inline LabelMapping permute_match(const MatchRecord& match,
                                  const std::vector<PermutationCell>& cells, SplitMix64& rng) {
  LabelMapping mapping;
  mapping.match_id = match.match_id;
  for (const auto& cell : cells) {
    std::vector<PlayerId> shuffled = cell.members;
    shuffle_all(shuffled, rng);
    for (std::size_t i = 0; i < cell.members.size(); ++i) {
      mapping.map[cell.members[i]] = shuffled[i];
    }
  }
  return mapping;
}

inline MatchRecord apply_mapping(const MatchRecord& match, const LabelMapping& mapping) {
  MatchRecord out = match;
  for (auto& team : out.teams) {
    for (auto& p : team) p = mapping(p);
  }
  for (auto& k : out.kills) {
    k.killer = mapping(k.killer);
    k.victim = mapping(k.victim);
    k.self_kill = k.killer == k.victim;
  }
  return out;
}

struct CellCounts {
  CategoryCounts categories;
  BucketMatrix buckets;

  bool operator==(const CellCounts&) const = default;
};

// Canonical cell ids: the three H1-H3 categories, then the eight H4 bucket
// cells in row-major (n_o bucket, n_v bucket) order, (0,0) excluded.
inline std::vector<std::string> all_cell_ids() {
  std::vector<std::string> ids = {"obs_only", "vict_only", "obs_and_vict"};
  const char* token[3] = {"0", "1", "2plus"};
  for (int bo = 0; bo < 3; ++bo) {
    for (int bv = 0; bv < 3; ++bv) {
      if (bo == 0 && bv == 0) continue;
      ids.push_back(std::string("bucket_") + token[bo] + "_" + token[bv]);
    }
  }
  return ids;
}

inline std::int64_t cell_value(const CellCounts& c, const std::string& id) {
  if (id == "obs_only") return c.categories.obs_only;
  if (id == "vict_only") return c.categories.vict_only;
  if (id == "obs_and_vict") return c.categories.obs_and_vict;
  const char* token[3] = {"0", "1", "2plus"};
  for (int bo = 0; bo < 3; ++bo) {
    for (int bv = 0; bv < 3; ++bv) {
      if (id == std::string("bucket_") + token[bo] + "_" + token[bv]) return c.buckets.at(bo, bv);
    }
  }
  throw std::invalid_argument("unknown cell id '" + id + "'");
}

struct EnsembleResult {
  std::string definition;
  int delta_days = 7;
  int n_r = 0;
  std::uint64_t master_seed = 0;
  CellCounts empirical;
  std::vector<CellCounts> randomized;
};

namespace detail {

constexpr std::uint32_t kNoAdopter = std::numeric_limits<std::uint32_t>::max();

struct FrameContext {
  std::uint64_t match_key = 0;               // fnv1a64(match_id)
  std::vector<std::uint32_t> labels;         // position -> global player index
  std::vector<std::uint16_t> cell_positions;  // positions grouped by cell
  std::vector<std::uint16_t> cell_bounds;    // cell i spans [bounds[i], bounds[i+1])
  std::vector<PositionExposure> exposures;
};

struct EnsembleContext {
  Timestamp window_lo = 0;  // delta window size in seconds
  std::vector<FrameContext> frames;          // matches with at least one exposure
  std::vector<std::uint32_t> adopter_of;     // global player index -> adopter index
  std::vector<Timestamp> adopter_onset;      // adopter index -> onset instant
  std::size_t adopter_count = 0;
};

inline EnsembleContext build_ensemble_context(const Dataset& dataset,
                                              const std::vector<CheaterProfile>& profiles,
                                              const ExposureDefinition& defn,
                                              const SequenceConfig& seq,
                                              const PermutationConfig& perm) {
  EnsembleContext ctx;
  ctx.window_lo = static_cast<Timestamp>(seq.delta_days) * kSecondsPerDay;

  // Global player indices by first appearance in sorted match order, then
  // profile players absent from matches.
  std::unordered_map<PlayerId, std::uint32_t> index_of;
  index_of.reserve(dataset.stats.player_count + profiles.size());
  const auto intern = [&index_of](const PlayerId& p) {
    return index_of.emplace(p, static_cast<std::uint32_t>(index_of.size())).first->second;
  };
  for (const auto& m : dataset.matches) {
    for (const auto& team : m.teams) {
      for (const auto& p : team) intern(p);
    }
  }
  for (const auto& p : profiles) intern(p.player);

  struct Interval {
    Date onset = 1;
    Date ban = 0;  // empty by default
  };
  std::vector<Interval> interval_of(index_of.size());
  ctx.adopter_of.assign(index_of.size(), kNoAdopter);
  for (const auto& p : profiles) {
    const std::uint32_t idx = index_of.at(p.player);
    interval_of[idx] = {p.onset_date, p.ban_date};
    if (ctx.adopter_of[idx] == kNoAdopter) {
      ctx.adopter_of[idx] = static_cast<std::uint32_t>(ctx.adopter_count++);
      ctx.adopter_onset.push_back(day_start(p.onset_date));
    } else {
      ctx.adopter_onset[ctx.adopter_of[idx]] = day_start(p.onset_date);
    }
  }

  for (const auto& match : dataset.matches) {
    const Date match_date = date_of(match.start_time);
    std::unordered_set<PlayerId> cheaters;
    for (const auto& team : match.teams) {
      for (const auto& p : team) {
        const Interval& iv = interval_of[index_of.at(p)];
        if (iv.onset <= match_date && match_date <= iv.ban) cheaters.insert(p);
      }
    }
    if (cheaters.empty()) continue;  // no exposures possible under any relabeling
    const MatchFrame frame = build_match_frame(match, cheaters);
    auto exposures = detect_exposures_frame(frame, defn);
    if (exposures.empty()) continue;

    FrameContext fc;
    fc.match_key = fnv1a64(match.match_id);
    fc.labels.reserve(frame.labels.size());
    std::unordered_map<PlayerId, std::uint16_t> pos_of;
    for (std::size_t i = 0; i < frame.labels.size(); ++i) {
      fc.labels.push_back(index_of.at(frame.labels[i]));
      pos_of.emplace(frame.labels[i], static_cast<std::uint16_t>(i));
    }
    fc.cell_bounds.push_back(0);
    for (const auto& cell :
         permutation_cells(match, cheaters, perm.cross_team_cheater_swap)) {
      if (cell.members.size() < 2) continue;  // singletons never move
      for (const auto& p : cell.members) fc.cell_positions.push_back(pos_of.at(p));
      fc.cell_bounds.push_back(static_cast<std::uint16_t>(fc.cell_positions.size()));
    }
    fc.exposures = std::move(exposures);
    ctx.frames.push_back(std::move(fc));
  }
  return ctx;
}

struct ReplicateScratch {
  std::vector<std::uint32_t> labels;
  std::vector<std::vector<std::uint32_t>> observed;    // per adopter
  std::vector<std::vector<std::uint32_t>> victimized;  // per adopter
  std::vector<std::uint32_t> touched;

  explicit ReplicateScratch(std::size_t adopters)
      : observed(adopters), victimized(adopters) {}
};

// One pass over all exposure-bearing matches with a given label assignment:
// replicate < 0 selects the identity (the empirical network).
inline CellCounts count_replicate(const EnsembleContext& ctx, std::uint64_t master_seed,
                                  std::int64_t replicate, ReplicateScratch& scratch) {
  for (const auto& fc : ctx.frames) {
    const std::uint32_t* labels = fc.labels.data();
    if (replicate >= 0) {
      scratch.labels.assign(fc.labels.begin(), fc.labels.end());
      SplitMix64 rng(derive_seed(master_seed, static_cast<std::uint64_t>(replicate),
                                 fc.match_key));
      for (std::size_t c = 0; c + 1 < fc.cell_bounds.size(); ++c) {
        const std::uint16_t begin = fc.cell_bounds[c];
        const std::uint16_t end = fc.cell_bounds[c + 1];
        for (std::uint16_t i = end - begin; i > 1; --i) {
          const std::uint16_t j = static_cast<std::uint16_t>(rng.next_below(i));
          std::swap(scratch.labels[fc.cell_positions[begin + i - 1]],
                    scratch.labels[fc.cell_positions[begin + j]]);
        }
      }
      labels = scratch.labels.data();
    }
    for (const auto& e : fc.exposures) {
      const std::uint32_t subject = labels[e.subject];
      const std::uint32_t adopter = ctx.adopter_of[subject];
      if (adopter == kNoAdopter) continue;
      const Timestamp onset = ctx.adopter_onset[adopter];
      if (e.time >= onset || e.time < onset - ctx.window_lo) continue;
      auto& bucket = e.kind == ExposureKind::observation ? scratch.observed[adopter]
                                                         : scratch.victimized[adopter];
      const std::uint32_t cheater = labels[e.cheater];
      if (std::find(bucket.begin(), bucket.end(), cheater) == bucket.end()) {
        if (bucket.empty() && scratch.observed[adopter].empty() &&
            scratch.victimized[adopter].empty()) {
          scratch.touched.push_back(adopter);
        }
        bucket.push_back(cheater);
      }
    }
  }

  CellCounts counts;
  for (const std::uint32_t adopter : scratch.touched) {
    const int n_o = static_cast<int>(scratch.observed[adopter].size());
    const int n_v = static_cast<int>(scratch.victimized[adopter].size());
    scratch.observed[adopter].clear();
    scratch.victimized[adopter].clear();
    if (n_o > 0 && n_v == 0) {
      counts.categories.obs_only += n_o;
    } else if (n_o == 0 && n_v > 0) {
      counts.categories.vict_only += n_v;
    } else if (n_o > 0 && n_v > 0) {
      counts.categories.obs_and_vict += std::min(n_o, n_v);
    }
    counts.buckets.at(exposure_bucket(n_o), exposure_bucket(n_v)) += 1;
  }
  scratch.touched.clear();
  return counts;
}

}  // namespace detail

// Runs the full randomization ensemble. Replicate r draws its per-match
// stream from (master_seed, r, match_id), so the result is bit-identical for
// any thread count and any scheduling. threads <= 0 uses the hardware count.
inline EnsembleResult run_null_ensemble(const Dataset& dataset,
                                        const std::vector<CheaterProfile>& profiles,
                                        const ExposureDefinition& defn,
                                        const SequenceConfig& seq, const PermutationConfig& perm,
                                        int threads = 0) {
  if (perm.n_r < 1) throw std::invalid_argument("n_r must be >= 1");
  const detail::EnsembleContext ctx =
      detail::build_ensemble_context(dataset, profiles, defn, seq, perm);

  EnsembleResult result;
  result.definition = defn.name;
  result.delta_days = seq.delta_days;
  result.n_r = perm.n_r;
  result.master_seed = perm.master_seed;
  result.randomized.resize(perm.n_r);

  {
    detail::ReplicateScratch scratch(ctx.adopter_count);
    result.empirical = detail::count_replicate(ctx, perm.master_seed, -1, scratch);
  }

  int worker_count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (worker_count < 1) worker_count = 1;
  worker_count = std::min(worker_count, perm.n_r);

  std::atomic<int> next{0};
  const auto worker = [&]() {
    detail::ReplicateScratch scratch(ctx.adopter_count);
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= perm.n_r) break;
      result.randomized[r] = detail::count_replicate(ctx, perm.master_seed, r, scratch);
    }
  };
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return result;
}

inline nlohmann::json ensemble_to_json(const EnsembleResult& r) {
  nlohmann::json j;
  j["definition"] = r.definition;
  j["delta_days"] = r.delta_days;
  j["n_r"] = r.n_r;
  j["master_seed"] = r.master_seed;
  auto& cells = j["cells"] = nlohmann::json::object();
  for (const auto& id : all_cell_ids()) {
    nlohmann::json cell;
    cell["empirical"] = cell_value(r.empirical, id);
    auto& rand = cell["randomized"] = nlohmann::json::array();
    for (const auto& counts : r.randomized) rand.push_back(cell_value(counts, id));
    cells[id] = std::move(cell);
  }
  return j;
}

struct EnsembleCellSeries {
  std::int64_t empirical = 0;
  std::vector<std::int64_t> randomized;
};

struct EnsembleFile {
  std::string definition;
  int delta_days = 7;
  int n_r = 0;
  std::uint64_t master_seed = 0;
  std::vector<std::pair<std::string, EnsembleCellSeries>> cells;  // canonical order
};

inline EnsembleFile ensemble_from_json(const nlohmann::json& j) {
  EnsembleFile f;
  f.definition = j.at("definition").get<std::string>();
  f.delta_days = j.at("delta_days").get<int>();
  f.n_r = j.at("n_r").get<int>();
  f.master_seed = j.at("master_seed").get<std::uint64_t>();
  const auto& cells = j.at("cells");
  for (const auto& id : all_cell_ids()) {
    if (!cells.contains(id)) continue;
    EnsembleCellSeries series;
    series.empirical = cells.at(id).at("empirical").get<std::int64_t>();
    series.randomized = cells.at(id).at("randomized").get<std::vector<std::int64_t>>();
    f.cells.emplace_back(id, std::move(series));
  }
  return f;
}

}  // namespace contagion
