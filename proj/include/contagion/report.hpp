#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "contagion/core.hpp"
#include "contagion/exposure.hpp"
#include "contagion/nullmodel.hpp"
#include "contagion/onset.hpp"
#include "contagion/sequences.hpp"
#include "contagion/stats.hpp"
#include "contagion/telemetry.hpp"
#include "contagion/toml.hpp"

namespace contagion {

// End-to-end pipeline: ingest -> onset -> exposures -> counts -> null
// ensemble -> significance, plus the descriptive tables and figure-data
// files. All emitted files are deterministic for a fixed master seed;
// stage timings go to the log stream only.

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
  std::string matches_path;
  std::string bans_path;
  std::string out_dir = "out";
  OnsetConfig onset;
  std::string definition = "simple";
  bool teammates_observe = true;
  int delta_days = 7;
  int n_r = 1000;
  std::uint64_t master_seed = 0;
  double alpha = 0.05;
  int bonferroni_m = 3;
  int threads = 0;

  static PipelineConfig from_toml(const std::string& path) {
    const TomlTable t = TomlTable::parse_file(path);
    PipelineConfig c;
    c.matches_path = t.get_string("input.matches", "");
    c.bans_path = t.get_string("input.bans", "");
    c.out_dir = t.get_string("output.dir", c.out_dir);
    c.onset.kill_ratio_min = t.get_double("onset.kill_ratio", c.onset.kill_ratio_min);
    c.onset.max_interkill_gap_secs = t.get_double("onset.gap_secs", c.onset.max_interkill_gap_secs);
    c.onset.fallback_days = static_cast<int>(t.get_int("onset.fallback_days", c.onset.fallback_days));
    c.definition = t.get_string("exposure.definition", c.definition);
    c.teammates_observe = t.get_bool("exposure.teammates_observe", c.teammates_observe);
    c.delta_days = static_cast<int>(t.get_int("sequences.delta_days", c.delta_days));
    c.n_r = static_cast<int>(t.get_int("nullmodel.n_r", c.n_r));
    c.master_seed = t.get_uint("nullmodel.master_seed", c.master_seed);
    c.threads = static_cast<int>(t.get_int("nullmodel.threads", c.threads));
    c.alpha = t.get_double("stats.alpha", c.alpha);
    c.bonferroni_m = static_cast<int>(t.get_int("stats.bonferroni_m", c.bonferroni_m));
    if (c.matches_path.empty() || c.bans_path.empty()) {
      throw std::runtime_error("config must set input.matches and input.bans");
    }
    return c;
  }
};

struct CellResult {
  NullTestResult test;
  bool significant = false;
  std::optional<GofResult> gof_normal;
  std::optional<GofResult> gof_poisson;
};

struct SuccessRow {
  std::string group;  // "solo", "team_single", "team"
  int cheaters = 0;
  std::int64_t players = 0;
  std::int64_t wins = 0;
  std::int64_t top30 = 0;
};

struct DescriptiveTables {
  // matches by mode x active-cheater count (0..6+)
  std::map<Mode, std::array<std::int64_t, 8>> mode_cheater_counts;
  std::vector<SuccessRow> success;  // over matches with at least one cheater
  std::map<Date, std::int64_t> matches_by_day;
  std::map<int, std::int64_t> days_played_hist;
  std::map<int, std::int64_t> cheating_duration_hist;  // rule-based cheaters
  CategoryCounts candidate_categories;
  BucketMatrix candidate_buckets;
};

struct ReportBundle {
  std::vector<CellResult> cells;  // canonical cell order
  DescriptiveTables descriptives;
  double bonferroni = 0.0;
  std::map<std::string, double> stage_seconds;  // not part of the emitted files
};

inline DescriptiveTables descriptive_stats(const Dataset& dataset,
                                           const std::vector<CheaterProfile>& profiles,
                                           const std::vector<ExposureProfile>& exposure_profiles) {
  DescriptiveTables t;
  t.mode_cheater_counts[Mode::solo] = {};
  t.mode_cheater_counts[Mode::duo] = {};
  t.mode_cheater_counts[Mode::squad] = {};

  std::map<std::string, SuccessRow> success;
  std::unordered_map<PlayerId, int> days_played;
  std::unordered_map<PlayerId, Date> last_day_seen;

  for (const auto& match : dataset.matches) {
    t.matches_by_day[date_of(match.start_time)] += 1;
    for (const auto& team : match.teams) {
      for (const auto& p : team) {
        const Date d = date_of(match.start_time);
        const auto it = last_day_seen.find(p);
        if (it == last_day_seen.end() || it->second != d) {
          days_played[p] += 1;
          last_day_seen[p] = d;
        }
      }
    }

    const auto cheaters = active_cheaters(match, profiles);
    const int n_cheaters = static_cast<int>(cheaters.size());
    t.mode_cheater_counts[match.mode][std::min(n_cheaters, 7)] += 1;
    if (n_cheaters == 0) continue;

    // Team rank by elimination order: a team exits when its last member dies;
    // the winner keeps the lone survivor.
    const MatchFrame frame = build_match_frame(match, cheaters);
    const int team_count = static_cast<int>(match.teams.size());
    std::vector<Timestamp> team_exit(team_count, 0);
    std::vector<int> team_cheaters(team_count, 0);
    for (int pos = 0; pos < frame.player_count(); ++pos) {
      team_exit[frame.team_of[pos]] = std::max(team_exit[frame.team_of[pos]],
                                               frame.exit_time[pos]);
      if (frame.cheater_at[pos]) team_cheaters[frame.team_of[pos]] += 1;
    }
    std::vector<int> order(team_count);
    for (int i = 0; i < team_count; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return team_exit[a] != team_exit[b] ? team_exit[a] > team_exit[b] : a < b;
    });
    std::vector<int> rank(team_count);
    for (int r = 0; r < team_count; ++r) rank[order[r]] = r + 1;

    for (int ti = 0; ti < team_count; ++ti) {
      const auto& team = match.teams[ti];
      std::string group;
      if (match.mode == Mode::solo) {
        group = "solo";
      } else if (team.size() == 1) {
        group = "team_single";
      } else {
        group = "team";
      }
      const std::string key = group + "/" + std::to_string(team_cheaters[ti]);
      SuccessRow& row = success[key];
      row.group = group;
      row.cheaters = team_cheaters[ti];
      row.players += static_cast<std::int64_t>(team.size());
      const bool win = rank[ti] == 1;
      const bool top30 =
          static_cast<double>(rank[ti]) / static_cast<double>(team_count) <= 0.30;
      row.wins += win ? team.size() : 0;
      row.top30 += top30 ? team.size() : 0;
    }
  }

  for (const auto& [key, row] : success) t.success.push_back(row);
  for (const auto& [player, days] : days_played) {
    (void)player;
    t.days_played_hist[days] += 1;
  }
  for (const auto& p : profiles) {
    if (p.estimation_method == OnsetMethod::rule_based) {
      t.cheating_duration_hist[static_cast<int>(p.ban_date - p.onset_date)] += 1;
    }
  }
  t.candidate_categories = count_per_cheater(exposure_profiles);
  t.candidate_buckets = count_per_player(exposure_profiles);
  return t;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

inline void write_heatmaps(const std::filesystem::path& dir,
                           const std::vector<CellResult>& cells) {
  auto h13 = open_out(dir / "heatmap_h13.csv");
  h13 << "category,empirical,p_hat,std_err,significant\n";
  auto h4 = open_out(dir / "heatmap_h4.csv");
  h4 << "n_o_bucket,n_v_bucket,empirical,p_hat,std_err,significant\n";
  const char* token[3] = {"0", "1", "2plus"};
  for (const auto& cell : cells) {
    const auto& r = cell.test;
    const std::string tail = std::to_string(r.empirical_count) + "," + fmt_double(r.p_hat) + "," +
                             fmt_double(r.std_err) + "," + (cell.significant ? "1" : "0") + "\n";
    bool bucket = false;
    for (int bo = 0; bo < 3 && !bucket; ++bo) {
      for (int bv = 0; bv < 3; ++bv) {
        if (r.cell == std::string("bucket_") + token[bo] + "_" + token[bv]) {
          h4 << bucket_name(bo) << ',' << bucket_name(bv) << ',' << tail;
          bucket = true;
          break;
        }
      }
    }
    if (!bucket) h13 << r.cell << ',' << tail;
  }
}

inline void write_descriptives(const std::filesystem::path& dir, const DescriptiveTables& t) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "matches_by_mode.csv");
    out << "mode,matches,cheaters_1,cheaters_2,cheaters_3,cheaters_4,cheaters_5,cheaters_6,"
           "cheaters_7plus\n";
    for (const auto& [mode, counts] : t.mode_cheater_counts) {
      std::int64_t total = 0;
      for (const std::int64_t c : counts) total += c;
      out << to_string(mode) << ',' << total;
      for (int i = 1; i <= 7; ++i) out << ',' << counts[i];
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "success_rates.csv");
    out << "group,cheaters,players,win_rate,top30_rate\n";
    std::vector<SuccessRow> rows = t.success;
    std::sort(rows.begin(), rows.end(), [](const SuccessRow& a, const SuccessRow& b) {
      return a.group != b.group ? a.group < b.group : a.cheaters < b.cheaters;
    });
    for (const auto& row : rows) {
      const double n = static_cast<double>(row.players);
      out << row.group << ',' << row.cheaters << ',' << row.players << ','
          << fmt_double(n > 0 ? row.wins / n : 0.0) << ','
          << fmt_double(n > 0 ? row.top30 / n : 0.0) << '\n';
    }
  }
  {
    auto out = open_out(dir / "matches_by_day.csv");
    out << "date,matches\n";
    for (const auto& [date, count] : t.matches_by_day) {
      out << format_date(date) << ',' << count << '\n';
    }
  }
  {
    auto out = open_out(dir / "days_played.csv");
    out << "days_played,players\n";
    for (const auto& [days, count] : t.days_played_hist) out << days << ',' << count << '\n';
  }
  {
    auto out = open_out(dir / "cheating_duration.csv");
    out << "duration_days,cheaters\n";
    for (const auto& [days, count] : t.cheating_duration_hist) {
      out << days << ',' << count << '\n';
    }
  }
  {
    auto out = open_out(dir / "candidate_sequences.csv");
    out << "cell,count\n";
    out << "obs_only," << t.candidate_categories.obs_only << '\n';
    out << "vict_only," << t.candidate_categories.vict_only << '\n';
    out << "obs_and_vict," << t.candidate_categories.obs_and_vict << '\n';
    for (int bo = 0; bo < 3; ++bo) {
      for (int bv = 0; bv < 3; ++bv) {
        if (bo == 0 && bv == 0) continue;
        out << "bucket_" << bucket_name(bo) << '_' << bucket_name(bv) << ','
            << t.candidate_buckets.at(bo, bv) << '\n';
      }
    }
  }
}

}  // namespace detail

// Significance and GOF diagnostics for every cell of a persisted ensemble.
inline std::vector<CellResult> analyze_ensemble(const EnsembleFile& ensemble, double alpha) {
  std::vector<CellResult> out;
  for (const auto& [id, series] : ensemble.cells) {
    CellResult cell;
    cell.test = estimate_p_hat(series.empirical, series.randomized);
    cell.test.cell = id;
    cell.significant = is_significant(cell.test, alpha);
    try {
      cell.gof_normal = gof_chi_squared(series.randomized, GofFamily::normal);
    } catch (const std::invalid_argument&) {
    }
    try {
      cell.gof_poisson = gof_chi_squared(series.randomized, GofFamily::poisson);
    } catch (const std::invalid_argument&) {
    }
    out.push_back(std::move(cell));
  }
  return out;
}

inline nlohmann::json results_to_json(const std::vector<CellResult>& cells, double alpha,
                                      int bonferroni_m) {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["bonferroni_m"] = bonferroni_m;
  j["bonferroni_threshold"] = bonferroni_threshold(alpha, bonferroni_m);
  auto& out = j["cells"] = nlohmann::json::object();
  for (const auto& cell : cells) {
    nlohmann::json c;
    c["empirical"] = cell.test.empirical_count;
    c["p_hat"] = cell.test.p_hat;
    c["std_err"] = cell.test.std_err;
    c["n_r"] = cell.test.n_r;
    c["significant"] = cell.significant;
    c["gof_normal_p"] = cell.gof_normal ? nlohmann::json(cell.gof_normal->p_value)
                                        : nlohmann::json();
    c["gof_poisson_p"] = cell.gof_poisson ? nlohmann::json(cell.gof_poisson->p_value)
                                          : nlohmann::json();
    out[cell.test.cell] = std::move(c);
  }
  return j;
}

inline ReportBundle run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  ReportBundle bundle;
  const auto note = [&](const std::string& stage, clock::time_point begin) {
    const double secs = std::chrono::duration<double>(clock::now() - begin).count();
    bundle.stage_seconds[stage] = secs;
    if (log) *log << "[" << stage << "] " << secs << " s\n";
  };
  const auto fail = [](const std::string& stage, const std::string& what) {
    throw std::runtime_error(stage + ": " + what);
  };

  const auto defn = definition_from_name(config.definition);
  if (!defn) fail("config", "unknown definition '" + config.definition + "'");
  ExposureDefinition definition = *defn;
  definition.teammates_observe = config.teammates_observe;

  fs::create_directories(config.out_dir);
  const fs::path out_dir(config.out_dir);

  // ingest
  auto t0 = clock::now();
  Dataset dataset;
  {
    std::ifstream matches_in(config.matches_path);
    if (!matches_in) fail("ingest", "cannot open " + config.matches_path);
    MatchParseResult parsed = parse_match_log(matches_in);
    if (!parsed.errors.empty() && log) {
      *log << "[ingest] rejected " << parsed.errors.size() << " match record(s)\n";
    }
    std::ifstream bans_in(config.bans_path);
    if (!bans_in) fail("ingest", "cannot open " + config.bans_path);
    BanParseResult bans = load_ban_list(bans_in);
    if (!bans.errors.empty() && log) {
      *log << "[ingest] rejected " << bans.errors.size() << " ban row(s)\n";
    }
    dataset = assemble_dataset(std::move(parsed.matches), std::move(bans.bans));
  }
  note("ingest", t0);

  // onset
  t0 = clock::now();
  const std::vector<CheaterProfile> profiles =
      estimate_all_onsets(dataset, dataset.bans, config.onset);
  {
    auto out = detail::open_out(out_dir / "cheaters.csv");
    out << "player,ban_date,onset_date,method\n";
    for (const auto& p : profiles) {
      out << p.player << ',' << format_date(p.ban_date) << ',' << format_date(p.onset_date)
          << ',' << to_string(p.estimation_method) << '\n';
    }
  }
  note("onset", t0);

  // exposures
  t0 = clock::now();
  const std::vector<ExposureEvent> exposures =
      detect_all_exposures(dataset, profiles, definition);
  {
    auto out = detail::open_out(out_dir / "exposures.csv");
    out << "subject,cheater,match_id,kind,time\n";
    for (const auto& e : exposures) {
      out << e.subject << ',' << e.cheater << ',' << e.match_id << ',' << to_string(e.kind)
          << ',' << e.time << '\n';
    }
  }
  note("exposures", t0);

  // counts
  t0 = clock::now();
  const SequenceConfig seq{config.delta_days, definition};
  const std::vector<ExposureProfile> exposure_profiles =
      build_profiles(profiles, exposures, seq);
  note("counts", t0);

  // null ensemble
  t0 = clock::now();
  const PermutationConfig perm{config.n_r, config.master_seed, false};
  const EnsembleResult ensemble =
      run_null_ensemble(dataset, profiles, definition, seq, perm, config.threads);
  {
    auto out = detail::open_out(out_dir / "ensemble.json");
    out << ensemble_to_json(ensemble).dump(2) << '\n';
  }
  note("nullmodel", t0);

  // stats, from the persisted ensemble file
  t0 = clock::now();
  {
    std::ifstream in(out_dir / "ensemble.json");
    nlohmann::json j;
    in >> j;
    bundle.cells = analyze_ensemble(ensemble_from_json(j), config.alpha);
  }
  bundle.bonferroni = bonferroni_threshold(config.alpha, config.bonferroni_m);
  {
    auto out = detail::open_out(out_dir / "results.json");
    out << results_to_json(bundle.cells, config.alpha, config.bonferroni_m).dump(2) << '\n';
  }
  detail::write_heatmaps(out_dir, bundle.cells);
  note("stats", t0);

  // descriptive exhibits and run metadata
  t0 = clock::now();
  bundle.descriptives = descriptive_stats(dataset, profiles, exposure_profiles);
  detail::write_descriptives(out_dir / "descriptives", bundle.descriptives);
  {
    nlohmann::json meta;
    meta["version"] = kVersion;
    meta["master_seed"] = config.master_seed;
    meta["n_r"] = config.n_r;
    meta["definition"] = definition.name;
    meta["delta_days"] = config.delta_days;
    meta["alpha"] = config.alpha;
    meta["bonferroni_m"] = config.bonferroni_m;
    meta["onset"] = {{"kill_ratio", config.onset.kill_ratio_min},
                     {"gap_secs", config.onset.max_interkill_gap_secs},
                     {"fallback_days", config.onset.fallback_days}};
    meta["dataset"] = {{"matches", dataset.stats.match_count},
                       {"players", dataset.stats.player_count},
                       {"kills", dataset.stats.kill_count},
                       {"bans", dataset.bans.size()}};
    auto out = detail::open_out(out_dir / "metadata.json");
    out << meta.dump(2) << '\n';
  }
  note("report", t0);
  return bundle;
}

}  // namespace contagion
