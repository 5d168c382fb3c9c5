#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "contagion/onset.hpp"
#include "contagion/synth.hpp"
#include "contagion/telemetry.hpp"

using namespace contagion;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.days = 8;
  cfg.matches_per_day = 25;
  cfg.players = 160;
  cfg.match_size = 10;
  cfg.cheater_rate = 0.06;
  cfg.activity_rate = 0.6;
  cfg.seed = seed;
  return cfg;
}

std::string dataset_bytes(const Dataset& ds) {
  std::ostringstream matches, bans;
  write_match_log(matches, ds.matches);
  write_ban_list(bans, ds.bans);
  return matches.str() + "\x1e" + bans.str();
}

}  // namespace

TEST_CASE("zero cheater rate and no contagion yield a cheater-free dataset") {
  SynthConfig cfg = small_config(1);
  cfg.cheater_rate = 0.0;
  const auto [ds, truth] = generate_dataset(cfg);
  CHECK(ds.bans.empty());
  for (const auto& p : truth.players) CHECK(!p.cheater);
  CHECK(ds.stats.match_count > 0);
}

TEST_CASE("every generated match satisfies the telemetry invariants") {
  for (const auto behavior : {CheaterBehavior::calibrated, CheaterBehavior::super_threshold,
                              CheaterBehavior::sub_threshold}) {
    SynthConfig cfg = small_config(2);
    cfg.cheater_behavior = behavior;
    cfg.team_homophily = 0.4;
    const auto [ds, truth] = generate_dataset(cfg);
    REQUIRE(ds.stats.match_count > 0);
    for (const auto& m : ds.matches) {
      INFO(m.match_id);
      CHECK(validate_match(m).empty());
      // exactly one survivor
      std::unordered_set<PlayerId> dead;
      for (const auto& k : m.kills) dead.insert(k.victim);
      CHECK(dead.size() == m.player_count() - 1);
    }
  }
}

TEST_CASE("ban list rows equal the number of true cheaters, two days after onset") {
  const auto [ds, truth] = generate_dataset(small_config(3));
  std::size_t cheaters = 0;
  for (const auto& p : truth.players) {
    if (!p.cheater) continue;
    ++cheaters;
    CHECK(p.ban_date == p.onset_date + 2);
  }
  CHECK(ds.bans.size() == cheaters);
  CHECK(cheaters > 0);
  for (const auto& b : ds.bans) {
    CHECK(b.ban_date >= ds.window_first);
    CHECK(b.ban_date <= ds.window_last);
  }
}

TEST_CASE("emitted files round-trip through the telemetry parser") {
  const auto [ds, truth] = generate_dataset(small_config(4));
  const auto dir = std::filesystem::temp_directory_path() / "contagion_synth_rt";
  const EmitPaths paths = emit_dataset_files(ds, dir);

  std::ifstream matches_in(paths.matches);
  const MatchParseResult parsed = parse_match_log(matches_in);
  CHECK(parsed.errors.empty());
  std::ifstream bans_in(paths.bans);
  const BanParseResult bans = load_ban_list(bans_in);
  CHECK(bans.errors.empty());
  const Dataset back = assemble_dataset(parsed.matches, bans.bans);
  CHECK(dataset_bytes(back) == dataset_bytes(ds));
  std::filesystem::remove_all(dir);
}

TEST_CASE("generation is byte-deterministic for a fixed seed") {
  const auto [a, ta] = generate_dataset(small_config(5));
  const auto [b, tb] = generate_dataset(small_config(5));
  CHECK(dataset_bytes(a) == dataset_bytes(b));
  const auto [c, tc] = generate_dataset(small_config(6));
  CHECK(dataset_bytes(a) != dataset_bytes(c));
}

TEST_CASE("infeasible configurations are rejected") {
  SynthConfig cfg = small_config(7);
  cfg.players = 5;
  cfg.match_size = 10;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
  cfg = small_config(7);
  cfg.days = 2;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
  cfg = small_config(7);
  cfg.solo_fraction = 0.9;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
  cfg = small_config(7);
  cfg.match_size = 6;
  cfg.cheater_behavior = CheaterBehavior::super_threshold;
  CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
}

TEST_CASE("calibrated cheater kill ratio lands near the 0.77 target over 10k matches") {
  SynthConfig cfg;
  cfg.days = 12;
  cfg.matches_per_day = 850;
  cfg.players = 4000;
  cfg.match_size = 20;
  cfg.cheater_rate = 0.01;
  cfg.activity_rate = 0.5;
  cfg.seed = 42;
  cfg.record_ledger = false;
  const auto [ds, truth] = generate_dataset(cfg);
  CHECK(ds.stats.match_count > 10000);

  double cheater_ratio_sum = 0.0, normal_ratio_sum = 0.0;
  double cheater_gap_sum = 0.0, normal_gap_sum = 0.0;
  long cheater_days = 0, normal_days = 0, cheater_gap_days = 0, normal_gap_days = 0;
  for (std::size_t i = 0; i < truth.player_ids.size(); ++i) {
    for (const auto& day : daily_performance(ds, truth.player_ids[i])) {
      const auto& t = truth.players[i];
      const bool cheating = t.cheater && t.onset_date <= day.date && day.date <= t.ban_date;
      if (day.kill_ratio) {
        (cheating ? cheater_ratio_sum : normal_ratio_sum) += *day.kill_ratio;
        (cheating ? cheater_days : normal_days) += 1;
      }
      if (day.mean_interkill_gap) {
        (cheating ? cheater_gap_sum : normal_gap_sum) += *day.mean_interkill_gap;
        (cheating ? cheater_gap_days : normal_gap_days) += 1;
      }
    }
  }
  REQUIRE(cheater_days > 50);
  const double cheater_ratio = cheater_ratio_sum / cheater_days;
  const double normal_ratio = normal_ratio_sum / normal_days;
  CHECK(cheater_ratio == doctest::Approx(0.77).epsilon(0.065));  // +-0.05 absolute
  CHECK(normal_ratio == doctest::Approx(0.40).epsilon(0.15));
  // cheaters kill in quicker succession than everyone else
  CHECK(cheater_gap_sum / cheater_gap_days < normal_gap_sum / normal_gap_days);
  CHECK(cheater_gap_sum / cheater_gap_days == doctest::Approx(140.0).epsilon(0.25));
  CHECK(normal_gap_sum / normal_gap_days == doctest::Approx(194.0).epsilon(0.25));
}

TEST_CASE("super-threshold cheaters qualify on every active day and only then") {
  SynthConfig cfg = small_config(8);
  cfg.cheater_behavior = CheaterBehavior::super_threshold;
  cfg.match_size = 12;
  const auto [ds, truth] = generate_dataset(cfg);
  int checked = 0;
  for (std::size_t i = 0; i < truth.player_ids.size(); ++i) {
    if (!truth.players[i].cheater) continue;
    ++checked;
    for (const auto& day : daily_performance(ds, truth.player_ids[i])) {
      const bool qualifies = day.kill_ratio && day.mean_interkill_gap &&
                             *day.kill_ratio >= 0.8 && *day.mean_interkill_gap <= 140.0;
      const auto& t = truth.players[i];
      const bool active = t.onset_date <= day.date && day.date <= t.ban_date;
      CHECK(qualifies == active);
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("planted rule with certainty: every triggered player adopts the next day") {
  SynthConfig cfg = small_config(9);
  cfg.days = 10;
  cfg.cheater_rate = 0.08;
  cfg.activity_rate = 0.8;
  ContagionRule rule;
  rule.min_observed = 2;
  rule.min_victimized = 2;
  rule.adoption_probability = 1.0;
  rule.baseline_adoption = 0.0;
  cfg.contagion = rule;
  const auto [ds, truth] = generate_dataset(cfg);

  // Replay the ledger day by day: the first day a non-cheater meets the
  // trigger, they must adopt the next day (if a ban still fits the window).
  const int last_onset_day = cfg.days - 1 - cfg.ban_lag_days;
  int triggered_adopters = 0;
  for (std::size_t i = 0; i < truth.player_ids.size(); ++i) {
    const auto& entries = truth.ledger[i];
    // seed cheaters are assigned an onset up front and never enter the
    // adoption process, triggered or not
    if (truth.players[i].cheater && !truth.players[i].contagion_triggered) continue;
    std::optional<int> first_trigger_day;
    for (int day = 0; day + 1 <= last_onset_day; ++day) {
      std::set<std::uint32_t> observed, victimized;
      for (const auto& e : entries) {
        if (e.day < day - cfg.delta_days + 1 || e.day > day) continue;
        (e.kind == ExposureKind::observation ? observed : victimized).insert(e.cheater);
      }
      if (static_cast<int>(observed.size()) >= 2 && static_cast<int>(victimized.size()) >= 2) {
        first_trigger_day = day;
        break;
      }
    }
    if (first_trigger_day) {
      REQUIRE(truth.players[i].cheater);
      CHECK(truth.players[i].onset_date == truth.first_date + *first_trigger_day + 1);
      if (truth.players[i].contagion_triggered) ++triggered_adopters;
    }
  }
  CHECK(triggered_adopters > 0);
}

TEST_CASE("homophily clusters cheaters into shared teams") {
  SynthConfig cfg = small_config(10);
  cfg.solo_fraction = 0.0;
  cfg.duo_fraction = 0.0;
  cfg.squad_fraction = 1.0;
  cfg.cheater_rate = 0.15;
  cfg.team_homophily = 1.0;
  const auto [with, tw] = generate_dataset(cfg);
  cfg.team_homophily = 0.0;
  cfg.seed = 11;
  const auto [without, tn] = generate_dataset(cfg);

  const auto multi_cheater_teams = [](const Dataset& ds, const GroundTruth& truth) {
    std::unordered_map<PlayerId, std::size_t> idx;
    for (std::size_t i = 0; i < truth.player_ids.size(); ++i) idx[truth.player_ids[i]] = i;
    long multi = 0;
    for (const auto& m : ds.matches) {
      const Date d = date_of(m.start_time);
      for (const auto& team : m.teams) {
        int c = 0;
        for (const auto& p : team) {
          const auto& t = truth.players[idx.at(p)];
          if (t.cheater && t.onset_date <= d && d <= t.ban_date) ++c;
        }
        if (c >= 2) ++multi;
      }
    }
    return multi;
  };
  CHECK(multi_cheater_teams(with, tw) > multi_cheater_teams(without, tn));
}
