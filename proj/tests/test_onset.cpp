#include <doctest.h>

#include <vector>

#include "contagion/onset.hpp"
#include "contagion/telemetry.hpp"
#include "test_support.hpp"

using namespace contagion;
using namespace testsupport;

namespace {

const Date kDay0 = base_date();

// One solo match per entry: (day, player's kills at relative times, deaths).
Dataset performance_dataset(const PlayerId& player,
                            const std::vector<std::tuple<int, std::vector<int>, int>>& days) {
  std::vector<MatchRecord> matches;
  int counter = 0;
  for (const auto& [day, kill_times, deaths] : days) {
    // spread the player's kills and deaths over per-day matches
    MatchRecord m;
    m.match_id = "pm" + std::to_string(counter++);
    m.mode = Mode::solo;
    m.start_time = day_start(kDay0 + day) + 1000;
    std::vector<std::vector<PlayerId>> teams{{player}};
    Timestamp t = m.start_time;
    std::vector<KillEvent> kills;
    int fodder = 0;
    for (const int rel : kill_times) {
      const PlayerId victim = "v" + std::to_string(counter) + "_" + std::to_string(fodder++);
      teams.push_back({victim});
      kills.push_back({m.start_time + rel, player, victim, false});
      t = std::max(t, m.start_time + rel);
    }
    for (int d = 0; d < deaths; ++d) {
      const PlayerId killer = "k" + std::to_string(counter) + "_" + std::to_string(fodder++);
      teams.push_back({killer});
      t += 10;
      kills.push_back({t, killer, player, false});
    }
    std::sort(kills.begin(), kills.end(),
              [](const KillEvent& a, const KillEvent& b) { return a.time < b.time; });
    m.teams = std::move(teams);
    m.kills = std::move(kills);
    m.end_time = t + 600;
    matches.push_back(std::move(m));
  }
  return assemble_dataset(std::move(matches), {});
}

}  // namespace

TEST_CASE("kill ratio follows kills / (kills + deaths)") {
  // 8 kills, 2 deaths on one day -> 0.8; deaths split over two matches
  const Dataset ds = performance_dataset("p", {{0, {100, 160, 220, 280, 340, 400, 460, 520}, 2}});
  const auto days = daily_performance(ds, "p");
  REQUIRE(days.size() == 1);
  CHECK(days[0].kills == 8);
  CHECK(days[0].deaths == 2);
  CHECK(days[0].kill_ratio == doctest::Approx(0.8));
}

TEST_CASE("per-match inter-kill gap averages within the day") {
  const Dataset ds = performance_dataset("p", {{0, {100, 160, 220}, 0}});
  const auto days = daily_performance(ds, "p");
  REQUIRE(days.size() == 1);
  REQUIRE(days[0].mean_interkill_gap.has_value());
  CHECK(*days[0].mean_interkill_gap == doctest::Approx(60.0));
}

TEST_CASE("matches with fewer than two kills leave the gap undefined") {
  const Dataset ds =
      performance_dataset("p", {{0, {100}, 0}, {0, {200}, 0}, {0, {300}, 0}});
  const auto days = daily_performance(ds, "p");
  REQUIRE(days.size() == 1);
  CHECK(days[0].kills == 3);
  CHECK(!days[0].mean_interkill_gap.has_value());
  CHECK(days[0].kill_ratio == doctest::Approx(1.0));
}

TEST_CASE("unknown player yields an empty performance list") {
  const Dataset ds = performance_dataset("p", {{0, {100, 200}, 1}});
  CHECK(daily_performance(ds, "nobody").empty());
}

TEST_CASE("a played day with no events still gets a record with undefined ratio") {
  MatchRecord m = make_match("m", Mode::solo, {{"p"}, {"q"}}, day_start(kDay0) + 100,
                             day_start(kDay0) + 700, {});
  const Dataset ds = assemble_dataset({m}, {});
  const auto days = daily_performance(ds, "p");
  REQUIRE(days.size() == 1);
  CHECK(days[0].kills == 0);
  CHECK(days[0].deaths == 0);
  CHECK(!days[0].kill_ratio.has_value());
}

TEST_CASE("onset picks the earliest qualifying day") {
  std::vector<DailyPerformance> perf;
  DailyPerformance d1{"c", kDay0 + 5, 0, 0, 0.85, 120.0};
  DailyPerformance d2{"c", kDay0 + 6, 0, 0, 0.90, 100.0};
  perf = {d2, d1};  // order must not matter
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 8});
  CHECK(p.onset_date == kDay0 + 5);
  CHECK(p.estimation_method == OnsetMethod::rule_based);
  CHECK(p.onset_date <= p.ban_date);
}

TEST_CASE("non-qualifying days fall back to ban minus two days") {
  std::vector<DailyPerformance> perf{{"c", kDay0 + 5, 0, 0, 0.85, 150.0}};
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 10});
  CHECK(p.onset_date == kDay0 + 8);
  CHECK(p.estimation_method == OnsetMethod::modal_fallback);
}

TEST_CASE("days with a missing feature never qualify") {
  std::vector<DailyPerformance> perf{
      {"c", kDay0 + 3, 0, 0, 1.0, std::nullopt},
      {"c", kDay0 + 4, 0, 0, std::nullopt, 90.0},
  };
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 9});
  CHECK(p.estimation_method == OnsetMethod::modal_fallback);
  CHECK(p.onset_date == kDay0 + 7);
}

TEST_CASE("qualifying days after the ban are ignored") {
  std::vector<DailyPerformance> perf{{"c", kDay0 + 9, 0, 0, 0.95, 100.0}};
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 8});
  CHECK(p.estimation_method == OnsetMethod::modal_fallback);
  CHECK(p.onset_date == kDay0 + 6);
}

TEST_CASE("boundary values qualify: ratio 0.8 and gap 140 are inclusive") {
  std::vector<DailyPerformance> perf{{"c", kDay0 + 5, 0, 0, 0.8, 140.0}};
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 8});
  CHECK(p.estimation_method == OnsetMethod::rule_based);
  CHECK(p.onset_date == kDay0 + 5);
}

TEST_CASE("kill ratio is scale free") {
  for (int scale : {2, 5, 11}) {
    const Dataset a = performance_dataset("p", {{0, {100, 200, 300}, 1}});
    std::vector<int> scaled_kill_times;
    for (int i = 0; i < 3 * scale; ++i) scaled_kill_times.push_back(100 + 60 * i);
    const Dataset b = performance_dataset("p", {{0, scaled_kill_times, scale}});
    const auto da = daily_performance(a, "p");
    const auto db = daily_performance(b, "p");
    CHECK(*da[0].kill_ratio == doctest::Approx(*db[0].kill_ratio));
  }
}

TEST_CASE("loosening thresholds never yields a later rule-based onset") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<DailyPerformance> perf;
    for (int day = 0; day < 10; ++day) {
      DailyPerformance dp{"c", kDay0 + day, 0, 0, std::nullopt, std::nullopt};
      if (rng.bernoulli(0.8)) dp.kill_ratio = rng.next_double();
      if (rng.bernoulli(0.8)) dp.mean_interkill_gap = 60.0 + rng.next_double() * 200.0;
      perf.push_back(dp);
    }
    const BanRecord ban{"c", kDay0 + 9};
    const OnsetConfig tight{0.8, 140.0, 2};
    const OnsetConfig loose{0.7, 170.0, 2};
    const CheaterProfile pt = estimate_onset(perf, ban, tight);
    const CheaterProfile pl = estimate_onset(perf, ban, loose);
    if (pt.estimation_method == OnsetMethod::rule_based) {
      REQUIRE(pl.estimation_method == OnsetMethod::rule_based);
      CHECK(pl.onset_date <= pt.onset_date);
    }
  }
}

TEST_CASE("super-threshold performance from a planted day is recovered exactly") {
  // qualifying behavior from day 4, normal low-volume days before
  const Dataset ds = performance_dataset(
      "c", {{2, {100}, 1}, {4, {100, 200, 300, 400}, 1}, {5, {50, 150, 250, 350}, 0}});
  const auto perf = daily_performance(ds, "c");
  const CheaterProfile p = estimate_onset(perf, {"c", kDay0 + 6});
  CHECK(p.estimation_method == OnsetMethod::rule_based);
  CHECK(p.onset_date == kDay0 + 4);
}

TEST_CASE("welch t on identical samples") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const WelchResult r = welch_t_test(a, a);
  CHECK(r.t_statistic == doctest::Approx(0.0));
  CHECK(r.p_value == doctest::Approx(1.0));
}

TEST_CASE("welch t against a hand-computed fixture") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{2, 3, 4, 5, 6};
  const WelchResult r = welch_t_test(a, b);
  // equal variances 2.5, n = 5: t = -1 exactly, Welch-Satterthwaite df = 8
  CHECK(r.t_statistic == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.degrees_of_freedom == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(0.346593507087334).epsilon(1e-9));
}

TEST_CASE("welch t is antisymmetric") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) a.push_back(rng.normal() * 2.0 + 1.0);
    for (int i = 0; i < 9; ++i) b.push_back(rng.normal() * 0.5);
    const WelchResult ab = welch_t_test(a, b);
    const WelchResult ba = welch_t_test(b, a);
    CHECK(ab.t_statistic == doctest::Approx(-ba.t_statistic).epsilon(1e-12));
    CHECK(ab.degrees_of_freedom == doctest::Approx(ba.degrees_of_freedom).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.degrees_of_freedom > 0.0);
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
}

TEST_CASE("welch t rejects degenerate samples") {
  const std::vector<double> constant{2.0, 2.0, 2.0};
  const std::vector<double> varied{1.0, 2.0, 3.0};
  CHECK_THROWS_WITH_AS(welch_t_test(constant, varied), "welch_t_test: insufficient variance",
                       std::invalid_argument);
  CHECK_THROWS_AS(welch_t_test(std::vector<double>{1.0}, varied), std::invalid_argument);
}
