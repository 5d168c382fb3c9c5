#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "contagion/core.hpp"
#include "contagion/exposure.hpp"
#include "contagion/nullmodel.hpp"
#include "contagion/onset.hpp"
#include "contagion/report.hpp"
#include "contagion/sequences.hpp"
#include "contagion/stats.hpp"
#include "contagion/synth.hpp"
#include "contagion/telemetry.hpp"

namespace {

using namespace contagion;

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  std::vector<std::string> warnings;
  Dataset ds = read_dataset(in, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return ds;
}

std::vector<CheaterProfile> load_cheaters_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cheaters file '" + path + "'");
  std::vector<CheaterProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "player,ban_date,onset_date,method") continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(begin, i - begin));
        begin = i + 1;
      }
    }
    if (fields.size() != 4) {
      throw std::runtime_error("cheaters line " + std::to_string(line_no) + ": expected 4 fields");
    }
    CheaterProfile p;
    p.player = fields[0];
    const auto ban = parse_date(fields[1]);
    const auto onset = parse_date(fields[2]);
    const auto method = onset_method_from_string(fields[3]);
    if (!ban || !onset || !method) {
      throw std::runtime_error("cheaters line " + std::to_string(line_no) + ": bad field");
    }
    p.ban_date = *ban;
    p.onset_date = *onset;
    p.estimation_method = *method;
    out.push_back(std::move(p));
  }
  return out;
}

void write_cheaters_csv(const std::string& path, const std::vector<CheaterProfile>& profiles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "player,ban_date,onset_date,method\n";
  for (const auto& p : profiles) {
    out << p.player << ',' << format_date(p.ban_date) << ',' << format_date(p.onset_date) << ','
        << to_string(p.estimation_method) << '\n';
  }
}

std::vector<ExposureEvent> load_exposures_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open exposures file '" + path + "'");
  std::vector<ExposureEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "subject,cheater,match_id,kind,time") continue;
    std::vector<std::string> fields;
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(begin, i - begin));
        begin = i + 1;
      }
    }
    if (fields.size() != 5) {
      throw std::runtime_error("exposures line " + std::to_string(line_no) +
                               ": expected 5 fields");
    }
    ExposureEvent e;
    e.subject = fields[0];
    e.cheater = fields[1];
    e.match_id = fields[2];
    if (fields[3] == "observation") {
      e.kind = ExposureKind::observation;
    } else if (fields[3] == "victimization") {
      e.kind = ExposureKind::victimization;
    } else {
      throw std::runtime_error("exposures line " + std::to_string(line_no) + ": bad kind");
    }
    e.time = std::stoll(fields[4]);
    out.push_back(std::move(e));
  }
  return out;
}

ExposureDefinition parse_definition(const std::string& name) {
  const auto defn = definition_from_name(name);
  if (!defn) throw std::runtime_error("unknown definition '" + name + "'");
  return *defn;
}

int cmd_ingest(const std::string& matches_path, const std::string& bans_path,
               const std::string& out_path) {
  std::ifstream matches_in(matches_path);
  if (!matches_in) throw std::runtime_error("cannot open '" + matches_path + "'");
  MatchParseResult parsed = parse_match_log(matches_in);
  for (const auto& err : parsed.errors) {
    std::cerr << "matches line " << err.line << ": " << err.message << '\n';
  }
  std::ifstream bans_in(bans_path);
  if (!bans_in) throw std::runtime_error("cannot open '" + bans_path + "'");
  BanParseResult bans = load_ban_list(bans_in);
  for (const auto& err : bans.errors) {
    std::cerr << "bans line " << err.line << ": " << err.message << '\n';
  }
  std::vector<std::string> warnings;
  const Dataset ds = assemble_dataset(std::move(parsed.matches), std::move(bans.bans), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  write_dataset(out, ds);
  std::cout << "matches=" << ds.stats.match_count << " players=" << ds.stats.player_count
            << " kills=" << ds.stats.kill_count << " bans=" << ds.bans.size()
            << " rejected_matches=" << parsed.errors.size()
            << " rejected_bans=" << bans.errors.size() << '\n';
  return parsed.errors.empty() && bans.errors.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contagion-of-cheating analysis pipeline"};
  app.require_subcommand(1);

  // ingest
  std::string matches_path, bans_path, out_path;
  auto* ingest = app.add_subcommand("ingest", "Parse match log and ban list into a dataset");
  ingest->add_option("--matches", matches_path, "match log (JSONL)")->required();
  ingest->add_option("--bans", bans_path, "ban list (CSV)")->required();
  ingest->add_option("--out", out_path, "dataset output path")->required();

  // onset
  std::string dataset_path, cheaters_path;
  OnsetConfig onset_cfg;
  auto* onset = app.add_subcommand("onset", "Estimate cheating intervals for banned players");
  onset->add_option("--dataset", dataset_path, "dataset path")->required();
  onset->add_option("--bans", bans_path, "ban list CSV (defaults to dataset bans)");
  onset->add_option("--kill-ratio", onset_cfg.kill_ratio_min, "kill ratio threshold");
  onset->add_option("--gap-secs", onset_cfg.max_interkill_gap_secs, "inter-kill gap threshold");
  onset->add_option("--fallback-days", onset_cfg.fallback_days, "fallback days before ban");
  onset->add_option("--out", out_path, "cheaters CSV output")->required();

  // exposures
  std::string definition_name = "simple";
  bool no_teammate_observers = false;
  auto* exposures = app.add_subcommand("exposures", "Detect observation/victimization events");
  exposures->add_option("--dataset", dataset_path, "dataset path")->required();
  exposures->add_option("--cheaters", cheaters_path, "cheaters CSV")->required();
  exposures->add_option("--definition", definition_name, "simple|strict");
  exposures->add_flag("--no-teammate-observers", no_teammate_observers,
                      "exclude a cheater's teammates from observers");
  exposures->add_option("--out", out_path, "exposures CSV output")->required();

  // count
  std::string exposures_path, count_mode = "per-cheater";
  int delta_days = 7;
  auto* count = app.add_subcommand("count", "Count contagion event sequences");
  count->add_option("--exposures", exposures_path, "exposures CSV")->required();
  count->add_option("--cheaters", cheaters_path, "cheaters CSV")->required();
  count->add_option("--delta", delta_days, "influence window in days");
  count->add_option("--mode", count_mode, "per-cheater|per-player");
  count->add_option("--out", out_path, "counts JSON output")->required();

  // permute
  int n_r = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  auto* permute = app.add_subcommand("permute", "Run the node-label permutation ensemble");
  permute->add_option("--dataset", dataset_path, "dataset path")->required();
  permute->add_option("--cheaters", cheaters_path, "cheaters CSV")->required();
  permute->add_option("--definition", definition_name, "simple|strict");
  permute->add_option("--delta", delta_days, "influence window in days");
  permute->add_option("--n-r", n_r, "number of randomizations");
  permute->add_option("--seed", seed, "master seed");
  permute->add_option("--threads", threads, "worker threads (0 = hardware)");
  permute->add_flag("--no-teammate-observers", no_teammate_observers,
                    "exclude a cheater's teammates from observers");
  permute->add_option("--out", out_path, "ensemble JSON output")->required();

  // analyze
  std::string ensemble_path;
  double alpha = 0.05;
  int bonferroni_m = 3;
  auto* analyze = app.add_subcommand("analyze", "Significance estimates from an ensemble");
  analyze->add_option("--ensemble", ensemble_path, "ensemble JSON")->required();
  analyze->add_option("--alpha", alpha, "significance level");
  analyze->add_option("--bonferroni", bonferroni_m, "number of simultaneous tests");
  analyze->add_option("--out", out_path, "results JSON output")->required();

  // synth
  SynthConfig synth_cfg;
  std::string out_dir, plant_spec, behavior = "calibrated";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  synth->add_option("--days", synth_cfg.days, "days in the observation window");
  synth->add_option("--matches-per-day", synth_cfg.matches_per_day, "matches per day");
  synth->add_option("--players", synth_cfg.players, "player population");
  synth->add_option("--match-size", synth_cfg.match_size, "players per match");
  synth->add_option("--cheater-rate", synth_cfg.cheater_rate, "seed cheater fraction");
  synth->add_option("--kill-boost", synth_cfg.cheater_kill_boost, "cheater kill weight");
  synth->add_option("--activity", synth_cfg.activity_rate, "daily activity probability");
  synth->add_option("--homophily", synth_cfg.team_homophily, "cheater team clustering chance");
  synth->add_option("--delta", synth_cfg.delta_days, "contagion trigger window, days");
  synth->add_option("--plant", plant_spec,
                    "planted rule \"n_o,n_v,prob[,baseline]\" (e.g. \"2,2,1.0\")");
  synth->add_option("--behavior", behavior, "calibrated|super-threshold|sub-threshold");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  // run
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("--config", config_path, "pipeline TOML config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(ingest)) {
      return cmd_ingest(matches_path, bans_path, out_path);
    }
    if (app.got_subcommand(onset)) {
      const Dataset ds = load_dataset_file(dataset_path);
      std::vector<BanRecord> bans = ds.bans;
      if (!bans_path.empty()) {
        std::ifstream in(bans_path);
        if (!in) throw std::runtime_error("cannot open '" + bans_path + "'");
        BanParseResult parsed = load_ban_list(in);
        for (const auto& err : parsed.errors) {
          std::cerr << "bans line " << err.line << ": " << err.message << '\n';
        }
        bans = std::move(parsed.bans);
      }
      write_cheaters_csv(out_path, estimate_all_onsets(ds, bans, onset_cfg));
      std::cout << "cheaters=" << bans.size() << '\n';
      return 0;
    }
    if (app.got_subcommand(exposures)) {
      const Dataset ds = load_dataset_file(dataset_path);
      const auto profiles = load_cheaters_csv(cheaters_path);
      ExposureDefinition defn = parse_definition(definition_name);
      defn.teammates_observe = !no_teammate_observers;
      const auto events = detect_all_exposures(ds, profiles, defn);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
      out << "subject,cheater,match_id,kind,time\n";
      for (const auto& e : events) {
        out << e.subject << ',' << e.cheater << ',' << e.match_id << ',' << to_string(e.kind)
            << ',' << e.time << '\n';
      }
      std::cout << "exposures=" << events.size() << '\n';
      return 0;
    }
    if (app.got_subcommand(count)) {
      const auto profiles = load_cheaters_csv(cheaters_path);
      const auto events = load_exposures_csv(exposures_path);
      SequenceConfig seq;
      seq.delta_days = delta_days;
      const auto exposure_profiles = build_profiles(profiles, events, seq);
      nlohmann::json j;
      j["delta_days"] = delta_days;
      j["mode"] = count_mode;
      if (count_mode == "per-cheater") {
        const CategoryCounts c = count_per_cheater(exposure_profiles);
        j["counts"] = {{"obs_only", c.obs_only},
                       {"vict_only", c.vict_only},
                       {"obs_and_vict", c.obs_and_vict}};
      } else if (count_mode == "per-player") {
        const BucketMatrix m = count_per_player(exposure_profiles);
        auto& counts = j["counts"] = nlohmann::json::object();
        for (int bo = 0; bo < 3; ++bo) {
          for (int bv = 0; bv < 3; ++bv) {
            if (bo == 0 && bv == 0) continue;
            counts[std::string("bucket_") + (bo == 2 ? "2plus" : std::to_string(bo)) + "_" +
                   (bv == 2 ? "2plus" : std::to_string(bv))] = m.at(bo, bv);
          }
        }
      } else {
        throw std::runtime_error("unknown mode '" + count_mode + "'");
      }
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
      out << j.dump(2) << '\n';
      return 0;
    }
    if (app.got_subcommand(permute)) {
      const Dataset ds = load_dataset_file(dataset_path);
      const auto profiles = load_cheaters_csv(cheaters_path);
      ExposureDefinition defn = parse_definition(definition_name);
      defn.teammates_observe = !no_teammate_observers;
      const SequenceConfig seq{delta_days, defn};
      const PermutationConfig perm{n_r, seed, false};
      const EnsembleResult ensemble = run_null_ensemble(ds, profiles, defn, seq, perm, threads);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
      out << ensemble_to_json(ensemble).dump(2) << '\n';
      std::cout << "replicates=" << n_r << '\n';
      return 0;
    }
    if (app.got_subcommand(analyze)) {
      std::ifstream in(ensemble_path);
      if (!in) throw std::runtime_error("cannot open '" + ensemble_path + "'");
      nlohmann::json j;
      in >> j;
      const auto cells = analyze_ensemble(ensemble_from_json(j), alpha);
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
      out << results_to_json(cells, alpha, bonferroni_m).dump(2) << '\n';
      for (const auto& cell : cells) {
        std::cout << cell.test.cell << " empirical=" << cell.test.empirical_count
                  << " p_hat=" << cell.test.p_hat << " se=" << cell.test.std_err
                  << (cell.significant ? " *" : "") << '\n';
      }
      return 0;
    }
    if (app.got_subcommand(synth)) {
      if (!plant_spec.empty()) {
        ContagionRule rule;
        double baseline = 0.0;
        char extra;
        const int got = std::sscanf(plant_spec.c_str(), "%d,%d,%lf,%lf%c", &rule.min_observed,
                                    &rule.min_victimized, &rule.adoption_probability, &baseline,
                                    &extra);
        if (got != 3 && got != 4) {
          throw std::runtime_error("bad --plant spec '" + plant_spec + "'");
        }
        rule.baseline_adoption = got == 4 ? baseline : 0.0;
        synth_cfg.contagion = rule;
      }
      if (behavior == "super-threshold") {
        synth_cfg.cheater_behavior = CheaterBehavior::super_threshold;
      } else if (behavior == "sub-threshold") {
        synth_cfg.cheater_behavior = CheaterBehavior::sub_threshold;
      } else if (behavior != "calibrated") {
        throw std::runtime_error("unknown behavior '" + behavior + "'");
      }
      const auto [dataset, truth] = generate_dataset(synth_cfg);
      const EmitPaths paths = emit_dataset_files(dataset, out_dir);
      {
        std::ofstream out(std::filesystem::path(out_dir) / "ground_truth.csv",
                          std::ios::binary);
        out << "player,onset_date,ban_date,contagion_triggered\n";
        for (std::size_t i = 0; i < truth.player_ids.size(); ++i) {
          if (!truth.players[i].cheater) continue;
          out << truth.player_ids[i] << ',' << format_date(truth.players[i].onset_date) << ','
              << format_date(truth.players[i].ban_date) << ','
              << (truth.players[i].contagion_triggered ? "1" : "0") << '\n';
        }
      }
      std::cout << "matches=" << dataset.stats.match_count << " players="
                << dataset.stats.player_count << " bans=" << dataset.bans.size() << '\n';
      std::cout << "wrote " << paths.matches.string() << ", " << paths.bans.string() << '\n';
      return 0;
    }
    if (app.got_subcommand(run)) {
      const PipelineConfig cfg = PipelineConfig::from_toml(config_path);
      const ReportBundle bundle = run_pipeline(cfg, &std::cerr);
      for (const auto& cell : bundle.cells) {
        std::cout << cell.test.cell << " empirical=" << cell.test.empirical_count
                  << " p_hat=" << cell.test.p_hat << " se=" << cell.test.std_err
                  << (cell.significant ? " *" : "") << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
