// gaggle: train, evaluate and benchmark Hungry Geese value agents.
//
// Subcommands:
//   train <config>        run a training job from a flat key=value config
//   eval                  tournament between checkpoints / builtin agents
//   export-replay         play episodes with a checkpoint, write JSONL replay
//   bench-env             random-action simulator throughput
//
// Machine-readable results go to stdout (JSON / JSONL / CSV files), human
// summaries to stderr. Exit codes: 0 ok, 1 usage error, 2 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaggle/checkpoint.hpp"
#include "gaggle/env.hpp"
#include "gaggle/eval.hpp"
#include "gaggle/policy.hpp"
#include "gaggle/replay_io.hpp"
#include "gaggle/training.hpp"

namespace {

using nlohmann::json;

struct LoadedAgent {
  std::unique_ptr<gaggle::Checkpoint> checkpoint;
  std::unique_ptr<gaggle::PolicyAgent> policy;
};

LoadedAgent make_agent(const std::string& spec_str) {
  LoadedAgent a;
  if (spec_str == "greedy") {
    a.policy = std::make_unique<gaggle::GreedyPolicy>();
    return a;
  }
  if (spec_str == "random") {
    a.policy = std::make_unique<gaggle::RandomPolicy>();
    return a;
  }
  a.checkpoint = std::make_unique<gaggle::Checkpoint>(gaggle::load_checkpoint(spec_str));
  std::string label = std::filesystem::path(spec_str).stem().string();
  a.policy = std::make_unique<gaggle::NetPolicy>(&a.checkpoint->online,
                                                 gaggle::checkpoint_encoder(*a.checkpoint), label);
  return a;
}

int cmd_train(const std::string& config_path) {
  gaggle::TrainConfig cfg = gaggle::load_config(config_path);
  std::cerr << "training " << gaggle::model_name(cfg.model_kind) << " for " << cfg.total_steps
            << " steps, out_dir " << cfg.out_dir << "\n";
  gaggle::TrainResult res = gaggle::run_training(cfg, &std::cerr);
  json out;
  out["metrics_csv"] = res.metrics_path;
  out["checkpoint"] = res.checkpoint_path;
  out["steps"] = res.steps;
  out["episodes"] = res.episodes;
  out["final_eval_win_rate"] = res.final_eval_win_rate;
  std::cout << out.dump() << "\n";
  std::cerr << "done: " << res.steps << " steps over " << res.episodes << " episodes\n";
  return 0;
}

int cmd_eval(const std::vector<std::string>& models, int games, uint64_t seed, bool per_match) {
  if (models.empty() || models.size() > 4)
    throw gaggle::ConfigError("eval: between 1 and 4 models");
  if (games < 1) throw gaggle::ConfigError("eval: games must be >= 1");
  std::vector<LoadedAgent> agents;
  for (const auto& m : models) agents.push_back(make_agent(m));
  while (agents.size() < 4) agents.push_back(make_agent("greedy"));

  std::array<gaggle::PolicyAgent*, 4> seats{};
  std::array<std::string, 4> names{};
  for (int g = 0; g < 4; ++g) {
    seats[g] = agents[static_cast<size_t>(g)].policy.get();
    names[g] = seats[g]->name();
  }
  gaggle::EnvConfig env_cfg;
  gaggle::TournamentResult t = gaggle::tournament(seats, games, seed, env_cfg);

  gaggle::EloTable elo;
  for (const auto& n : names) elo.ensure(n);
  for (const auto& m : t.matches) elo_update(elo, names, m, env_cfg.num_geese);

  if (per_match) {
    for (size_t i = 0; i < t.matches.size(); ++i) {
      const auto& m = t.matches[i];
      json line;
      line["game"] = i;
      line["rewards"] = m.final_reward;
      line["ranks"] = m.rank;
      line["winner"] = m.winner;
      line["steps"] = m.steps;
      std::cout << line.dump() << "\n";
    }
  }
  json out;
  out["games"] = t.n_games;
  json per = json::array();
  for (int g = 0; g < 4; ++g) {
    json a;
    a["seat"] = g;
    a["name"] = names[g];
    a["wins"] = t.wins[g];
    a["win_rate"] = t.win_rate[g];
    a["mean_score"] = t.mean_score[g];
    a["max_score"] = t.max_score[g];
    a["elo"] = elo.rating[names[g]];
    per.push_back(a);
  }
  out["agents"] = per;
  std::cout << out.dump() << "\n";
  for (int g = 0; g < 4; ++g)
    std::cerr << "seat " << g << " " << names[g] << ": wins " << t.wins[g] << "/" << t.n_games
              << " win_rate " << t.win_rate[g] << " mean_score " << t.mean_score[g]
              << " max_score " << t.max_score[g] << " elo " << elo.rating[names[g]] << "\n";
  return 0;
}

// One episode per file; extra games get an index suffix before the extension.
int cmd_export_replay(const std::string& checkpoint, const std::string& out_path,
                      const std::vector<std::string>& opponents, int games, uint64_t seed) {
  if (opponents.size() > 3) throw gaggle::ConfigError("export-replay: at most 3 opponents");
  if (games < 1) throw gaggle::ConfigError("export-replay: games must be >= 1");
  std::vector<LoadedAgent> agents;
  agents.push_back(make_agent(checkpoint));
  for (const auto& o : opponents) agents.push_back(make_agent(o));
  while (agents.size() < 4) agents.push_back(make_agent("greedy"));

  std::array<gaggle::PolicyAgent*, 4> seats{};
  for (int g = 0; g < 4; ++g) seats[g] = agents[static_cast<size_t>(g)].policy.get();
  gaggle::EnvConfig env_cfg;

  std::filesystem::path base(out_path);
  int wins = 0;
  json files = json::array();
  for (int i = 0; i < games; ++i) {
    std::filesystem::path path = base;
    if (games > 1) {
      path = base.parent_path() /
             (base.stem().string() + "_" + std::to_string(i) + base.extension().string());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw gaggle::ConfigError("export-replay: cannot write " + path.string());
    gaggle::MatchResult m = gaggle::export_episode(
        os, seats, gaggle::derive_seed(seed, static_cast<uint64_t>(i)), env_cfg);
    wins += m.winner == 0 ? 1 : 0;
    files.push_back(path.string());
  }
  json out;
  out["replays"] = files;
  out["games"] = games;
  out["wins_seat0"] = wins;
  std::cout << out.dump() << "\n";
  std::cerr << "wrote " << games << " episode file(s)\n";
  return 0;
}

int cmd_bench_env(int64_t steps, uint64_t seed) {
  gaggle::EnvConfig cfg;
  gaggle::SplitMix64 rng(gaggle::derive_seed(seed, 7));
  int64_t done_steps = 0;
  auto t0 = std::chrono::steady_clock::now();
  uint64_t episode = 0;
  while (done_steps < steps) {
    gaggle::GameState game = gaggle::new_game(gaggle::derive_seed(seed, episode++), cfg);
    while (!game.done() && done_steps < steps) {
      std::array<std::optional<gaggle::Action>, 4> actions;
      for (int g = 0; g < cfg.num_geese; ++g)
        if (game.geese[g].alive) actions[g] = gaggle::random_legal(game, g, rng);
      gaggle::StepOutcome out = gaggle::step(game, actions);
      game = std::move(out.next);
      ++done_steps;
      if (out.done) break;
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  double seconds = std::chrono::duration<double>(t1 - t0).count();
  json out;
  out["steps"] = done_steps;
  out["seconds"] = seconds;
  out["steps_per_second"] = static_cast<double>(done_steps) / seconds;
  std::cout << out.dump() << "\n";
  std::cerr << done_steps << " steps in " << seconds << " s = "
            << static_cast<double>(done_steps) / seconds << " steps/s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaggle: value-based RL engine for Hungry Geese"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "run a training job");
  train->add_option("config", config_path, "flat key=value config file")->required();

  std::vector<std::string> models;
  int games = 100;
  uint64_t seed = 1;
  bool per_match = false;
  auto* eval = app.add_subcommand("eval", "tournament between agents");
  eval->add_option("--models", models,
                   "checkpoint paths or builtin agents (greedy, random); up to 4 seats")
      ->required()
      ->delimiter(',');
  eval->add_option("--games", games, "number of games");
  eval->add_option("--seed", seed, "master seed");
  eval->add_flag("--per-match", per_match, "stream one JSON line per match");

  std::string checkpoint, out_path = "replay.jsonl";
  std::vector<std::string> opponents;
  int replay_games = 1;
  uint64_t replay_seed = 1;
  auto* exp = app.add_subcommand("export-replay", "write episode replays as JSON lines");
  exp->add_option("--checkpoint", checkpoint, "checkpoint path or builtin agent for seat 0")
      ->required();
  exp->add_option("--out", out_path, "output JSONL file");
  exp->add_option("--opponents", opponents, "agents for the other seats")->delimiter(',');
  exp->add_option("--games", replay_games, "episodes to export");
  exp->add_option("--seed", replay_seed, "master seed");

  int64_t bench_steps = 100000;
  uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench-env", "simulator throughput benchmark");
  bench->add_option("--steps", bench_steps, "environment steps to run");
  bench->add_option("--seed", bench_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(config_path);
    if (app.got_subcommand(eval)) return cmd_eval(models, games, seed, per_match);
    if (app.got_subcommand(exp))
      return cmd_export_replay(checkpoint, out_path, opponents, replay_games, replay_seed);
    if (app.got_subcommand(bench)) return cmd_bench_env(bench_steps, bench_seed);
  } catch (const gaggle::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
