#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gaggle/checkpoint.hpp"
#include "gaggle/common.hpp"
#include "gaggle/encoding.hpp"
#include "gaggle/env.hpp"
#include "gaggle/eval.hpp"
#include "gaggle/models.hpp"
#include "gaggle/policy.hpp"
#include "gaggle/replay.hpp"
#include "gaggle/rewards.hpp"
#include "gaggle/rng.hpp"

namespace gaggle {

// Every knob of a training run. Config files are flat `key = value` text,
// one pair per line, '#' comments; keys are exactly these field names.
struct TrainConfig {
  ModelKind model_kind = ModelKind::VanillaDQN;
  std::string encoder_kind = "default";  // default | slim3 | full17
  bool center_player = false;
  ShaperKind shaper_kind = ShaperKind::DqnTraining;
  ShaperParams shaper;

  double gamma = 0.99;
  double lr = 1e-4;
  int batch_size = 64;
  int64_t buffer_capacity = 50000;
  int sync_period = 100;

  double eps_start = 1.0;
  double eps_end = 0.05;
  int64_t eps_decay_steps = -1;  // < 0: 30% of total_steps
  ExploreSource explore_source = ExploreSource::Random;

  int64_t total_steps = 50000;
  int64_t eval_cadence = 5000;
  int eval_games = 50;
  uint64_t seed = 1;
  std::vector<std::string> opponents = {"greedy", "greedy", "greedy"};

  int num_geese = 4;
  int food_count = 2;
  int hunger_rate = 40;
  int max_steps = 200;

  int train_every = 1;
  int64_t warmup = -1;  // < 0: batch_size * 10
  std::string loss = "default";  // default | mse | huber
  double huber_delta = 1.0;
  double leaky_slope = 0.01;
  bool double_select_on_current = false;
  std::string out_dir = "run";

  EncoderKind encoder() const {
    EncoderKind e;
    e.variant = encoder_kind == "slim3"    ? EncoderVariant::Slim3
                : encoder_kind == "full17" ? EncoderVariant::Full17
                                           : default_encoder(model_kind);
    e.center_player = center_player;
    return e;
  }

  LossKind loss_kind() const {
    if (loss == "mse") return LossKind::MSE;
    if (loss == "huber") return LossKind::Huber;
    return model_kind == ModelKind::VanillaDQN ? LossKind::MSE : LossKind::Huber;
  }

  EnvConfig env() const { return {num_geese, food_count, hunger_rate, max_steps}; }

  int64_t effective_warmup() const { return warmup >= 0 ? warmup : static_cast<int64_t>(batch_size) * 10; }
  int64_t effective_decay() const {
    return eps_decay_steps >= 0 ? eps_decay_steps : std::max<int64_t>(1, total_steps * 3 / 10);
  }
};

// ---- config file ------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + v);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline void apply_config_key(TrainConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  try {
    if (key == "model_kind") {
      if (value == "vanilla_dqn") c.model_kind = ModelKind::VanillaDQN;
      else if (value == "double_dqn") c.model_kind = ModelKind::DoubleDQN;
      else if (value == "dueling_dqn") c.model_kind = ModelKind::DuelingDQN;
      else throw ConfigError("config: unknown model_kind " + value);
    } else if (key == "encoder_kind") {
      if (value != "default" && value != "slim3" && value != "full17")
        throw ConfigError("config: unknown encoder_kind " + value);
      c.encoder_kind = value;
    } else if (key == "center_player") c.center_player = parse_bool(value, key);
    else if (key == "shaper_kind") {
      if (value == "vanilla_delta") c.shaper_kind = ShaperKind::VanillaDelta;
      else if (value == "dqn_training") c.shaper_kind = ShaperKind::DqnTraining;
      else if (value == "manhattan") c.shaper_kind = ShaperKind::ManhattanShaped;
      else throw ConfigError("config: unknown shaper_kind " + value);
    } else if (key == "eat_bonus") c.shaper.eat_bonus = std::stod(value);
    else if (key == "death_penalty") c.shaper.death_penalty = std::stod(value);
    else if (key == "win_bonus") c.shaper.win_bonus = std::stod(value);
    else if (key == "milestone_bonus") c.shaper.milestone_bonus = std::stod(value);
    else if (key == "survive_bonus") c.shaper.survive_bonus = std::stod(value);
    else if (key == "milestone_period") c.shaper.milestone_period = std::stoi(value);
    else if (key == "manhattan_eat_bonus") c.shaper.manhattan_eat_bonus = std::stod(value);
    else if (key == "max_food_distance") c.shaper.max_food_distance = std::stoi(value);
    else if (key == "manhattan_printed_branch") c.shaper.manhattan_printed_branch = parse_bool(value, key);
    else if (key == "gamma") c.gamma = std::stod(value);
    else if (key == "lr") c.lr = std::stod(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "buffer_capacity") c.buffer_capacity = std::stoll(value);
    else if (key == "sync_period") c.sync_period = std::stoi(value);
    else if (key == "eps_start") c.eps_start = std::stod(value);
    else if (key == "eps_end") c.eps_end = std::stod(value);
    else if (key == "eps_decay_steps") c.eps_decay_steps = std::stoll(value);
    else if (key == "explore_source") {
      if (value == "random") c.explore_source = ExploreSource::Random;
      else if (value == "rule_based") c.explore_source = ExploreSource::RuleBased;
      else throw ConfigError("config: unknown explore_source " + value);
    } else if (key == "total_steps") c.total_steps = std::stoll(value);
    else if (key == "eval_cadence") c.eval_cadence = std::stoll(value);
    else if (key == "eval_games") c.eval_games = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "opponents") c.opponents = detail::split_list(value);
    else if (key == "num_geese") c.num_geese = std::stoi(value);
    else if (key == "food_count") c.food_count = std::stoi(value);
    else if (key == "hunger_rate") c.hunger_rate = std::stoi(value);
    else if (key == "max_steps") c.max_steps = std::stoi(value);
    else if (key == "train_every") c.train_every = std::stoi(value);
    else if (key == "warmup") c.warmup = std::stoll(value);
    else if (key == "loss") {
      if (value != "default" && value != "mse" && value != "huber")
        throw ConfigError("config: unknown loss " + value);
      c.loss = value;
    } else if (key == "huber_delta") c.huber_delta = std::stod(value);
    else if (key == "leaky_slope") c.leaky_slope = std::stod(value);
    else if (key == "double_select_on_current") c.double_select_on_current = parse_bool(value, key);
    else if (key == "out_dir") c.out_dir = value;
    else throw ConfigError("config: unknown key " + key);
  } catch (const std::invalid_argument&) {
    throw ConfigError("config: bad value for " + key + ": " + value);
  } catch (const std::out_of_range&) {
    throw ConfigError("config: value out of range for " + key + ": " + value);
  }
}

inline TrainConfig parse_config_text(const std::string& text) {
  TrainConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    apply_config_key(c, key, value);
  }
  return c;
}

inline TrainConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

inline void validate_config(const TrainConfig& c) {
  if (c.gamma < 0.0 || c.gamma > 1.0) throw ConfigError("config: gamma must be in [0,1]");
  if (c.lr <= 0.0) throw ConfigError("config: lr must be positive");
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.buffer_capacity < c.batch_size) throw ConfigError("config: buffer_capacity < batch_size");
  if (c.sync_period < 1) throw ConfigError("config: sync_period must be >= 1");
  if (c.eps_start < 0.0 || c.eps_start > 1.0 || c.eps_end < 0.0 || c.eps_end > 1.0)
    throw ConfigError("config: epsilon must be in [0,1]");
  if (c.total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (c.eval_cadence < 1) throw ConfigError("config: eval_cadence must be >= 1");
  if (c.eval_games < 1) throw ConfigError("config: eval_games must be >= 1");
  if (c.train_every < 1) throw ConfigError("config: train_every must be >= 1");
  if (c.huber_delta <= 0.0) throw ConfigError("config: huber_delta must be positive");
  if (c.num_geese < 1 || c.num_geese > 4) throw ConfigError("config: num_geese must be in [1,4]");
  if (static_cast<int>(c.opponents.size()) != c.num_geese - 1)
    throw ConfigError("config: opponents must list num_geese - 1 names");
  for (const auto& o : c.opponents)
    if (o != "greedy" && o != "random" && o != "self")
      throw ConfigError("config: unknown opponent " + o);
}

// ---- metrics -----------------------------------------------------------------

struct MetricsRow {
  int64_t step = 0;
  double loss = 0.0;
  double win_rate = 0.0;
  double mean_score = 0.0;
  double elo = 0.0;
  double epsilon = 0.0;
};

inline std::string format_metrics_row(const MetricsRow& r) {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<long long>(r.step), r.loss, r.win_rate, r.mean_score, r.elo, r.epsilon);
  return buf;
}

inline constexpr const char* kMetricsHeader = "step,loss,win_rate,mean_score,elo,epsilon";

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::string metrics_path;
  std::string checkpoint_path;
  int64_t steps = 0;
  int64_t episodes = 0;
  double final_eval_win_rate = 0.0;
};

// ---- the loop ------------------------------------------------------------------

namespace detail {

inline std::unique_ptr<PolicyAgent> make_opponent(const std::string& name, QNetwork* frozen,
                                                  const EncoderKind& enc) {
  if (name == "greedy") return std::make_unique<GreedyPolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "self") return std::make_unique<NetPolicy>(frozen, enc, "self");
  throw ConfigError("unknown opponent " + name);
}

}  // namespace detail

// Self-play training: the learner sits at goose 0, roster opponents fill the
// other seats, one shaped transition is recorded per learner step, and one
// gradient step runs per train_every env steps once the buffer is warm. At
// every eval_cadence steps a frozen-policy tournament appends a metrics row
// and a checkpoint is written. Fully reproducible from the config seed.
inline TrainResult run_training(const TrainConfig& cfg, std::ostream* log = nullptr) {
  validate_config(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  const EncoderKind enc = cfg.encoder();
  const EnvConfig env_cfg = cfg.env();
  const LossKind loss_kind = cfg.loss_kind();
  EpsilonSchedule schedule{cfg.eps_start, cfg.eps_end, cfg.effective_decay()};

  TargetPair pair = TargetPair::make(cfg.model_kind, derive_seed(cfg.seed, 5), cfg.sync_period,
                                     cfg.leaky_slope, encoder_channels(enc.variant));
  OptimState optim;
  optim.lr = cfg.lr;
  optim.init(pair.online.params());

  ReplayBuffer buffer(static_cast<size_t>(cfg.buffer_capacity));
  SplitMix64 env_stream(derive_seed(cfg.seed, 1));
  SplitMix64 policy_rng(derive_seed(cfg.seed, 2));
  SplitMix64 opp_rng(derive_seed(cfg.seed, 3));
  SplitMix64 sample_rng(derive_seed(cfg.seed, 4));
  const uint64_t eval_master = derive_seed(cfg.seed, 6);

  std::vector<std::unique_ptr<PolicyAgent>> opponents;
  for (const auto& name : cfg.opponents)
    opponents.push_back(detail::make_opponent(name, &pair.target, enc));

  NetPolicy learner_policy(&pair.online, enc, "learner");
  EloTable elo;
  elo.ensure("learner");
  for (const auto& o : opponents) elo.ensure(o->name());

  TrainResult result;
  result.metrics_path = (std::filesystem::path(cfg.out_dir) / "metrics.csv").string();
  std::ofstream csv(result.metrics_path, std::ios::binary);
  if (!csv) throw ConfigError("run_training: cannot write " + result.metrics_path);
  csv << kMetricsHeader << "\n";

  const int64_t warmup = std::max<int64_t>(cfg.effective_warmup(), cfg.batch_size);
  int64_t global_step = 0;
  int64_t eval_block = 0;
  double loss_accum = 0.0;
  int64_t loss_count = 0;

  auto run_eval = [&](int64_t at_step) {
    std::array<PolicyAgent*, 4> seats{};
    std::array<std::string, 4> names{};
    seats[0] = &learner_policy;
    names[0] = "learner";
    for (int g = 1; g < cfg.num_geese; ++g) {
      seats[g] = opponents[static_cast<size_t>(g - 1)].get();
      names[g] = seats[g]->name();
    }
    TournamentResult t =
        tournament(seats, cfg.eval_games, derive_seed(eval_master, static_cast<uint64_t>(eval_block)),
                   env_cfg);
    ++eval_block;
    for (const MatchResult& m : t.matches) elo_update(elo, names, m, cfg.num_geese);

    MetricsRow row;
    row.step = at_step;
    row.loss = loss_count > 0 ? loss_accum / static_cast<double>(loss_count) : 0.0;
    row.win_rate = t.win_rate[0];
    row.mean_score = t.mean_score[0];
    row.elo = elo.rating["learner"];
    row.epsilon = schedule.at(at_step);
    loss_accum = 0.0;
    loss_count = 0;
    csv << format_metrics_row(row) << "\n";
    csv.flush();
    result.metrics.push_back(row);
    result.final_eval_win_rate = row.win_rate;
    if (log)
      *log << "step " << at_step << " loss " << row.loss << " win_rate " << row.win_rate
           << " mean_score " << row.mean_score << " elo " << row.elo << " eps " << row.epsilon
           << "\n";

    Checkpoint ck;
    ck.online = pair.online;
    ck.target = pair.target;
    ck.optim = optim;
    ck.encoder_variant = enc.variant == EncoderVariant::Slim3 ? "slim3" : "full17";
    ck.center_player = enc.center_player;
    ck.center_cell = enc.center_cell;
    ck.seed = cfg.seed;
    ck.global_step = at_step;
    ck.sync_period = pair.sync_period;
    ck.steps_since_sync = pair.steps_since_sync;
    ck.rng_states = {env_stream.state, policy_rng.state, opp_rng.state, sample_rng.state};
    std::string path =
        (std::filesystem::path(cfg.out_dir) / ("checkpoint_" + std::to_string(at_step) + ".ggl"))
            .string();
    save_checkpoint(path, ck);
    return path;
  };

  while (global_step < cfg.total_steps) {
    GameState game = new_game(env_stream.next(), env_cfg);
    std::optional<GameState> prev;
    ++result.episodes;

    while (global_step < cfg.total_steps) {
      StateTensor enc_s = encode(enc, game, prev ? &*prev : nullptr, 0);
      auto legal = legal_actions(game, 0);
      double eps = schedule.at(global_step);
      Action a = epsilon_greedy(pair.online, enc_s, legal, eps, policy_rng, cfg.explore_source,
                                &game, 0);

      std::array<std::optional<Action>, 4> actions;
      actions[0] = a;
      for (int g = 1; g < cfg.num_geese; ++g)
        if (game.geese[g].alive)
          actions[g] = opponents[static_cast<size_t>(g - 1)]->act(game, prev ? &*prev : nullptr,
                                                                  g, opp_rng);

      StepOutcome out = step(game, actions);
      StepContext ctx = make_context(game, out.next, 0);
      double r = shape(cfg.shaper_kind, ctx, cfg.shaper);
      bool terminal = out.done || !out.next.geese[0].alive;
      StateTensor enc_next = encode(enc, out.next, &game, 0);
      buffer.push({std::move(enc_s), static_cast<int>(a), r, std::move(enc_next), terminal});
      ++global_step;
      ++result.steps;

      if (static_cast<int64_t>(buffer.size()) >= warmup && global_step % cfg.train_every == 0) {
        auto sampled = buffer.sample(static_cast<size_t>(cfg.batch_size), sample_rng);
        if (sampled) {
          Batch batch = make_batch(*sampled);
          TrainStepResult ts = train_step(pair, batch, loss_kind, optim, cfg.gamma,
                                          cfg.huber_delta, !cfg.double_select_on_current);
          if (!std::isfinite(ts.loss) || ts.loss > 1e9)
            throw TrainingDiverged("loss " + std::to_string(ts.loss) + " at step " +
                                   std::to_string(global_step));
          loss_accum += ts.loss;
          ++loss_count;
        }
      }

      if (global_step % cfg.eval_cadence == 0) result.checkpoint_path = run_eval(global_step);

      if (terminal || global_step >= cfg.total_steps) break;
      prev = std::move(game);
      game = std::move(out.next);
    }
  }

  // Final checkpoint (the initial network when total_steps == 0).
  {
    Checkpoint ck;
    ck.online = pair.online;
    ck.target = pair.target;
    ck.optim = optim;
    ck.encoder_variant = enc.variant == EncoderVariant::Slim3 ? "slim3" : "full17";
    ck.center_player = enc.center_player;
    ck.center_cell = enc.center_cell;
    ck.seed = cfg.seed;
    ck.global_step = global_step;
    ck.sync_period = pair.sync_period;
    ck.steps_since_sync = pair.steps_since_sync;
    ck.rng_states = {env_stream.state, policy_rng.state, opp_rng.state, sample_rng.state};
    std::string path = (std::filesystem::path(cfg.out_dir) / "checkpoint_final.ggl").string();
    save_checkpoint(path, ck);
    result.checkpoint_path = path;
  }
  csv.flush();
  return result;
}

}  // namespace gaggle
