#include "optx/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "optx/leaders.hpp"
#include "optx/mw.hpp"
#include "optx/oracle_experts.hpp"
#include "optx/rng.hpp"

namespace optx {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool is_checkpoint(std::int64_t t, std::int64_t horizon) {
  return t == horizon || (t & (t - 1)) == 0;
}

// Runs fn(0..trials-1) on a small worker pool; each trial owns its state and
// writes only its own record slot. The first exception wins and is rethrown
// after all workers drain.
void run_trials(int trials, const std::function<void(int)>& fn) {
  if (trials <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  int workers = static_cast<int>(hw == 0 ? 1 : hw);
  if (workers > trials) workers = trials;
  if (workers <= 1) {
    for (int i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= trials || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// The two expert-mode instance families behind one surface: expert count,
// action handles (adversary side), metered oracle, raw loss for the ledger.
struct ExpertsProblem {
  int num_experts = 0;
  std::shared_ptr<const HardExpertsInstance> hard;
  std::shared_ptr<const BinaryClassificationInstance> binary;
  std::optional<OraclePair> oracle;

  ExpertId canonical_action(std::int64_t t) const {
    return hard ? hard->canonical_action(t) : binary->canonical_action(t);
  }
  double raw_loss(ExpertId x, ExpertId action) const {
    if (hard) return hard->loss(x, action);
    return binary->loss(x, BinaryClassificationInstance::feature_of(action),
                        BinaryClassificationInstance::label_of(action));
  }
};

ExpertsProblem build_experts_problem(const InstanceSpec& ispec, std::uint64_t instance_seed) {
  ExpertsProblem p;
  if (ispec.family == "hard_experts") {
    if (ispec.n < 1) throw std::invalid_argument("spec-error: hard_experts needs n >= 1");
    p.hard = std::make_shared<const HardExpertsInstance>(
        gen_hard_experts(static_cast<int>(ispec.n), instance_seed));
    p.num_experts = p.hard->num_experts;
    p.oracle.emplace(make_hard_oracle(p.hard));
  } else if (ispec.family == "binary_cls") {
    if (ispec.n < 1) throw std::invalid_argument("spec-error: binary_cls needs n >= 1");
    p.binary = std::make_shared<const BinaryClassificationInstance>(
        gen_binary_classification(static_cast<int>(ispec.n), instance_seed));
    p.num_experts = p.binary->num_hypotheses;
    p.oracle.emplace(make_binary_oracle(p.binary));
  } else {
    throw std::invalid_argument("spec-error: experts mode supports families hard_experts and binary_cls");
  }
  return p;
}

void run_one_experts_trial(const ExperimentSpec& spec, const InstanceSpec& ispec, int trial,
                           TrialRecord& rec) {
  const auto t_setup = Clock::now();
  rec.trial = trial;
  rec.seed = trial_seed(spec.seed, trial);
  const std::uint64_t instance_seed =
      derive_seed(ispec.seed, {stream_label("instance"), static_cast<std::uint64_t>(trial)});
  ExpertsProblem prob = build_experts_problem(ispec, instance_seed);
  const int n = prob.num_experts;
  const std::int64_t horizon = spec.horizon;
  const double t_dbl = static_cast<double>(horizon);
  const double gamma = 1.0 / t_dbl;

  RngStream rng(derive_seed(rec.seed, {stream_label("learner")}));
  std::optional<Mw1> mw1;
  std::optional<Mw2> mw2;
  std::optional<Mw3> mw3;
  std::optional<Leaders> leaders;
  std::optional<SelfObliviousExperts> oracle_alg;
  const bool needs_leader =
      spec.algorithm == "mw3" || spec.algorithm == "leaders" || spec.algorithm == "oracle";

  if (spec.algorithm == "mw1") {
    mw1.emplace(n, std::sqrt(2.0 * std::log(n * t_dbl) / t_dbl), gamma);
  } else if (spec.algorithm == "mw2") {
    mw2.emplace(n, 2.0 * std::sqrt(std::log(n * t_dbl) / (n * t_dbl)), gamma);
  } else if (spec.algorithm == "mw3") {
    const int k = std::max(1, floor_sqrt(n));
    mw3.emplace(n, k, 2.0 * std::sqrt(std::log(k * t_dbl) / (k * t_dbl)), gamma);
  } else if (spec.algorithm == "leaders") {
    leaders.emplace(n, std::max(1, floor_sqrt(n)), horizon);
  } else if (spec.algorithm == "oracle") {
    oracle_alg.emplace(n, horizon, rec.seed);
  } else {
    throw std::invalid_argument("spec-error: unknown algorithm '" + spec.algorithm + "'");
  }

  const OraclePair& oracle = *prob.oracle;
  LeaderFeed feed(oracle);
  RegretLedger ledger(n);
  Eigen::ArrayXd dense(n);
  rec.setup_seconds = seconds_since(t_setup);

  const auto t_run = Clock::now();
  for (std::int64_t t = 1; t <= horizon; ++t) {
    ExpertId played;
    if (mw1) played = mw1->play(rng);
    else if (mw2) played = mw2->play(rng);
    else if (mw3) played = mw3->play(rng);
    else if (leaders) played = leaders->play(rng);
    else played = oracle_alg->play();

    const ExpertId action = prob.canonical_action(t);
    const ExpertId leader = needs_leader ? feed.push(action) : -1;
    auto loss_of = [&](ExpertId x) { return oracle.value(x, action); };

    if (mw1) {
      for (int i = 0; i < n; ++i) dense[i] = loss_of(i);
      mw1->observe(dense);
    } else if (mw2) {
      mw2->observe(loss_of, rng);
    } else if (mw3) {
      mw3->observe(loss_of, leader, rng);
    } else if (leaders) {
      leaders->observe(loss_of, leader, rng);
    } else {
      oracle_alg->observe(loss_of, leader);
    }

    ledger.update(played, [&](ExpertId x) { return prob.raw_loss(x, action); });
    if (is_checkpoint(t, horizon))
      rec.checkpoints.push_back({t, "avg_regret", ledger.average_regret()});
  }
  rec.run_seconds = seconds_since(t_run);
  rec.value_calls = oracle.counters().value_calls;
  rec.opt_calls = oracle.counters().opt_calls;
}

GameMatrix build_game(const InstanceSpec& ispec, std::uint64_t instance_seed) {
  if (ispec.family == "random") {
    if (ispec.n < 1) throw std::invalid_argument("spec-error: random game needs n >= 1");
    return GameMatrix::random_uniform(static_cast<int>(ispec.n), instance_seed);
  }
  if (ispec.family == "aldous") {
    if (ispec.d < 1) throw std::invalid_argument("spec-error: aldous needs d >= 1");
    return gen_aldous_game(gen_staircase_function(ispec.d, instance_seed)).game;
  }
  if (ispec.family == "file") {
    if (ispec.file.empty()) throw std::invalid_argument("spec-error: family=file needs file=");
    return load_game(ispec.file);
  }
  throw std::invalid_argument("spec-error: game mode supports families random, aldous, and file");
}

void run_one_game_trial(const ExperimentSpec& spec, const InstanceSpec& ispec, int trial,
                        TrialRecord& rec) {
  const auto t_setup = Clock::now();
  rec.trial = trial;
  rec.seed = trial_seed(spec.seed, trial);
  const std::uint64_t instance_seed =
      derive_seed(ispec.seed, {stream_label("instance"), static_cast<std::uint64_t>(trial)});
  GameMatrix game = build_game(ispec, instance_seed);

  std::int64_t horizon = spec.horizon;
  if (horizon <= 0) {
    if (!(spec.eps > 0.0 && spec.delta > 0.0))
      throw std::invalid_argument("spec-error: game mode needs --t or both --eps and --delta");
    horizon = horizon_for(game.size(), spec.eps, spec.delta);
  }
  RngStream rng(derive_seed(rec.seed, {stream_label("solve")}));
  rec.setup_seconds = seconds_since(t_setup);

  const auto t_run = Clock::now();
  EquilibriumReport rep = solve_game(game, horizon, rng,
                                     [&](std::int64_t round, const EquilibriumReport& cp) {
                                       rec.checkpoints.push_back(
                                           {round, "duality_gap", cp.duality_gap});
                                     });
  rec.run_seconds = seconds_since(t_run);
  rec.value_calls = rep.payoff_calls;
  rec.br_calls = rep.br_calls;
  rec.game_report = std::move(rep);
}

void require_positive_horizon(const ExperimentSpec& spec) {
  if (spec.horizon < 1)
    throw std::invalid_argument("spec-error: experts mode needs a horizon --t >= 1");
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  return derive_seed(base, {stream_label("trial"), static_cast<std::uint64_t>(trial)});
}

std::vector<TrialRecord> run_experts(const ExperimentSpec& spec) {
  if (spec.mode != ExperimentMode::ExpertsRun)
    throw std::invalid_argument("spec-error: run_experts needs mode experts-run");
  if (spec.trials < 0) throw std::invalid_argument("spec-error: trial count must be >= 0");
  require_positive_horizon(spec);
  const InstanceSpec ispec = parse_instance_spec(spec.instance);
  std::vector<TrialRecord> records(static_cast<size_t>(spec.trials));
  run_trials(spec.trials, [&](int i) {
    run_one_experts_trial(spec, ispec, i, records[static_cast<size_t>(i)]);
  });
  return records;
}

std::vector<TrialRecord> run_game(const ExperimentSpec& spec) {
  if (spec.mode != ExperimentMode::GameSolve)
    throw std::invalid_argument("spec-error: run_game needs mode game-solve");
  if (spec.trials < 0) throw std::invalid_argument("spec-error: trial count must be >= 0");
  const InstanceSpec ispec = parse_instance_spec(spec.instance);
  std::vector<TrialRecord> records(static_cast<size_t>(spec.trials));
  run_trials(spec.trials, [&](int i) {
    run_one_game_trial(spec, ispec, i, records[static_cast<size_t>(i)]);
  });
  return records;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json strategy_json(const MixedStrategy& s) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : s.atoms) atoms.push_back({{"index", a.index}, {"mass", a.mass}});
  return atoms;
}

const char* mode_name(ExperimentMode m) {
  return m == ExperimentMode::ExpertsRun ? "experts-run" : "game-solve";
}

}  // namespace

void emit_results(const ExperimentSpec& spec, const std::vector<TrialRecord>& records,
                  const std::string& path) {
  {
    std::ofstream csv(path, std::ios::trunc);
    if (!csv) throw std::runtime_error("io: cannot open " + path + " for writing");
    csv << "trial,seed,round,metric,value\n";
    for (const TrialRecord& rec : records) {
      for (const CheckpointRecord& cp : rec.checkpoints) {
        csv << rec.trial << ',' << rec.seed << ',' << cp.round << ',' << cp.metric << ','
            << format_value(cp.value) << '\n';
      }
    }
    if (!csv) throw std::runtime_error("io: short write to " + path);
  }

  nlohmann::json doc;
  doc["spec"] = {{"mode", mode_name(spec.mode)},   {"algorithm", spec.algorithm},
                 {"instance", spec.instance},      {"horizon", spec.horizon},
                 {"eps", spec.eps},                {"delta", spec.delta},
                 {"trials", spec.trials},          {"seed", spec.seed},
                 {"out", spec.out}};
  doc["version"] = {{"optx", kOptxVersion}, {"results_format", 1}};
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialRecord& rec : records) {
    nlohmann::json t = {{"trial", rec.trial},
                        {"seed", rec.seed},
                        {"value_calls", rec.value_calls},
                        {"opt_calls", rec.opt_calls},
                        {"br_calls", rec.br_calls},
                        {"setup_seconds", rec.setup_seconds},
                        {"run_seconds", rec.run_seconds}};
    if (rec.game_report) {
      const EquilibriumReport& rep = *rec.game_report;
      t["game"] = {{"value", rep.value},
                   {"row_exploitability", rep.row_exploitability},
                   {"col_exploitability", rep.col_exploitability},
                   {"duality_gap", rep.duality_gap},
                   {"rounds", rep.rounds},
                   {"row_strategy", strategy_json(rep.row_strategy)},
                   {"col_strategy", strategy_json(rep.col_strategy)}};
    }
    trials.push_back(std::move(t));
  }
  doc["trials"] = std::move(trials);

  const std::string sidecar = path + ".json";
  std::ofstream js(sidecar, std::ios::trunc);
  if (!js) throw std::runtime_error("io: cannot open " + sidecar + " for writing");
  js << doc.dump(2) << '\n';
  if (!js) throw std::runtime_error("io: short write to " + sidecar);
}

}  // namespace optx
