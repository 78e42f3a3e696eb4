// Command-line workbench: run learners against instances, solve games,
// generate instances, verify stored equilibria, and benchmark the per-round
// oracle cost model. Exit codes: 0 success, 2 spec/usage errors, 3 failed
// acceptance-style check (bench ratio, verify-eq).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "optx/core.hpp"
#include "optx/games.hpp"
#include "optx/harness.hpp"
#include "optx/instances.hpp"
#include "optx/oracle_experts.hpp"
#include "optx/rng.hpp"

namespace {

using optx::ExperimentMode;
using optx::ExperimentSpec;
using optx::TrialRecord;

struct CommonArgs {
  std::string alg;
  std::string instance;
  long long n = 0;
  std::int64_t t = 0;
  double eps = 0.0;
  double delta = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out;
};

std::string apply_n_override(const std::string& instance, long long n) {
  optx::InstanceSpec ispec = optx::parse_instance_spec(instance);
  if (n > 0) ispec.n = n;
  return optx::format_instance_spec(ispec);
}

double final_metric(const TrialRecord& rec) {
  return rec.checkpoints.empty() ? 0.0 : rec.checkpoints.back().value;
}

void print_summary(const char* metric, const std::vector<TrialRecord>& records) {
  if (records.empty()) {
    std::printf("no trials\n");
    return;
  }
  std::vector<double> finals;
  finals.reserve(records.size());
  double wall = 0.0;
  std::uint64_t value_calls = 0;
  for (const TrialRecord& r : records) {
    finals.push_back(final_metric(r));
    wall += r.run_seconds;
    value_calls += r.value_calls;
  }
  std::sort(finals.begin(), finals.end());
  const double mean =
      std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(finals.size());
  const double median = finals[finals.size() / 2];
  std::printf("trials=%zu final %s: mean=%.6g median=%.6g min=%.6g max=%.6g\n", records.size(),
              metric, mean, median, finals.front(), finals.back());
  std::printf("value_calls total=%llu wall=%.2fs\n",
              static_cast<unsigned long long>(value_calls), wall);
}

int cmd_run_experts(const CommonArgs& args) {
  ExperimentSpec spec;
  spec.mode = ExperimentMode::ExpertsRun;
  spec.algorithm = args.alg;
  spec.instance = apply_n_override(args.instance, args.n);
  spec.horizon = args.t;
  spec.trials = args.trials;
  spec.seed = args.seed;
  spec.out = args.out;
  auto records = optx::run_experts(spec);
  print_summary("avg_regret", records);
  if (!args.out.empty()) {
    optx::emit_results(spec, records, args.out);
    std::printf("wrote %s and %s.json\n", args.out.c_str(), args.out.c_str());
  }
  return 0;
}

int cmd_run_game(const CommonArgs& args) {
  ExperimentSpec spec;
  spec.mode = ExperimentMode::GameSolve;
  spec.instance = apply_n_override(args.instance, args.n);
  spec.horizon = args.t;
  spec.eps = args.eps;
  spec.delta = args.delta;
  spec.trials = args.trials;
  spec.seed = args.seed;
  spec.out = args.out;
  auto records = optx::run_game(spec);
  print_summary("duality_gap", records);
  if (!args.out.empty()) {
    optx::emit_results(spec, records, args.out);
    std::printf("wrote %s and %s.json\n", args.out.c_str(), args.out.c_str());
  }
  return 0;
}

int cmd_gen_instance(const CommonArgs& args) {
  optx::InstanceSpec ispec = optx::parse_instance_spec(args.instance);
  if (args.n > 0) ispec.n = args.n;

  if (ispec.family == "random") {
    if (args.out.empty())
      throw std::invalid_argument("spec-error: family=random needs --out for the game file");
    if (ispec.n < 1) throw std::invalid_argument("spec-error: random game needs n >= 1");
    optx::save_game(optx::random_game_dense(static_cast<int>(ispec.n), ispec.seed), args.out);
    std::printf("wrote %s (%lld x %lld game)\n", args.out.c_str(), ispec.n, ispec.n);
    return 0;
  }

  // Construct once so malformed parameters fail here, not at run time.
  if (ispec.family == "hard_experts") {
    optx::gen_hard_experts(static_cast<int>(ispec.n), ispec.seed);
  } else if (ispec.family == "binary_cls") {
    optx::gen_binary_classification(static_cast<int>(ispec.n), ispec.seed);
  } else if (ispec.family == "aldous") {
    optx::gen_staircase_function(ispec.d, ispec.seed);
  } else if (ispec.family == "file") {
    optx::load_game(ispec.file);
  }

  const std::string canon = optx::format_instance_spec(ispec);
  if (args.out.empty()) {
    std::printf("%s\n", canon.c_str());
  } else {
    std::ofstream out(args.out, std::ios::trunc);
    if (!out) throw std::runtime_error("io: cannot open " + args.out + " for writing");
    out << canon << '\n';
    std::printf("wrote %s\n", args.out.c_str());
  }
  return 0;
}

optx::MixedStrategy strategy_from_json(const nlohmann::json& atoms) {
  optx::MixedStrategy s;
  for (const auto& a : atoms)
    s.atoms.push_back({a.at("index").get<optx::ExpertId>(), a.at("mass").get<double>()});
  return s;
}

int cmd_verify_eq(const std::string& results_path, const CommonArgs& args) {
  if (!(args.eps >= 0.0)) throw std::invalid_argument("spec-error: --eps must be >= 0");
  optx::InstanceSpec ispec = optx::parse_instance_spec(args.instance);
  if (args.n > 0) ispec.n = args.n;

  std::ifstream in(results_path);
  if (!in) throw std::runtime_error("io: cannot open " + results_path);
  nlohmann::json doc;
  in >> doc;
  if (!doc.contains("trials"))
    throw std::invalid_argument("spec-error: results file has no trials array");

  int checked = 0, passed = 0;
  for (const auto& t : doc["trials"]) {
    if (!t.contains("game")) continue;
    const int trial = t.at("trial").get<int>();
    const std::uint64_t instance_seed = optx::derive_seed(
        ispec.seed, {optx::stream_label("instance"), static_cast<std::uint64_t>(trial)});
    optx::GameMatrix game = [&] {
      if (ispec.family == "random")
        return optx::GameMatrix::random_uniform(static_cast<int>(ispec.n), instance_seed);
      if (ispec.family == "aldous")
        return optx::gen_aldous_game(optx::gen_staircase_function(ispec.d, instance_seed)).game;
      if (ispec.family == "file") return optx::load_game(ispec.file);
      throw std::invalid_argument("spec-error: verify-eq supports random, aldous, and file");
    }();
    const auto p = strategy_from_json(t.at("game").at("row_strategy"));
    const auto q = strategy_from_json(t.at("game").at("col_strategy"));
    const auto res = optx::verify_equilibrium(game, p, q, args.eps);
    ++checked;
    if (res.approximate_equilibrium) ++passed;
    std::printf("trial=%d value=%.6f gap=%.6g row_exp=%.6g col_exp=%.6g -> %s\n", trial,
                res.report.value, res.report.duality_gap, res.report.row_exploitability,
                res.report.col_exploitability, res.approximate_equilibrium ? "PASS" : "FAIL");
  }
  std::printf("verified %d/%d trials at eps=%g\n", passed, checked, args.eps);
  if (checked == 0) throw std::invalid_argument("spec-error: no game trials in results file");
  return passed == checked ? 0 : 3;
}

struct BenchPoint {
  int num_experts = 0;
  double calls_per_round = 0.0;
  double opt_calls_per_round = 0.0;
  double wall_seconds = 0.0;
};

BenchPoint bench_point(int block, std::int64_t horizon, std::uint64_t seed) {
  BenchPoint out;
  auto inst = std::make_shared<const optx::HardExpertsInstance>(
      optx::gen_hard_experts(block, seed));
  optx::OraclePair oracle = optx::make_hard_oracle(inst);
  out.num_experts = inst->num_experts;
  optx::SelfObliviousExperts learner(inst->num_experts, horizon,
                                     optx::derive_seed(seed, {optx::stream_label("bench")}));
  optx::LeaderFeed feed(oracle);
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t t = 1; t <= horizon; ++t) {
    learner.play();
    const optx::ExpertId action = inst->canonical_action(t);
    const optx::ExpertId leader = feed.push(action);
    learner.observe([&](optx::ExpertId x) { return oracle.value(x, action); }, leader);
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& c = oracle.counters();
  out.calls_per_round = static_cast<double>(c.value_calls) / static_cast<double>(horizon);
  out.opt_calls_per_round = static_cast<double>(c.opt_calls) / static_cast<double>(horizon);
  return out;
}

int cmd_bench(std::int64_t horizon, std::uint64_t seed) {
  if (horizon < 4) throw std::invalid_argument("spec-error: bench needs --t >= 4");
  const BenchPoint small = bench_point(32, horizon, seed);    // 2^10 experts
  const BenchPoint large = bench_point(512, horizon, seed);   // 2^18 experts
  const double ratio = large.calls_per_round / small.calls_per_round;
  for (const BenchPoint& p : {small, large}) {
    const double n = static_cast<double>(p.num_experts);
    const double lg = std::log2(n);
    const double budget_const = p.calls_per_round * static_cast<double>(horizon) /
                                (static_cast<double>(horizon) * lg * lg *
                                 std::log2(static_cast<double>(horizon)));
    std::printf("N=%7d value_calls/round=%8.2f opt_calls/round=%5.2f wall=%6.3fs "
                "budget_const=%.3f\n",
                p.num_experts, p.calls_per_round, p.opt_calls_per_round, p.wall_seconds,
                budget_const);
  }
  std::printf("per-round cost ratio (N=2^18 vs N=2^10): %.3f (limit 20)\n", ratio);
  return ratio <= 20.0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimizable-experts workbench"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string results_path;

  auto add_common = [&](CLI::App* cmd, bool with_alg) {
    if (with_alg)
      cmd->add_option("--alg", args.alg, "learner: mw1 | mw2 | mw3 | leaders | oracle")
          ->required();
    cmd->add_option("--instance", args.instance, "instance spec, e.g. 'family=hard_experts n=8 seed=1'")
        ->required();
    cmd->add_option("--n", args.n, "override the instance's n");
    cmd->add_option("--trials", args.trials, "number of independent trials");
    cmd->add_option("--seed", args.seed, "base seed");
    cmd->add_option("--out", args.out, "write CSV here (plus a .json sidecar)");
  };

  CLI::App* run_experts = app.add_subcommand("run-experts", "play a learner against an instance");
  add_common(run_experts, true);
  run_experts->add_option("--t", args.t, "horizon in rounds")->required();

  CLI::App* run_game = app.add_subcommand("run-game", "solve a zero-sum game by self-play");
  add_common(run_game, false);
  run_game->add_option("--t", args.t, "horizon in rounds (omit to use --eps/--delta)");
  run_game->add_option("--eps", args.eps, "equilibrium accuracy for the horizon formula");
  run_game->add_option("--delta", args.delta, "failure probability for the horizon formula");

  CLI::App* gen = app.add_subcommand("gen-instance", "construct and canonicalize an instance");
  gen->add_option("--instance", args.instance, "instance spec")->required();
  gen->add_option("--n", args.n, "override the instance's n");
  gen->add_option("--out", args.out, "output path (game file for family=random)");

  CLI::App* verify = app.add_subcommand("verify-eq", "re-verify stored equilibria");
  verify->add_option("results", results_path, "results .json sidecar from run-game")->required();
  verify->add_option("--instance", args.instance, "instance spec the run used")->required();
  verify->add_option("--n", args.n, "override the instance's n");
  verify->add_option("--eps", args.eps, "verification tolerance")->required();

  CLI::App* bench = app.add_subcommand("bench", "per-round oracle cost model probe");
  std::int64_t bench_t = 512;
  std::uint64_t bench_seed = 0;
  bench->add_option("--t", bench_t, "rounds per probe");
  bench->add_option("--seed", bench_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_experts->parsed()) return cmd_run_experts(args);
    if (run_game->parsed()) return cmd_run_game(args);
    if (gen->parsed()) return cmd_gen_instance(args);
    if (verify->parsed()) return cmd_verify_eq(results_path, args);
    if (bench->parsed()) return cmd_bench(bench_t, bench_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
