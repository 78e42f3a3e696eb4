// Experiment orchestration: construct instance + learner per trial from
// seed-derived substreams, play the rounds, checkpoint at powers of two,
// and write machine-readable results (CSV of checkpoints plus a JSON
// sidecar with the spec, versions, call counts, and timings).

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optx/core.hpp"
#include "optx/games.hpp"
#include "optx/instances.hpp"

namespace optx {

inline constexpr const char* kOptxVersion = "0.1.0";

enum class ExperimentMode { ExpertsRun, GameSolve };

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::ExpertsRun;
  std::string algorithm;     // experts mode: mw1 | mw2 | mw3 | leaders | oracle
  std::string instance;      // instance spec text (see parse_instance_spec)
  std::int64_t horizon = 0;  // T; 0 in game mode defers to the (eps, delta) formula
  double eps = 0.0;
  double delta = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  std::string out;           // optional output path for emit_results
};

struct CheckpointRecord {
  std::int64_t round = 0;
  std::string metric;  // "avg_regret" or "duality_gap"
  double value = 0.0;
};

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<CheckpointRecord> checkpoints;  // strictly increasing rounds
  std::uint64_t value_calls = 0;
  std::uint64_t opt_calls = 0;
  std::uint64_t br_calls = 0;
  double setup_seconds = 0.0;
  double run_seconds = 0.0;
  std::optional<EquilibriumReport> game_report;  // game mode only
};

// Per-trial seeds are pure functions of (base seed, trial id), so trials are
// order-independent and any subset can be reproduced in isolation.
std::uint64_t trial_seed(std::uint64_t base, int trial);

std::vector<TrialRecord> run_experts(const ExperimentSpec& spec);
std::vector<TrialRecord> run_game(const ExperimentSpec& spec);

// CSV with header trial,seed,round,metric,value (%.17g values, parse-back
// exact) plus <path>.json holding the spec, versions, counters, timings and,
// in game mode, the final strategy profiles. The CSV is byte-stable for a
// fixed spec; the sidecar's timing fields are wall-clock measurements.
void emit_results(const ExperimentSpec& spec, const std::vector<TrialRecord>& records,
                  const std::string& path);

}  // namespace optx
