// Zero-sum matrix games solved by best-response-oracle self-play.
//
// Both players run the self-oblivious sublinear learner; each round the
// row player is told the best response to the column player's empirical
// strategy so far (and vice versa), which is exactly the leader feed the
// learner needs. Time-averaged strategies converge to approximate minimax
// at the learner's regret rate. The row player minimizes the payoff; the
// column player maximizes it (loss 1 - G).

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>

#include "optx/core.hpp"
#include "optx/rng.hpp"

namespace optx {

// Payoff access and best responses behind closures, so a game can be a
// dense matrix or something structured whose best response is computed by
// search. Payoffs must lie in [0,1]. Instances are not thread-safe: give
// each worker its own. payoff() and the best responses are metered;
// payoff_raw() is the unmetered path for verification and reporting.
class GameMatrix {
 public:
  using PayoffFn = std::function<double(int, int)>;
  using BrFn = std::function<int(const MixedStrategy&)>;

  GameMatrix(int n, PayoffFn payoff, BrFn best_response_row, BrFn best_response_col);

  static GameMatrix from_dense(Eigen::MatrixXd g);
  // from_dense over random_game_dense(n, seed).
  static GameMatrix random_uniform(int n, std::uint64_t seed);

  int size() const { return n_; }

  double payoff(int i, int j) const;
  double payoff_raw(int i, int j) const;

  // argmin_i E_{j~q} G(i,j), lowest index on ties.
  int best_response_row(const MixedStrategy& q) const;
  // argmax_j E_{i~p} G(i,j), lowest index on ties.
  int best_response_col(const MixedStrategy& p) const;

  std::uint64_t payoff_calls() const { return payoff_calls_; }
  std::uint64_t br_row_calls() const { return br_row_calls_; }
  std::uint64_t br_col_calls() const { return br_col_calls_; }
  void reset_counters() const { payoff_calls_ = br_row_calls_ = br_col_calls_ = 0; }

 private:
  int n_;
  PayoffFn payoff_;
  BrFn br_row_, br_col_;
  mutable std::uint64_t payoff_calls_ = 0, br_row_calls_ = 0, br_col_calls_ = 0;
};

struct EquilibriumReport {
  MixedStrategy row_strategy;
  MixedStrategy col_strategy;
  double value = 0.0;                // row_strategy' G col_strategy
  double row_exploitability = 0.0;   // value - min_i (G q)_i
  double col_exploitability = 0.0;   // max_j (p' G)_j - value
  double duality_gap = 0.0;          // sum of the two
  std::int64_t rounds = 0;
  std::uint64_t payoff_calls = 0;    // metered payoff evaluations during the run
  std::uint64_t br_calls = 0;        // metered best-response calls during the run
};

// Exhaustive exploitability scan of a strategy profile (unmetered).
EquilibriumReport evaluate_profile(const GameMatrix& game, const MixedStrategy& p,
                                   const MixedStrategy& q);

struct VerifyResult {
  bool approximate_equilibrium = false;
  double epsilon = 0.0;
  EquilibriumReport report;
};

// Checks max_j p'Ge_j - eps <= p'Gq <= min_i e_i'Gq + eps by exhaustive scan.
VerifyResult verify_equilibrium(const GameMatrix& game, const MixedStrategy& p,
                                const MixedStrategy& q, double eps);

// Rounds sufficient for an (eps, delta) equilibrium guarantee on an n-action
// game: ceil(240^2 sqrt(n) / eps^2 * ln^2(240 n / (eps delta))). The leading
// constant is a worst-case artifact; practical gaps are far below eps long
// before this horizon (and tests pin that explicitly).
std::int64_t horizon_for(std::int64_t n, double eps, double delta);

using GameCheckpointFn = std::function<void(std::int64_t, const EquilibriumReport&)>;

// Self-play for `horizon` rounds; checkpoints fire at powers of two and at
// the final round. Throws "horizon" if horizon < 1.
EquilibriumReport solve_game(const GameMatrix& game, std::int64_t horizon, RngStream& rng,
                             const GameCheckpointFn& checkpoint = {});

// Row plays the learner; the column player best-responds to the row's
// empirical strategy from the previous round (uniform at round one).
EquilibriumReport fictitious_play(const GameMatrix& game, std::int64_t horizon, RngStream& rng,
                                  const GameCheckpointFn& checkpoint = {});

// Dense n x n payoff matrix with i.i.d. uniform [0,1) entries.
Eigen::MatrixXd random_game_dense(int n, std::uint64_t seed);

// Binary game file: magic "ZSG1", u32 little-endian size, then row-major
// float64 payoffs. Malformed files raise "spec-error"; out-of-range entries
// raise "payoff-range"; filesystem failures raise "io".
void save_game(const Eigen::MatrixXd& g, const std::string& path);
Eigen::MatrixXd load_game_dense(const std::string& path);
GameMatrix load_game(const std::string& path);

}  // namespace optx
