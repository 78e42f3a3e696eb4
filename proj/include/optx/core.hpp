// Shared vocabulary for the oracle-based online learning setting: expert
// indices, sparse distributions, the value/optimization oracle pair with
// call metering, leader tracking, and regret accounting.
//
// Conventions used across the library:
//  - experts, adversary actions and pure strategies are all 0-based ints;
//  - ties in any argmin/argmax break to the lowest index, so runs are
//    reproducible;
//  - oracle *calls* are metered separately from wall-clock: experiments
//    report model cost (call counts) and real cost (seconds) side by side.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace optx {

using ExpertId = std::int32_t;

// Sparse probability distribution over integer handles (experts, adversary
// actions, or pure strategies): sorted unique indices with positive masses
// summing to 1 within 1e-9. Normalization is the caller's duty; validate()
// throws instead of repairing.
struct MixedStrategy {
  struct Atom {
    ExpertId index;
    double mass;
  };
  std::vector<Atom> atoms;

  static MixedStrategy point(ExpertId i) { return MixedStrategy{{{i, 1.0}}}; }
  static MixedStrategy uniform(int n);
  // Distribution {count[i]/total}; zero counts are skipped.
  static MixedStrategy from_counts(const std::vector<std::int64_t>& counts, std::int64_t total);

  int size() const { return static_cast<int>(atoms.size()); }
  bool contains(ExpertId i) const;

  // Checks sortedness, uniqueness, positivity, range (if n >= 0) and the
  // 1e-9 mass-sum tolerance. Throws std::invalid_argument on violation.
  void validate(int n = -1) const;
};

struct OracleCounters {
  std::uint64_t value_calls = 0;
  std::uint64_t opt_calls = 0;
  std::uint64_t distinct_experts = 0;  // distinct expert indices seen across all calls
};

// Value/optimization oracle pair over a fixed expert set. value(x, y) is the
// loss of expert x on round-action handle y; opt(q) returns an expert
// minimizing the q-expected loss over handles. Both are metered.
class OraclePair {
 public:
  using ValueFn = std::function<double(ExpertId, ExpertId)>;
  using OptFn = std::function<ExpertId(const MixedStrategy&)>;

  OraclePair(int num_experts, ValueFn value, OptFn opt);

  int num_experts() const { return n_; }

  double value(ExpertId x, ExpertId action) const;
  ExpertId opt(const MixedStrategy& q) const;

  const OracleCounters& counters() const { return counters_; }

 private:
  void touch(ExpertId x) const;

  int n_;
  ValueFn value_;
  OptFn opt_;
  mutable OracleCounters counters_;
  mutable std::vector<bool> touched_;
};

// Builds an OraclePair over a dense loss table (row = expert, col = action).
// opt is a linear scan with lowest-index tie-break; the reference oracle for
// tests and synthetic adversaries.
OraclePair table_oracle(const std::vector<std::vector<double>>& losses);

// Leader after the given nonempty action history: one opt call on the
// empirical action distribution. Throws "no-rounds" on empty history.
ExpertId compute_leader(const std::vector<ExpertId>& history, const OraclePair& oracle);

// Incremental leader tracking: append actions one round at a time; each
// push issues one opt call on the running empirical distribution, matching
// the amortized-O(1)-per-round oracle cost model.
class LeaderFeed {
 public:
  explicit LeaderFeed(const OraclePair& oracle) : oracle_(&oracle) {}

  ExpertId push(ExpertId action);
  ExpertId current_leader() const;
  std::int64_t rounds() const { return rounds_; }

 private:
  const OraclePair* oracle_;
  std::vector<std::int64_t> counts_;  // indexed by action handle
  std::int64_t rounds_ = 0;
  ExpertId leader_ = -1;
  mutable MixedStrategy scratch_;
};

// Per-round regret accounting with compensated (Kahan) summation so
// million-round ledgers stay accurate to 1e-9. Comparator sums are kept
// per expert; dense mode only (callers with huge N track comparators via
// their oracles instead).
class RegretLedger {
 public:
  explicit RegretLedger(int num_experts);

  // Advances one round: adds loss(played) to the player sum and loss(x) to
  // every comparator sum. Losses must lie in [0,1] ("loss-range" otherwise).
  template <typename LossFn>
  void update(ExpertId played, LossFn&& loss_of) {
    double lp = loss_of(played);
    check_loss(lp);
    add(player_, player_c_, lp);
    for (int x = 0; x < n_; ++x) {
      double lx = loss_of(static_cast<ExpertId>(x));
      check_loss(lx);
      add(cum_[x], cum_c_[x], lx);
    }
    ++round_;
  }

  std::int64_t round() const { return round_; }
  double player_cum_loss() const { return player_; }
  double comparator_cum_loss(ExpertId x) const { return cum_.at(static_cast<size_t>(x)); }
  double best_cum_loss() const;  // min over experts, lowest index on ties
  // player/t - best/t; in [-1, 1].
  double average_regret() const;
  double total_regret() const;

 private:
  static void check_loss(double v);
  static void add(double& sum, double& comp, double v) {
    // Kahan step: comp accumulates the low-order error of sum += v.
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  int n_;
  std::int64_t round_ = 0;
  double player_ = 0, player_c_ = 0;
  std::vector<double> cum_, cum_c_;
};

}  // namespace optx
