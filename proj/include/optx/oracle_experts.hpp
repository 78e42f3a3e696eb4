// The main online learner: sublinear regret with O(sqrt(N) polylog) work and
// oracle calls per round.
//
// Two sub-learners run side by side. A1 is an amortized learner over a
// random candidate multiset R of ~2 sqrt(N) ln T expert ids: when more than
// ~sqrt(N) distinct experts ever lead, frequent leaders land in R with high
// probability and A1 competes with the best of them. A2 is the grid learner
// over windows of recent leaders, which covers the complementary case of at
// most ~sqrt(N) distinct leaders. A top two-way combiner tracks whichever
// branch is better; its feedback is one fresh sample per branch drawn from
// pre-update state on substreams keyed by round, never the action actually
// played.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "optx/core.hpp"
#include "optx/leaders.hpp"
#include "optx/mw.hpp"
#include "optx/rng.hpp"

namespace optx {

inline int floor_sqrt(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("param-domain: floor_sqrt needs n >= 0");
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return static_cast<int>(r);
}

class OracleExperts {
 public:
  // Consumes draws from rng to sample the candidate multiset.
  OracleExperts(int num_experts, std::int64_t horizon, RngStream& rng)
      : n_(num_experts), T_(horizon) {
    if (num_experts < 1) throw std::invalid_argument("param-domain: need at least one expert");
    if (horizon < 1) throw std::invalid_argument("param-domain: need horizon >= 1");
    const double n = static_cast<double>(n_);
    const double t = static_cast<double>(T_);
    eta_ = 2.0 / (std::pow(n, 0.25) * std::sqrt(t));
    nu_ = 2.0 * std::sqrt(std::log(2.0 * t) / t);
    const double gamma = 1.0 / t;

    auto rsize = static_cast<std::int64_t>(std::floor(2.0 * std::sqrt(n) * std::log(t)));
    if (rsize < 1) rsize = 1;
    R_.resize(static_cast<size_t>(rsize));
    for (auto& x : R_) x = rng.uniform_int(n_);  // i.i.d. uniform, repeats allowed

    a1_.emplace(static_cast<int>(R_.size()), eta_, gamma);
    a2_.emplace(n_, std::max(1, floor_sqrt(n_)), T_);
    combiner_.emplace(2, nu_, gamma);
  }

  int size() const { return n_; }
  std::int64_t horizon() const { return T_; }
  std::int64_t round() const { return round_; }
  double eta() const { return eta_; }
  double nu() const { return nu_; }
  const std::vector<ExpertId>& candidate_set() const { return R_; }
  const Mw2& candidate_learner() const { return *a1_; }
  const Leaders& window_learner() const { return *a2_; }
  const Mw1& combiner() const { return *combiner_; }
  // Branch chosen by the most recent play call (0 = candidates, 1 = windows).
  int last_component() const { return last_component_; }

  ExpertId play(RngStream& rng) const {
    check_horizon();
    const int c = combiner_->play(rng);
    last_component_ = c;
    if (c == 0) return R_[static_cast<size_t>(a1_->play(rng))];
    return a2_->play(rng);
  }

  // One round with the realized leader (best expert in hindsight over rounds
  // 1..t, ties broken toward lower ids). Loss evaluations per round: one for
  // A1's probe, two per grid cell for A2, plus two fresh samples for the
  // combiner.
  template <typename F>
  void observe(F&& loss_of, ExpertId leader, RngStream& rng) {
    check_horizon();
    a1_->observe([&](ExpertId slot) { return loss_of(R_[static_cast<size_t>(slot)]); }, rng);
    a2_->observe(loss_of, leader, rng);

    RngStream s1 = rng.child({stream_label("meta-fresh"),
                              static_cast<std::uint64_t>(round_ + 1), 0});
    RngStream s2 = rng.child({stream_label("meta-fresh"),
                              static_cast<std::uint64_t>(round_ + 1), 1});
    Eigen::Array2d meta;
    meta[0] = static_cast<double>(loss_of(R_[static_cast<size_t>(a1_->play(s1))]));
    meta[1] = static_cast<double>(loss_of(a2_->play(s2)));
    check_unit_loss(meta[0]);
    check_unit_loss(meta[1]);
    combiner_->observe(meta);
    ++round_;
  }

  std::uint64_t digest(std::uint64_t h = 0x6f726578ULL) const {
    h = digest_mix(h, static_cast<std::uint64_t>(round_));
    for (ExpertId x : R_) h = digest_mix(h, static_cast<std::uint64_t>(x));
    h = a1_->digest(h);
    h = a2_->digest(h);
    h = combiner_->digest(h);
    return h;
  }

 private:
  void check_horizon() const {
    if (round_ >= T_)
      throw std::runtime_error("horizon-exceeded: learner configured for fewer rounds");
  }

  int n_;
  std::int64_t T_;
  double eta_, nu_;
  std::vector<ExpertId> R_;
  std::optional<Mw2> a1_;
  std::optional<Leaders> a2_;
  std::optional<Mw1> combiner_;
  mutable int last_component_ = -1;
  std::int64_t round_ = 0;
};

// Self-oblivious harness around OracleExperts: the played action is drawn
// from a dedicated play stream and never flows back into any update, so
// against an adaptive opponent the learner's internal state is independent
// of its own realized actions. Tests verify this by running two replicas
// with the same seed-derived update stream but different play streams and
// comparing update_state_digest() round by round.
class SelfObliviousExperts {
 public:
  SelfObliviousExperts(int num_experts, std::int64_t horizon, std::uint64_t seed)
      : play_rng_(derive_seed(seed, {stream_label("play")})),
        update_rng_(derive_seed(seed, {stream_label("update")})),
        inner_(make_inner(num_experts, horizon, seed)) {}

  // Pins the play stream independently of the shared seed (replica audits).
  SelfObliviousExperts(int num_experts, std::int64_t horizon, std::uint64_t seed,
                       std::uint64_t play_seed)
      : play_rng_(play_seed),
        update_rng_(derive_seed(seed, {stream_label("update")})),
        inner_(make_inner(num_experts, horizon, seed)) {}

  ExpertId play() { return inner_.play(play_rng_); }

  template <typename F>
  void observe(F&& loss_of, ExpertId leader) {
    inner_.observe(loss_of, leader, update_rng_);
  }

  const OracleExperts& inner() const { return inner_; }
  std::int64_t round() const { return inner_.round(); }
  std::uint64_t update_state_digest() const { return inner_.digest(); }

 private:
  static OracleExperts make_inner(int n, std::int64_t t, std::uint64_t seed) {
    RngStream init(derive_seed(seed, {stream_label("init")}));
    return OracleExperts(n, t, init);
  }

  RngStream play_rng_;
  RngStream update_rng_;
  OracleExperts inner_;
};

}  // namespace optx
