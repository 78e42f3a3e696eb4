// Multiplicative-weights learners with uniform mixing.
//
// All three variants share the same update skeleton: decay a weight by
// exp(-eta * loss estimate), then add gamma/N of the pre-update total to
// every weight. The mixing term keeps every expert's probability above
// gamma/N of uniform, which is what makes the interval (rather than just
// end-to-end) regret bounds work and protects weights from permanent
// starvation.
//
//   Mw1: dense weights, full loss vector each round, O(N) update.
//   Mw2: implicit alpha/beta weights, probes one uniformly random expert per
//        round and feeds an unbiased N*loss estimate, O(log N) update.
//   Mw3: Mw2 over a sliding buffer of k expert slots; an incoming expert
//        evicts the stalest slot and inherits that slot's weight.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "optx/core.hpp"
#include "optx/rng.hpp"
#include "optx/sampling.hpp"

namespace optx {

// exp(-x) for x >= 0. The cubic-error truncation below 1e-3 keeps relative
// error under 1.7e-10 (x^3/6), well inside every tolerance we test at, and
// skips the libm call that otherwise dominates the small-step hot path. At
// x > 700 exp underflows anyway; return exact 0 (mixing keeps weights alive).
inline double decay_multiplier(double x) {
  if (x <= 1e-3) return 1.0 - x * (1.0 - 0.5 * x);
  if (x > 700.0) return 0.0;
  return std::exp(-x);
}

inline void check_learning_params(int n, double eta, double gamma) {
  if (n < 1) throw std::invalid_argument("param-domain: need at least one expert");
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("param-domain: step size eta must be positive and finite");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("param-domain: mixing rate gamma must lie in [0,1]");
}

inline void check_unit_loss(double f) {
  if (!(f >= 0.0 && f <= 1.0))
    throw std::invalid_argument("loss-range: losses must lie in [0,1]");
}

// Dense multiplicative weights. Accepts any nonnegative finite loss vector
// (the meta-combiners feed it realized [0,1] losses, but the update is well
// defined beyond that).
class Mw1 {
 public:
  Mw1(int n, double eta, double gamma) : n_(n), eta_(eta), gamma_(gamma) {
    check_learning_params(n, eta, gamma);
    w_ = Eigen::ArrayXd::Ones(n);
    total_ = static_cast<double>(n);
  }

  int size() const { return n_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  std::int64_t round() const { return round_; }
  double weight(int i) const { return w_[i]; }
  double total() const { return total_; }
  double prob(int i) const { return w_[i] / total_; }

  ExpertId play(RngStream& rng) const {
    if (!(total_ > 0.0)) throw std::runtime_error("empty-support: zero total weight");
    double x = rng.uniform() * total_;
    for (int i = 0; i < n_ - 1; ++i) {
      if (x < w_[i]) return i;
      x -= w_[i];
    }
    return n_ - 1;
  }

  void observe(const Eigen::Ref<const Eigen::ArrayXd>& losses) {
    if (losses.size() != n_)
      throw std::invalid_argument("param-domain: loss vector size mismatch");
    if (!(losses >= 0.0).all() || !losses.isFinite().all())
      throw std::invalid_argument("loss-range: losses must be nonnegative and finite");
    const double mix = gamma_ / static_cast<double>(n_) * total_;
    w_ = w_ * (-eta_ * losses).exp() + mix;
    total_ = w_.sum();
    ++round_;
    if (total_ > 1e12 || (total_ < 1e-12 && total_ > 0.0)) {
      log_scale_ += std::log(total_);
      w_ /= total_;
      total_ = w_.sum();
    }
  }

  double log_scale() const { return log_scale_; }

  std::uint64_t digest(std::uint64_t h = 0x6d775f31ULL) const {
    h = digest_mix(h, static_cast<std::uint64_t>(round_));
    h = digest_mix(h, log_scale_);
    for (int i = 0; i < n_; ++i) h = digest_mix(h, w_[i]);
    return h;
  }

 private:
  int n_;
  double eta_, gamma_;
  Eigen::ArrayXd w_;
  double total_;
  double log_scale_ = 0.0;
  std::int64_t round_ = 0;
};

// Amortized multiplicative weights: one uniform probe per round, importance
// weighted by the expert count, applied through the implicit alpha/beta
// representation. Exactly one loss evaluation per observe call.
class Mw2 {
 public:
  Mw2(int n, double eta, double gamma) : n_(n), eta_(eta), gamma_(gamma), mw_(n) {
    check_learning_params(n, eta, gamma);
  }

  int size() const { return n_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  std::int64_t round() const { return round_; }
  double implied_weight(int i) const { return mw_.implied(i); }
  double total_weight() const { return mw_.total_implied(); }
  double prob(int i) const { return mw_.implied(i) / mw_.total_implied(); }
  const MixedWeights& weights() const { return mw_; }

  ExpertId play(RngStream& rng) const { return mw_.sample(rng); }

  template <typename F>
  void observe(F&& loss_of, RngStream& rng) {
    const int y = rng.uniform_int(n_);
    const double f = static_cast<double>(loss_of(static_cast<ExpertId>(y)));
    observe_at(y, f);
  }

  // Deterministic core of observe: probe expert y with loss f. Exposed so
  // tests can replay scripted probe sequences against a dense reference.
  void observe_at(ExpertId y, double f) {
    check_unit_loss(f);
    const double w = mw_.total_implied();
    const double mix = gamma_ / static_cast<double>(n_) * w;
    mw_.decay_update(y, decay_multiplier(eta_ * static_cast<double>(n_) * f), mix);
    ++round_;
  }

  std::uint64_t digest(std::uint64_t h = 0x6d775f32ULL) const {
    h = digest_mix(h, static_cast<std::uint64_t>(round_));
    h = digest_mix(h, mw_.beta());
    h = digest_mix(h, mw_.log_scale());
    for (int i = 0; i < n_; ++i) h = digest_mix(h, mw_.alpha(i));
    return h;
  }

 private:
  int n_;
  double eta_, gamma_;
  MixedWeights mw_;
  std::int64_t round_ = 0;
};

// Sliding-window multiplicative weights over k expert slots. Weight lives in
// the slot position: when the activated expert is absent, it takes over the
// slot with the oldest activation stamp and inherits that slot's weight.
// The loss probe hits one uniformly random slot and is importance weighted
// by estimator_scale (defaults to k, the number of live slots).
class Mw3 {
 public:
  Mw3(int num_experts, int k, double eta, double gamma, int estimator_scale = 0)
      : n_experts_(num_experts), k_(k), eta_(eta), gamma_(gamma),
        scale_(estimator_scale > 0 ? estimator_scale : k), mw_(k) {
    check_learning_params(k, eta, gamma);
    if (num_experts < 1) throw std::invalid_argument("param-domain: need at least one expert");
    if (k > num_experts)
      throw std::invalid_argument("param-domain: buffer larger than expert universe");
    buffer_.resize(k);
    stamp_.resize(k);
    for (int i = 0; i < k_; ++i) {
      buffer_[i] = i;
      // Strictly increasing negative stamps: slot 0 is stalest, so untouched
      // slots evict in slot order, and any activated slot outranks them all.
      stamp_[i] = static_cast<std::int64_t>(i) - k_;
    }
  }

  int size() const { return n_experts_; }
  int buffer_size() const { return k_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }
  int estimator_scale() const { return scale_; }
  std::int64_t round() const { return round_; }
  ExpertId buffer(int slot) const { return buffer_[slot]; }
  std::int64_t stamp(int slot) const { return stamp_[slot]; }
  double slot_weight(int slot) const { return mw_.implied(slot); }
  double total_weight() const { return mw_.total_implied(); }

  // Slot currently holding the expert, or -1.
  int find(ExpertId x) const {
    for (int i = 0; i < k_; ++i)
      if (buffer_[i] == x) return i;
    return -1;
  }

  ExpertId play(RngStream& rng) const { return buffer_[mw_.sample(rng)]; }

  // One round: probe a uniform slot, decay it by exp(-eta * scale * loss),
  // mix, then refresh/install the activated expert.
  template <typename F>
  void observe(F&& loss_of, ExpertId activated, RngStream& rng) {
    const int j = rng.uniform_int(k_);
    const double f = static_cast<double>(loss_of(buffer_[j]));
    check_unit_loss(f);
    observe_with(j, decay_multiplier(decay_arg(f)), activated);
  }

  // Batched entry point: the caller drew slot j and computed the decay
  // multiplier for its loss (so a bank of Mw3 cells can share one
  // vectorized exp). Applies the weight update, then the buffer update.
  void observe_with(int j, double multiplier, ExpertId activated) {
    if (j < 0 || j >= k_) throw std::invalid_argument("param-domain: slot index out of range");
    if (activated < 0 || activated >= n_experts_)
      throw std::invalid_argument("param-domain: activated expert out of range");
    const double w = mw_.total_implied();
    const double mix = gamma_ / static_cast<double>(k_) * w;
    mw_.decay_update(j, multiplier, mix);

    ++round_;
    const int present = find(activated);
    if (present >= 0) {
      stamp_[present] = round_;
    } else {
      int evict = 0;
      for (int i = 1; i < k_; ++i)
        if (stamp_[i] < stamp_[evict]) evict = i;
      buffer_[evict] = activated;  // inherits the evicted slot's weight
      stamp_[evict] = round_;
    }
  }

  double decay_arg(double loss) const {
    return eta_ * static_cast<double>(scale_) * loss;
  }

  std::uint64_t digest(std::uint64_t h = 0x6d775f33ULL) const {
    h = digest_mix(h, static_cast<std::uint64_t>(round_));
    h = digest_mix(h, mw_.beta());
    h = digest_mix(h, mw_.log_scale());
    for (int i = 0; i < k_; ++i) {
      h = digest_mix(h, mw_.alpha(i));
      h = digest_mix(h, static_cast<std::uint64_t>(buffer_[i]));
      h = digest_mix(h, static_cast<std::uint64_t>(stamp_[i]));
    }
    return h;
  }

 private:
  int n_experts_, k_;
  double eta_, gamma_;
  int scale_;
  MixedWeights mw_;
  std::vector<ExpertId> buffer_;
  std::vector<std::int64_t> stamp_;
  std::int64_t round_ = 0;
};

}  // namespace optx
