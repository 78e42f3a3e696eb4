// Weighted sampling in O(log N) and the implicit alpha/beta weight
// representation behind the amortized multiplicative-weights update.
//
// SumTree is a flat binary tree with cached subtree totals: point update and
// weighted sampling both touch O(log N) nodes (instrumented, tests assert the
// bound). MixedWeights stores per-expert weights implicitly as
//     w(x) = alpha(x) + beta,
// where beta absorbs the uniform mixing mass added to every expert each
// round, so one decay step costs O(log N) instead of O(N). Decay can drive
// alpha(x) negative while the implied weight stays nonnegative; sampling
// therefore descends the tree on the *implied* subtree weights
// (alpha subtree sum + beta * leaf count), which is exact for signed alpha.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "optx/rng.hpp"

namespace optx {

class SumTree {
 public:
  explicit SumTree(int capacity) : n_(capacity) {
    if (capacity < 1) throw std::invalid_argument("param-domain: sum tree needs capacity >= 1");
    size_ = 1;
    while (size_ < n_) size_ <<= 1;
    node_.assign(static_cast<size_t>(2 * size_), 0.0);
  }

  int capacity() const { return n_; }
  double total() const { return node_[1]; }
  double leaf(int i) const {
    check_index(i);
    return node_[static_cast<size_t>(size_ + i)];
  }

  // Spec update path: nonnegative finite weights only.
  void set(int i, double w) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("weight-domain: leaf weights must be nonnegative and finite");
    set_raw(i, w);
  }

  // Signed bookkeeping path used by MixedWeights (alpha components may go
  // negative); not valid for direct sampling via sample().
  void set_raw(int i, double v) {
    check_index(i);
    int u = size_ + i;
    node_[static_cast<size_t>(u)] = v;
    ++touched_;
    for (u >>= 1; u >= 1; u >>= 1) {
      node_[static_cast<size_t>(u)] =
          node_[static_cast<size_t>(2 * u)] + node_[static_cast<size_t>(2 * u + 1)];
      ++touched_;
    }
  }

  // Samples leaf i with probability leaf(i)/total(). Requires nonnegative
  // leaves (use sample_biased for the implied-weight variant).
  int sample(RngStream& rng) const {
    return sample_biased(rng, [](double s, int) { return s; });
  }

  // Descends on node weight wfn(subtree_sum, real_leaf_count). Throws
  // "empty-support" when the root weight is not positive. Negative node
  // weights (floating-point dust on signed trees) clamp to zero.
  template <typename NodeWeight>
  int sample_biased(RngStream& rng, NodeWeight&& wfn) const {
    double tw = wfn(node_[1], n_);
    if (!(tw > 0.0)) throw std::runtime_error("empty-support: cannot sample from zero total weight");
    double x = rng.uniform() * tw;
    int u = 1, lo = 0, span = size_;
    while (u < size_) {
      ++touched_;
      const int half = span >> 1;
      const int l = 2 * u;
      int lcount = n_ - lo;  // real leaves under the left child
      if (lcount > half) lcount = half;
      if (lcount < 0) lcount = 0;
      double wl = wfn(node_[static_cast<size_t>(l)], lcount);
      if (wl < 0.0) wl = 0.0;
      if (x < wl) {
        u = l;
      } else {
        x -= wl;
        u = l + 1;
        lo += half;
      }
      span = half;
    }
    ++touched_;
    int idx = u - size_;
    return idx < n_ ? idx : n_ - 1;  // fp-dust guard at the padded boundary
  }

  std::uint64_t nodes_touched() const { return touched_; }
  void reset_nodes_touched() const { touched_ = 0; }

 private:
  void check_index(int i) const {
    if (i < 0 || i >= n_) throw std::invalid_argument("param-domain: leaf index out of range");
  }

  int n_;
  int size_;  // padded leaf count, power of two
  std::vector<double> node_;  // 1-indexed heap; leaves at [size_, 2*size_)
  mutable std::uint64_t touched_ = 0;
};

class MixedWeights {
 public:
  explicit MixedWeights(int n, double init_weight = 1.0) : n_(n), alpha_(n) {
    if (!(init_weight >= 0.0) || !std::isfinite(init_weight))
      throw std::invalid_argument("weight-domain: initial weight must be nonnegative and finite");
    for (int i = 0; i < n_; ++i) alpha_.set_raw(i, init_weight);
  }

  int size() const { return n_; }
  double alpha(int i) const { return alpha_.leaf(i); }
  double alpha_total() const { return alpha_.total(); }
  double beta() const { return beta_; }
  double implied(int i) const { return alpha_.leaf(i) + beta_; }
  double total_implied() const { return alpha_.total() + static_cast<double>(n_) * beta_; }
  // Accumulated renormalization factor, log domain: true weights are
  // exp(log_scale()) times the stored ones. Sampling never depends on it.
  double log_scale() const { return log_scale_; }

  // Returns x with probability (alpha(x) + beta) / total_implied().
  int sample(RngStream& rng) const {
    const double b = beta_;
    return alpha_.sample_biased(rng, [b](double s, int count) { return s + b * count; });
  }

  // One amortized decay round:
  //   alpha(index) <- (alpha(index) + beta) * multiplier - beta
  //   beta         <- beta + gamma_term
  // where gamma_term is the caller-computed (gamma/N) * W_t on the
  // pre-update total. The updated expert's implied weight must stay
  // nonnegative ("weight-underflow" otherwise, a sign the step size is too
  // aggressive); all other implied weights grow by gamma_term.
  void decay_update(int index, double multiplier, double gamma_term) {
    if (!(multiplier >= 0.0 && multiplier <= 1.0))
      throw std::invalid_argument("param-domain: decay multiplier must lie in [0,1]");
    if (!(gamma_term >= 0.0) || !std::isfinite(gamma_term))
      throw std::invalid_argument("param-domain: mixing term must be nonnegative and finite");
    const double w = alpha_.leaf(index) + beta_;
    const double anew = w * multiplier - beta_;
    alpha_.set_raw(index, anew);
    beta_ += gamma_term;
    if (anew + beta_ < 0.0)
      throw std::runtime_error("weight-underflow: implied weight went negative");
    maybe_renormalize();
  }

  std::uint64_t nodes_touched() const { return alpha_.nodes_touched(); }
  void reset_nodes_touched() const { alpha_.reset_nodes_touched(); }

 private:
  // Keeps stored magnitudes in a safe floating-point range. A common factor
  // on (alpha, beta) changes neither the sampling distribution nor any
  // decay step, so only log_scale_ remembers it.
  void maybe_renormalize() {
    const double w = total_implied();
    if (w > 1e12 || (w < 1e-12 && w > 0.0)) {
      const double inv = 1.0 / w;
      for (int i = 0; i < n_; ++i) alpha_.set_raw(i, alpha_.leaf(i) * inv);
      beta_ *= inv;
      log_scale_ += std::log(w);
    }
    // beta only ever grows between folds while the implied total can shrink
    // geometrically (aggressive step sizes with persistently high losses pin
    // every weight near the gamma floor). Once n*beta dwarfs the total,
    // alpha_total + n*beta is catastrophic cancellation, so fold beta back
    // into the leaves before that. The fold is the identity on implied
    // weights; it only moves mass between the two summands.
    if (static_cast<double>(n_) * beta_ > 16.0 * total_implied()) {
      for (int i = 0; i < n_; ++i) alpha_.set_raw(i, alpha_.leaf(i) + beta_);
      beta_ = 0.0;
    }
  }

  int n_;
  SumTree alpha_;
  double beta_ = 0.0;
  double log_scale_ = 0.0;
};

}  // namespace optx
