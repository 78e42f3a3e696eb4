// Low interval regret against the per-round leader sequence.
//
// A grid of sliding-window learners: row r gives buffer size 2^r (capped at
// the expert count), column s gives step size eta0 / sqrt(2^(r+s)). Some
// cell has a window large enough to hold every distinct leader and a step
// size matched to any given interval length, so a top-level dense combiner
// over the cells inherits that cell's interval regret. Feedback to the
// combiner is the realized loss of one fresh sample drawn from each cell's
// pre-update state, on a substream keyed by (round, row, column) so the
// draws are independent of the played cell. The cell actually played is
// recorded but deliberately never enters any update.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "optx/core.hpp"
#include "optx/mw.hpp"
#include "optx/rng.hpp"

namespace optx {

inline int ceil_log2(std::int64_t x) {
  if (x < 1) throw std::invalid_argument("param-domain: ceil_log2 needs x >= 1");
  int r = 0;
  while ((std::int64_t{1} << r) < x) ++r;
  return r;
}

class Leaders {
 public:
  // num_experts: size of the expert universe the leader ids live in.
  // max_leaders: bound L on the number of distinct leaders tolerated with
  // full guarantees (the grid covers window sizes up to 2^ceil(log2 L)).
  Leaders(int num_experts, int max_leaders, std::int64_t horizon)
      : n_(num_experts), L_(max_leaders), T_(horizon) {
    if (num_experts < 1) throw std::invalid_argument("param-domain: need at least one expert");
    if (max_leaders < 1) throw std::invalid_argument("param-domain: need max_leaders >= 1");
    if (horizon < 1) throw std::invalid_argument("param-domain: need horizon >= 1");
    rows_ = ceil_log2(L_);
    if (rows_ < 1) rows_ = 1;
    cols_ = ceil_log2(T_);
    if (cols_ < 1) cols_ = 1;
    eta0_ = std::sqrt(std::log(2.0 * static_cast<double>(L_) * static_cast<double>(T_)));
    nu_ = 2.0 * eta0_ * std::sqrt(static_cast<double>(L_) / static_cast<double>(T_));
    const double gamma = 1.0 / static_cast<double>(T_);
    const int m = rows_ * cols_;
    cells_.reserve(m);
    for (int r = 1; r <= rows_; ++r) {
      for (int s = 1; s <= cols_; ++s) {
        int k = n_;
        if (r < 62 && (std::int64_t{1} << r) < n_) k = 1 << r;
        const double eta = eta0_ / std::sqrt(static_cast<double>(std::int64_t{1} << (r + s)));
        cells_.emplace_back(n_, k, eta, gamma);
      }
    }
    combiner_.emplace(m, nu_, gamma);
    args_.resize(m);
    mults_.resize(m);
    closs_.resize(m);
    jslot_.resize(m);
  }

  int size() const { return n_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double eta0() const { return eta0_; }
  double nu() const { return nu_; }
  std::int64_t round() const { return round_; }
  const Mw3& cell(int r, int s) const { return cells_[(r - 1) * cols_ + (s - 1)]; }
  const Mw1& combiner() const { return *combiner_; }
  // Grid cell chosen by the most recent play call (flat index), or -1.
  int last_played_cell() const { return last_played_cell_; }

  ExpertId play(RngStream& rng) const {
    const int c = combiner_->play(rng);
    last_played_cell_ = c;
    return cells_[c].play(rng);
  }

  // One round with the realized leader of the round. Exactly two loss
  // evaluations per cell: the cell's own probe and the fresh sample that
  // feeds the combiner.
  template <typename F>
  void observe(F&& loss_of, ExpertId leader, RngStream& rng) {
    const int m = static_cast<int>(cells_.size());
    for (int c = 0; c < m; ++c) {
      const Mw3& cell = cells_[c];
      const int j = rng.uniform_int(cell.buffer_size());
      const double f = static_cast<double>(loss_of(cell.buffer(j)));
      check_unit_loss(f);
      jslot_[c] = j;
      args_[c] = cell.decay_arg(f);
    }
    for (int r = 1, c = 0; r <= rows_; ++r) {
      for (int s = 1; s <= cols_; ++s, ++c) {
        RngStream sub = rng.child({stream_label("cell-fresh"),
                                   static_cast<std::uint64_t>(round_ + 1),
                                   static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(s)});
        const double f = static_cast<double>(loss_of(cells_[c].play(sub)));
        check_unit_loss(f);
        closs_[c] = f;
      }
    }
    mults_ = (-args_).exp();  // one vectorized exp for the whole grid
    for (int c = 0; c < m; ++c) cells_[c].observe_with(jslot_[c], mults_[c], leader);
    combiner_->observe(closs_);
    ++round_;
  }

  std::uint64_t digest(std::uint64_t h = 0x6c647273ULL) const {
    h = digest_mix(h, static_cast<std::uint64_t>(round_));
    h = combiner_->digest(h);
    for (const Mw3& cell : cells_) h = cell.digest(h);
    return h;
  }

 private:
  int n_, L_;
  std::int64_t T_;
  int rows_, cols_;
  double eta0_, nu_;
  std::vector<Mw3> cells_;  // row-major: (r-1) * cols_ + (s-1)
  std::optional<Mw1> combiner_;
  Eigen::ArrayXd args_, mults_, closs_;
  std::vector<int> jslot_;
  mutable int last_played_cell_ = -1;
  std::int64_t round_ = 0;
};

}  // namespace optx
