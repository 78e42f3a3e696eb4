// Slow dense reference for the full two-branch oracle learner, mirroring the
// library's generator draw order exactly (same uniform_int calls, same child
// substream keys) while computing every weight with plain dense recurrences.
// Used for step-by-step transcript equality tests on small N, T.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "optx/rng.hpp"
#include "reference.hpp"

namespace ref {

inline int ref_ceil_log2(std::int64_t x) {
  int r = 0;
  while ((std::int64_t{1} << r) < x) ++r;
  return r;
}

inline int ref_floor_sqrt(std::int64_t n) {
  int r = 0;
  while (static_cast<std::int64_t>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Selects an index from dense weights with a single uniform draw by prefix
// scan, the dense analogue of one tree-descent sample.
inline int prefix_pick(const std::vector<double>& w, double u) {
  double total = 0.0;
  for (double v : w) total += v;
  double x = u * total;
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    if (x < w[i]) return static_cast<int>(i);
    x -= w[i];
  }
  return static_cast<int>(w.size()) - 1;
}

struct RefAlgo2 {
  int n;
  std::int64_t T;
  double eta, nu;
  std::vector<int> R;
  DenseMw2 a1;

  int L, rows, cols;
  double eta0, nuL;
  std::vector<DenseMw3> cells;  // row-major, (r-1)*cols + (s-1)
  DenseMw1 lcomb;

  DenseMw1 meta;
  std::int64_t round = 0;

  static std::vector<int> sample_r(int n, std::int64_t t, optx::RngStream& rng) {
    auto rsize = static_cast<std::int64_t>(
        std::floor(2.0 * std::sqrt(static_cast<double>(n)) * std::log(static_cast<double>(t))));
    if (rsize < 1) rsize = 1;
    std::vector<int> r(static_cast<size_t>(rsize));
    for (auto& x : r) x = rng.uniform_int(n);
    return r;
  }

  RefAlgo2(int n_, std::int64_t t_, optx::RngStream& rng)
      : n(n_), T(t_),
        eta(2.0 / (std::pow(static_cast<double>(n_), 0.25) * std::sqrt(static_cast<double>(t_)))),
        nu(2.0 * std::sqrt(std::log(2.0 * static_cast<double>(t_)) / static_cast<double>(t_))),
        R(sample_r(n_, t_, rng)),
        a1(static_cast<int>(R.size()), eta, 1.0 / static_cast<double>(t_)),
        L(std::max(1, ref_floor_sqrt(n_))),
        rows(std::max(1, ref_ceil_log2(L))),
        cols(std::max(1, ref_ceil_log2(t_))),
        eta0(std::sqrt(std::log(2.0 * static_cast<double>(std::max(1, ref_floor_sqrt(n_))) *
                                static_cast<double>(t_)))),
        nuL(2.0 * eta0 * std::sqrt(static_cast<double>(L) / static_cast<double>(T))),
        lcomb(rows * cols, nuL, 1.0 / static_cast<double>(t_)),
        meta(2, nu, 1.0 / static_cast<double>(t_)) {
    const double gamma = 1.0 / static_cast<double>(T);
    for (int r = 1; r <= rows; ++r) {
      for (int s = 1; s <= cols; ++s) {
        int k = n;
        if (r < 62 && (std::int64_t{1} << r) < n) k = 1 << r;
        const double etacell =
            eta0 / std::sqrt(static_cast<double>(std::int64_t{1} << (r + s)));
        cells.emplace_back(k, etacell, gamma);
      }
    }
  }

  template <typename F>
  void observe(F&& loss_of, int leader, optx::RngStream& rng) {
    // Candidate branch probe.
    const int y = rng.uniform_int(static_cast<int>(R.size()));
    a1.observe_at(y, loss_of(R[static_cast<size_t>(y)]));

    // Grid probes, then fresh per-cell samples from pre-update state.
    const int m = static_cast<int>(cells.size());
    std::vector<int> jslot(static_cast<size_t>(m));
    std::vector<double> floss(static_cast<size_t>(m));
    for (int c = 0; c < m; ++c) {
      jslot[static_cast<size_t>(c)] = rng.uniform_int(cells[static_cast<size_t>(c)].k);
      floss[static_cast<size_t>(c)] =
          loss_of(cells[static_cast<size_t>(c)].buffer[static_cast<size_t>(
              jslot[static_cast<size_t>(c)])]);
    }
    std::vector<double> closs(static_cast<size_t>(m));
    for (int r = 1, c = 0; r <= rows; ++r) {
      for (int s = 1; s <= cols; ++s, ++c) {
        optx::RngStream sub = rng.child({optx::stream_label("cell-fresh"),
                                         static_cast<std::uint64_t>(round + 1),
                                         static_cast<std::uint64_t>(r),
                                         static_cast<std::uint64_t>(s)});
        const int slot = prefix_pick(cells[static_cast<size_t>(c)].w, sub.uniform());
        closs[static_cast<size_t>(c)] =
            loss_of(cells[static_cast<size_t>(c)].buffer[static_cast<size_t>(slot)]);
      }
    }
    for (int c = 0; c < m; ++c)
      cells[static_cast<size_t>(c)].observe_probed(jslot[static_cast<size_t>(c)],
                                                   floss[static_cast<size_t>(c)], leader);
    lcomb.observe(closs);

    // Fresh samples for the two-way combiner, drawn from pre-update branch
    // state on their own substreams.
    optx::RngStream s1 =
        rng.child({optx::stream_label("meta-fresh"), static_cast<std::uint64_t>(round + 1), 0});
    optx::RngStream s2 =
        rng.child({optx::stream_label("meta-fresh"), static_cast<std::uint64_t>(round + 1), 1});
    std::vector<double> metaloss(2);
    metaloss[0] = loss_of(R[static_cast<size_t>(prefix_pick(a1.w, s1.uniform()))]);
    const int c2 = prefix_pick(lcomb.w, s2.uniform());
    const int slot2 = prefix_pick(cells[static_cast<size_t>(c2)].w, s2.uniform());
    metaloss[1] = loss_of(cells[static_cast<size_t>(c2)].buffer[static_cast<size_t>(slot2)]);
    meta.observe(metaloss);
    ++round;
  }

  int play(optx::RngStream& rng) const {
    const int branch = prefix_pick(meta.w, rng.uniform());
    if (branch == 0) return R[static_cast<size_t>(prefix_pick(a1.w, rng.uniform()))];
    const int c = prefix_pick(lcomb.w, rng.uniform());
    const int slot = prefix_pick(cells[static_cast<size_t>(c)].w, rng.uniform());
    return cells[static_cast<size_t>(c)].buffer[static_cast<size_t>(slot)];
  }
};

}  // namespace ref
