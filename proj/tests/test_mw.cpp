#include <doctest.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "optx/mw.hpp"
#include "optx/rng.hpp"
#include "reference.hpp"

using optx::Mw1;
using optx::Mw2;
using optx::Mw3;
using optx::RngStream;

TEST_CASE("decay multiplier agrees with exp across regimes") {
  for (double x : {0.0, 1e-9, 1e-5, 1e-3, 2e-3, 0.5, 5.0, 100.0, 699.0}) {
    CHECK(optx::decay_multiplier(x) == doctest::Approx(std::exp(-x)).epsilon(1e-9));
  }
  CHECK(optx::decay_multiplier(701.0) == 0.0);
  CHECK(optx::decay_multiplier(1e9) == 0.0);
}

TEST_CASE("learner parameter guards") {
  CHECK_THROWS_WITH_AS(Mw1(0, 0.1, 0.1), doctest::Contains("param-domain"),
                       std::invalid_argument);
  CHECK_THROWS_AS(Mw1(2, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Mw1(2, -1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Mw1(2, 0.1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(Mw2(0, 0.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(Mw3(4, 8, 0.1, 0.1), std::invalid_argument);  // buffer > universe
  CHECK_THROWS_AS(Mw3(4, 0, 0.1, 0.1), std::invalid_argument);
}

TEST_CASE("dense learner starts uniform") {
  Mw1 mw(4, 0.5, 0.01);
  for (int i = 0; i < 4; ++i) CHECK(mw.prob(i) == doctest::Approx(0.25));
  RngStream rng(1);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[static_cast<size_t>(mw.play(rng))];
  for (int c : counts) CHECK(std::abs(c / 40000.0 - 0.25) < 0.01);
}

TEST_CASE("dense learner shifts mass away from a losing expert") {
  const double t = 100.0;
  Mw1 mw(2, 0.5, 1.0 / t);
  Eigen::ArrayXd losses(2);
  losses << 0.0, 5.0;
  mw.observe(losses);
  CHECK(mw.prob(0) > mw.prob(1));
}

TEST_CASE("dense learner matches a hand-iterated two-round recurrence") {
  // N=3, eta=0.5, gamma=0.01, losses (0.2, 0.5, 1.0) then (0.9, 0.1, 0.3),
  // iterated by hand below with the same update order as the recurrence:
  // w'(x) = w(x) exp(-eta l(x)) + (gamma/N) W.
  Mw1 mw(3, 0.5, 0.01);
  Eigen::ArrayXd l1(3), l2(3);
  l1 << 0.2, 0.5, 1.0;
  l2 << 0.9, 0.1, 0.3;
  mw.observe(l1);
  mw.observe(l2);

  double w0 = 1.0, w1 = 1.0, w2 = 1.0;
  double W = w0 + w1 + w2;
  double mix = 0.01 / 3.0 * W;
  w0 = w0 * std::exp(-0.5 * 0.2) + mix;
  w1 = w1 * std::exp(-0.5 * 0.5) + mix;
  w2 = w2 * std::exp(-0.5 * 1.0) + mix;
  W = w0 + w1 + w2;
  mix = 0.01 / 3.0 * W;
  w0 = w0 * std::exp(-0.5 * 0.9) + mix;
  w1 = w1 * std::exp(-0.5 * 0.1) + mix;
  w2 = w2 * std::exp(-0.5 * 0.3) + mix;
  W = w0 + w1 + w2;

  CHECK(mw.prob(0) == doctest::Approx(w0 / W).epsilon(1e-12));
  CHECK(mw.prob(1) == doctest::Approx(w1 / W).epsilon(1e-12));
  CHECK(mw.prob(2) == doctest::Approx(w2 / W).epsilon(1e-12));
  CHECK(mw.round() == 2);
}

TEST_CASE("all-zero and constant losses keep a fresh learner uniform") {
  Mw1 mw(5, 0.3, 0.02);
  mw.observe(Eigen::ArrayXd::Zero(5));
  for (int i = 0; i < 5; ++i) CHECK(mw.prob(i) == doctest::Approx(0.2).epsilon(1e-12));
  mw.observe(Eigen::ArrayXd::Constant(5, 0.7));
  for (int i = 0; i < 5; ++i) CHECK(mw.prob(i) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("with no mixing, a common loss offset cancels out of the distribution") {
  Mw1 a(3, 0.4, 0.0), b(3, 0.4, 0.0);
  Eigen::ArrayXd base(3), shifted(3);
  base << 0.1, 0.6, 0.3;
  shifted = base + 0.9;
  RngStream rng(5);
  for (int round = 0; round < 10; ++round) {
    a.observe(base);
    b.observe(shifted);
    base << rng.uniform(), rng.uniform(), rng.uniform();
    shifted = base + 0.5;
  }
  for (int i = 0; i < 3; ++i) CHECK(a.prob(i) == doctest::Approx(b.prob(i)).epsilon(1e-9));
}

TEST_CASE("fifty seeded rounds match the dense reference to 1e-10") {
  const int n = 4;
  Mw1 mw(n, 0.37, 0.015);
  ref::DenseMw1 dense(n, 0.37, 0.015);
  RngStream rng(0x50f7ULL);
  Eigen::ArrayXd l(n);
  std::vector<double> lv(static_cast<size_t>(n));
  for (int round = 0; round < 50; ++round) {
    for (int i = 0; i < n; ++i) {
      lv[static_cast<size_t>(i)] = rng.uniform();
      l[i] = lv[static_cast<size_t>(i)];
    }
    mw.observe(l);
    dense.observe(lv);
    for (int i = 0; i < n; ++i)
      CHECK(std::abs(mw.weight(i) - dense.w[static_cast<size_t>(i)]) <=
            1e-10 * std::max(1.0, dense.w[static_cast<size_t>(i)]));
  }
}

TEST_CASE("every weight keeps the mixing floor after an update") {
  Mw1 mw(6, 1.0, 0.05);
  RngStream rng(8);
  Eigen::ArrayXd l(6);
  for (int round = 0; round < 40; ++round) {
    const double pre = mw.total();
    for (int i = 0; i < 6; ++i) l[i] = rng.uniform();
    mw.observe(l);
    for (int i = 0; i < 6; ++i) CHECK(mw.weight(i) >= 0.05 / 6.0 * pre * (1 - 1e-12));
  }
}

TEST_CASE("dense learner accepts unbounded nonnegative losses, rejects the rest") {
  Mw1 mw(2, 0.1, 0.01);
  Eigen::ArrayXd big(2);
  big << 3.7, 120.0;  // admitted: the loss domain is all of R+
  mw.observe(big);
  Eigen::ArrayXd neg(2);
  neg << 0.5, -0.1;
  CHECK_THROWS_WITH_AS(mw.observe(neg), doctest::Contains("loss-range"), std::invalid_argument);
  Eigen::ArrayXd nan2(2);
  nan2 << 0.5, std::nan("");
  CHECK_THROWS_AS(mw.observe(nan2), std::invalid_argument);
  CHECK_THROWS_AS(mw.observe(Eigen::ArrayXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("renormalization preserves the sampling distribution") {
  // Two rounds of huge losses with nearly-zero mixing collapse the total far
  // below the rescale threshold. The dense reference never rescales (doubles
  // hold 1e-18 comfortably), so matching it across the rescale shows the
  // rescale is invisible to the distribution.
  Mw1 mw(3, 1.0, 1e-14);
  ref::DenseMw1 dense(3, 1.0, 1e-14);
  Eigen::ArrayXd le(3);
  le << 20.0, 21.0, 22.0;
  const std::vector<double> lv = {20.0, 21.0, 22.0};
  mw.observe(le);
  dense.observe(lv);
  CHECK(mw.log_scale() == 0.0);
  mw.observe(le);
  dense.observe(lv);
  CHECK(mw.log_scale() < 0.0);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += mw.prob(i);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    CHECK(mw.prob(i) == doctest::Approx(dense.prob(i)).epsilon(1e-9));
}

TEST_CASE("amortized learner starts uniform and plays in range") {
  Mw2 mw(7, 0.2, 0.01);
  for (int i = 0; i < 7; ++i) CHECK(mw.prob(i) == doctest::Approx(1.0 / 7));
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    int x = mw.play(rng);
    CHECK(x >= 0);
    CHECK(x < 7);
  }
}

TEST_CASE("amortized learner concentrates and samples its dominant expert") {
  Mw2 mw(4, 2.0, 0.01);
  for (int rep = 0; rep < 3; ++rep)
    for (int y = 1; y < 4; ++y) mw.observe_at(y, 1.0);
  const double p0 = mw.prob(0);
  CHECK(p0 > 0.9);
  RngStream rng(14);
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i)
    if (mw.play(rng) == 0) ++hits;
  CHECK(std::abs(static_cast<double>(hits) / draws - p0) < 0.01);
}

TEST_CASE("zero probed loss grows only the uniform component") {
  Mw2 mw(5, 0.3, 0.1);
  const auto& w = mw.weights();
  std::vector<double> alpha_before;
  for (int i = 0; i < 5; ++i) alpha_before.push_back(w.alpha(i));
  const double beta_before = w.beta();
  mw.observe_at(2, 0.0);
  for (int i = 0; i < 5; ++i) CHECK(w.alpha(i) == alpha_before[static_cast<size_t>(i)]);
  CHECK(w.beta() > beta_before);
}

TEST_CASE("forced probe matches the dense recurrence") {
  // N=2, probe y=0 with loss 1, eta=0.1, gamma=0.01.
  Mw2 mw(2, 0.1, 0.01);
  ref::DenseMw2 dense(2, 0.1, 0.01);
  mw.observe_at(0, 1.0);
  dense.observe_at(0, 1.0);
  CHECK(mw.implied_weight(0) == doctest::Approx(dense.w[0]).epsilon(1e-12));
  CHECK(mw.implied_weight(1) == doctest::Approx(dense.w[1]).epsilon(1e-12));
}

TEST_CASE("amortized trajectories track the dense reference through 100 scripted rounds") {
  const int n = 8;
  Mw2 mw(n, 0.15, 0.005);
  ref::DenseMw2 dense(n, 0.15, 0.005);
  RngStream rng(0xabcdULL);
  for (int round = 0; round < 100; ++round) {
    const int y = rng.uniform_int(n);
    const double f = rng.uniform();
    mw.observe_at(y, f);
    dense.observe_at(y, f);
  }
  CHECK(mw.round() == 100);
  // Distributional agreement: empirical draws from the implicit state pass a
  // chi-square test against the dense probabilities.
  std::vector<double> probs(static_cast<size_t>(n));
  const double total = dense.total();
  for (int i = 0; i < n; ++i) {
    probs[static_cast<size_t>(i)] = dense.w[static_cast<size_t>(i)] / total;
    CHECK(std::abs(mw.prob(i) - probs[static_cast<size_t>(i)]) < 1e-10);
  }
  RngStream draw(0x1234ULL);
  std::vector<std::int64_t> counts(static_cast<size_t>(n), 0);
  for (int i = 0; i < 100000; ++i) ++counts[static_cast<size_t>(mw.play(draw))];
  CHECK(ref::chi_square_stat(counts, probs) < ref::kChi2Df7Alpha001);
}

TEST_CASE("probe estimator is unbiased for every expert") {
  const int n = 4;
  const double f[] = {0.3, 0.7, 0.1, 0.9};
  RngStream rng(0xe57ULL);
  const int draws = 100000;
  std::vector<double> mean(static_cast<size_t>(n), 0.0);
  for (int d = 0; d < draws; ++d) {
    const int y = rng.uniform_int(n);
    // Importance-weighted single-probe estimator: n * f(y) on y, 0 elsewhere.
    mean[static_cast<size_t>(y)] += static_cast<double>(n) * f[y];
  }
  for (int x = 0; x < n; ++x)
    CHECK(std::abs(mean[static_cast<size_t>(x)] / draws - f[x]) < 0.015);
}

TEST_CASE("each amortized observe makes exactly one loss evaluation") {
  Mw2 mw(6, 0.2, 0.01);
  RngStream rng(4);
  int calls = 0;
  for (int round = 0; round < 25; ++round) {
    mw.observe([&](optx::ExpertId) { ++calls; return 0.5; }, rng);
  }
  CHECK(calls == 25);
}

TEST_CASE("amortized updates touch logarithmically many tree nodes") {
  Mw2 mw(64, 0.05, 0.01);
  RngStream rng(10);
  for (int warm = 0; warm < 5; ++warm) mw.observe([](optx::ExpertId) { return 0.3; }, rng);
  mw.weights().reset_nodes_touched();
  mw.observe_at(17, 0.6);
  // One leaf write: at most one root-to-leaf path of the padded 64-leaf tree.
  CHECK(mw.weights().nodes_touched() <= 2 * 7 + 2);
}

TEST_CASE("sliding buffer starts as the identity window") {
  Mw3 mw(10, 4, 0.3, 0.01);
  for (int i = 0; i < 4; ++i) {
    CHECK(mw.buffer(i) == i);
    CHECK(mw.stamp(i) == i - 4);
    CHECK(mw.slot_weight(i) == doctest::Approx(1.0));
  }
  RngStream rng(2);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) ++counts[static_cast<size_t>(mw.play(rng))];
  for (int c : counts) CHECK(std::abs(c / 40000.0 - 0.25) < 0.01);
}

TEST_CASE("a dominant slot dominates the play distribution") {
  Mw3 mw(10, 3, 1.5, 0.01);
  // Hammer slots 1 and 2 with losses so slot 0 dominates.
  for (int rep = 0; rep < 4; ++rep) {
    mw.observe_with(1, optx::decay_multiplier(mw.decay_arg(1.0)), 0);
    mw.observe_with(2, optx::decay_multiplier(mw.decay_arg(1.0)), 0);
  }
  const double p0 = mw.slot_weight(0) / mw.total_weight();
  CHECK(p0 > 0.8);
  RngStream rng(6);
  const int draws = 50000;
  int hits = 0;
  for (int i = 0; i < draws; ++i)
    if (mw.play(rng) == 0) ++hits;
  CHECK(std::abs(static_cast<double>(hits) / draws - p0) < 0.01);
}

TEST_CASE("played experts always come from the live buffer") {
  Mw3 mw(20, 3, 0.4, 0.01);
  RngStream rng(7);
  // Activate experts 10, 11, 12: evictions replace the initial buffer.
  for (int a : {10, 11, 12}) mw.observe([](optx::ExpertId) { return 0.5; }, a, rng);
  std::set<int> live;
  for (int i = 0; i < 3; ++i) live.insert(mw.buffer(i));
  CHECK(live == std::set<int>({10, 11, 12}));
  for (int i = 0; i < 500; ++i) CHECK(live.count(mw.play(rng)) == 1);
}

TEST_CASE("refreshing a present expert changes no buffer slots") {
  Mw3 mw(10, 3, 0.4, 0.01);
  RngStream rng(8);
  mw.observe([](optx::ExpertId) { return 0.2; }, 1, rng);  // expert 1 already in slot 1
  CHECK(mw.buffer(0) == 0);
  CHECK(mw.buffer(1) == 1);
  CHECK(mw.buffer(2) == 2);
  CHECK(mw.stamp(1) == 1);  // refreshed to the current round
}

TEST_CASE("eviction installs the newcomer with the evicted slot's weight") {
  // k=2 buffer {0, 1}; slot 0 holds the older stamp, so activating expert 5
  // must replace expert 0 and keep slot 0's weight.
  Mw3 mw(6, 2, 0.8, 0.01);
  mw.observe_with(1, 0.5, 1);  // decay slot 1, refresh expert 1's stamp
  const double w0 = mw.slot_weight(0);
  const double pre_total = mw.total_weight();
  mw.observe_with(1, 1.0, 5);  // no decay; expert 5 arrives, slot 0 is stalest
  CHECK(mw.buffer(0) == 5);
  CHECK(mw.buffer(1) == 1);
  // Slot 0's weight moved only by this round's mixing bump; the newcomer
  // stands on everything the slot accumulated before it arrived.
  CHECK(mw.slot_weight(0) ==
        doctest::Approx(w0 + 0.01 / 2.0 * pre_total).epsilon(1e-12));
}

TEST_CASE("thirty scripted rounds agree with the dense buffer simulation") {
  const int n = 12, k = 4;
  Mw3 mw(n, k, 0.35, 0.02);
  ref::DenseMw3 dense(k, 0.35, 0.02);
  RngStream rng(0x30313233ULL);
  RngStream activations(99);
  for (int round = 0; round < 30; ++round) {
    const int activated = activations.uniform_int(n);
    RngStream peek = rng;  // the learner's next draw, observed in advance
    const int j = peek.uniform_int(k);
    const double f = 0.1 + 0.8 * (static_cast<double>((mw.buffer(j) * 7 + round) % 10) / 10.0);
    auto loss_of = [&](optx::ExpertId x) {
      return 0.1 + 0.8 * (static_cast<double>((x * 7 + round) % 10) / 10.0);
    };
    mw.observe(loss_of, activated, rng);
    dense.observe_probed(j, f, activated);
    for (int i = 0; i < k; ++i) {
      CHECK(mw.buffer(i) == dense.buffer[static_cast<size_t>(i)]);
      CHECK(mw.stamp(i) == dense.stamp[static_cast<size_t>(i)]);
      CHECK(std::abs(mw.slot_weight(i) - dense.w[static_cast<size_t>(i)]) <=
            1e-9 * std::max(1.0, dense.w[static_cast<size_t>(i)]));
    }
  }
}

TEST_CASE("buffer holds exactly the most recent distinct activations") {
  const int n = 9, k = 3;
  RngStream scripts(0x6265ULL);
  for (int run = 0; run < 50; ++run) {
    Mw3 mw(n, k, 0.3, 0.02);
    RngStream rng(run + 1);
    std::vector<int> history;
    for (int round = 0; round < 40; ++round) {
      const int a = scripts.uniform_int(n);
      history.push_back(a);
      mw.observe([](optx::ExpertId) { return 0.4; }, a, rng);
      auto recent = ref::most_recent_distinct(history, k);
      std::set<int> buf;
      for (int i = 0; i < k; ++i) buf.insert(mw.buffer(i));
      CHECK(buf.size() == static_cast<size_t>(k));  // slots stay pairwise distinct
      if (static_cast<int>(recent.size()) == k) {
        std::set<int> want(recent.begin(), recent.end());
        CHECK(buf == want);
      } else {
        for (int e : recent) CHECK(buf.count(e) == 1);
      }
      std::set<std::int64_t> stamps;
      for (int i = 0; i < k; ++i) stamps.insert(mw.stamp(i));
      CHECK(stamps.size() == static_cast<size_t>(k));  // stamps stay unique
    }
  }
}

TEST_CASE("each sliding observe makes exactly one loss evaluation") {
  Mw3 mw(10, 4, 0.2, 0.01);
  RngStream rng(11);
  int calls = 0;
  for (int round = 0; round < 30; ++round)
    mw.observe([&](optx::ExpertId) { ++calls; return 0.2; }, round % 10, rng);
  CHECK(calls == 30);
}

TEST_CASE("estimator scale defaults to the buffer size and can be overridden") {
  Mw3 by_k(100, 4, 0.1, 0.01);
  CHECK(by_k.estimator_scale() == 4);
  CHECK(by_k.decay_arg(0.5) == doctest::Approx(0.1 * 4 * 0.5));
  Mw3 by_n(100, 4, 0.1, 0.01, 100);
  CHECK(by_n.estimator_scale() == 100);
  CHECK(by_n.decay_arg(0.5) == doctest::Approx(0.1 * 100 * 0.5));
}
