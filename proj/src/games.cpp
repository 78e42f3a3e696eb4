#include "optx/games.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "optx/oracle_experts.hpp"

namespace optx {

namespace {

void check_payoff_value(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("payoff-range: payoffs must lie in [0,1]");
}

void rebuild_from_counts(MixedStrategy& s, const std::vector<std::int64_t>& counts,
                         std::int64_t total) {
  s.atoms.clear();
  const double inv = 1.0 / static_cast<double>(total);
  for (int i = 0; i < static_cast<int>(counts.size()); ++i) {
    if (counts[i] > 0) s.atoms.push_back({i, static_cast<double>(counts[i]) * inv});
  }
}

}  // namespace

GameMatrix::GameMatrix(int n, PayoffFn payoff, BrFn best_response_row, BrFn best_response_col)
    : n_(n), payoff_(std::move(payoff)), br_row_(std::move(best_response_row)),
      br_col_(std::move(best_response_col)) {
  if (n < 1) throw std::invalid_argument("param-domain: game needs at least one action");
  if (!payoff_ || !br_row_ || !br_col_)
    throw std::invalid_argument("param-domain: game needs payoff and both best responses");
}

GameMatrix GameMatrix::from_dense(Eigen::MatrixXd g) {
  if (g.rows() != g.cols() || g.rows() < 1)
    throw std::invalid_argument("param-domain: game matrix must be square and nonempty");
  if (!g.allFinite() || g.minCoeff() < 0.0 || g.maxCoeff() > 1.0)
    throw std::invalid_argument("payoff-range: payoffs must lie in [0,1]");
  const int n = static_cast<int>(g.rows());
  auto mat = std::make_shared<const Eigen::MatrixXd>(std::move(g));
  auto scratch = std::make_shared<Eigen::VectorXd>(n);

  auto pay = [mat](int i, int j) { return (*mat)(i, j); };
  auto br_row = [mat, scratch](const MixedStrategy& q) {
    Eigen::VectorXd& v = *scratch;
    v.setZero();
    for (const auto& a : q.atoms) v.noalias() += a.mass * mat->col(a.index);
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
      if (v[i] < v[best]) best = i;
    return best;
  };
  auto br_col = [mat, scratch](const MixedStrategy& p) {
    Eigen::VectorXd& v = *scratch;
    v.setZero();
    for (const auto& a : p.atoms) v.noalias() += a.mass * mat->row(a.index).transpose();
    int best = 0;
    for (int j = 1; j < v.size(); ++j)
      if (v[j] > v[best]) best = j;
    return best;
  };
  return GameMatrix(n, std::move(pay), std::move(br_row), std::move(br_col));
}

Eigen::MatrixXd random_game_dense(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("param-domain: game needs at least one action");
  RngStream rng(derive_seed(seed, {stream_label("random-game")}));
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.uniform();
  return g;
}

GameMatrix GameMatrix::random_uniform(int n, std::uint64_t seed) {
  return from_dense(random_game_dense(n, seed));
}

double GameMatrix::payoff(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw std::invalid_argument("param-domain: action index out of range");
  ++payoff_calls_;
  const double v = payoff_(i, j);
  check_payoff_value(v);
  return v;
}

double GameMatrix::payoff_raw(int i, int j) const {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw std::invalid_argument("param-domain: action index out of range");
  const double v = payoff_(i, j);
  check_payoff_value(v);
  return v;
}

int GameMatrix::best_response_row(const MixedStrategy& q) const {
  q.validate(n_);
  ++br_row_calls_;
  const int r = br_row_(q);
  if (r < 0 || r >= n_)
    throw std::runtime_error("spec-error: best response returned an out-of-range action");
  return r;
}

int GameMatrix::best_response_col(const MixedStrategy& p) const {
  p.validate(n_);
  ++br_col_calls_;
  const int r = br_col_(p);
  if (r < 0 || r >= n_)
    throw std::runtime_error("spec-error: best response returned an out-of-range action");
  return r;
}

EquilibriumReport evaluate_profile(const GameMatrix& game, const MixedStrategy& p,
                                   const MixedStrategy& q) {
  const int n = game.size();
  p.validate(n);
  q.validate(n);
  EquilibriumReport rep;
  rep.row_strategy = p;
  rep.col_strategy = q;

  double value = 0.0;
  for (const auto& a : p.atoms)
    for (const auto& b : q.atoms) value += a.mass * b.mass * game.payoff_raw(a.index, b.index);

  double best_row = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double e = 0.0;
    for (const auto& b : q.atoms) e += b.mass * game.payoff_raw(i, b.index);
    if (e < best_row) best_row = e;
  }
  double best_col = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    double e = 0.0;
    for (const auto& a : p.atoms) e += a.mass * game.payoff_raw(a.index, j);
    if (e > best_col) best_col = e;
  }

  rep.value = value;
  rep.row_exploitability = value - best_row;
  rep.col_exploitability = best_col - value;
  rep.duality_gap = rep.row_exploitability + rep.col_exploitability;
  return rep;
}

VerifyResult verify_equilibrium(const GameMatrix& game, const MixedStrategy& p,
                                const MixedStrategy& q, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("param-domain: eps must be nonnegative and finite");
  VerifyResult out;
  out.epsilon = eps;
  out.report = evaluate_profile(game, p, q);
  out.approximate_equilibrium =
      out.report.row_exploitability <= eps && out.report.col_exploitability <= eps;
  return out;
}

std::int64_t horizon_for(std::int64_t n, double eps, double delta) {
  if (n < 1) throw std::invalid_argument("param-domain: need at least one action");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("param-domain: eps must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("param-domain: delta must lie in (0,1)");
  const double nn = static_cast<double>(n);
  const double lead = 240.0 * 240.0 * std::sqrt(nn) / (eps * eps);
  const double lg = std::log(240.0 * nn / (eps * delta));
  const double raw = std::ceil(lead * lg * lg);
  if (!(raw < 9.0e18))
    throw std::invalid_argument("param-domain: horizon does not fit in 64 bits");
  return static_cast<std::int64_t>(raw);
}

namespace {

struct SolveCounters {
  std::uint64_t pay0, br0;
  explicit SolveCounters(const GameMatrix& g)
      : pay0(g.payoff_calls()), br0(g.br_row_calls() + g.br_col_calls()) {}
  void fill(const GameMatrix& g, EquilibriumReport& rep) const {
    rep.payoff_calls = g.payoff_calls() - pay0;
    rep.br_calls = g.br_row_calls() + g.br_col_calls() - br0;
  }
};

bool is_checkpoint(std::int64_t t, std::int64_t horizon) {
  return t == horizon || (t & (t - 1)) == 0;
}

}  // namespace

EquilibriumReport solve_game(const GameMatrix& game, std::int64_t horizon, RngStream& rng,
                             const GameCheckpointFn& checkpoint) {
  if (horizon < 1) throw std::invalid_argument("horizon: need at least one round");
  const int n = game.size();
  SelfObliviousExperts row(n, horizon, rng());
  SelfObliviousExperts col(n, horizon, rng());

  std::vector<std::int64_t> row_counts(n, 0), col_counts(n, 0);
  MixedStrategy pbar, qbar;
  pbar.atoms.reserve(n);
  qbar.atoms.reserve(n);

  // Round-stamped caches: the learners probe only n distinct actions per
  // round, so each payoff column/row is evaluated at most once per round.
  std::vector<double> row_val(n), col_val(n);
  std::vector<std::int64_t> row_tag(n, 0), col_tag(n, 0);

  const SolveCounters base(game);

  for (std::int64_t t = 1; t <= horizon; ++t) {
    const int x = row.play();
    const int y = col.play();
    ++row_counts[x];
    ++col_counts[y];
    rebuild_from_counts(pbar, row_counts, t);
    rebuild_from_counts(qbar, col_counts, t);
    const int xstar = game.best_response_row(qbar);
    const int ystar = game.best_response_col(pbar);

    row.observe(
        [&](ExpertId i) {
          if (row_tag[i] != t) {
            row_val[i] = game.payoff(i, y);
            row_tag[i] = t;
          }
          return row_val[i];
        },
        xstar);
    col.observe(
        [&](ExpertId j) {
          if (col_tag[j] != t) {
            col_val[j] = 1.0 - game.payoff(x, j);
            col_tag[j] = t;
          }
          return col_val[j];
        },
        ystar);

    if (checkpoint && is_checkpoint(t, horizon)) {
      EquilibriumReport rep = evaluate_profile(game, pbar, qbar);
      rep.rounds = t;
      base.fill(game, rep);
      checkpoint(t, rep);
    }
  }

  EquilibriumReport rep = evaluate_profile(game, pbar, qbar);
  rep.rounds = horizon;
  base.fill(game, rep);
  return rep;
}

EquilibriumReport fictitious_play(const GameMatrix& game, std::int64_t horizon, RngStream& rng,
                                  const GameCheckpointFn& checkpoint) {
  if (horizon < 1) throw std::invalid_argument("horizon: need at least one round");
  const int n = game.size();
  SelfObliviousExperts row(n, horizon, rng());

  std::vector<std::int64_t> row_counts(n, 0), col_counts(n, 0);
  MixedStrategy pbar, qbar, prev_pbar;
  pbar.atoms.reserve(n);
  qbar.atoms.reserve(n);
  prev_pbar = MixedStrategy::uniform(n);

  std::vector<double> row_val(n);
  std::vector<std::int64_t> row_tag(n, 0);

  const SolveCounters base(game);

  for (std::int64_t t = 1; t <= horizon; ++t) {
    const int x = row.play();
    const int y = game.best_response_col(prev_pbar);
    ++row_counts[x];
    ++col_counts[y];
    rebuild_from_counts(pbar, row_counts, t);
    rebuild_from_counts(qbar, col_counts, t);
    prev_pbar = pbar;
    const int xstar = game.best_response_row(qbar);

    row.observe(
        [&](ExpertId i) {
          if (row_tag[i] != t) {
            row_val[i] = game.payoff(i, y);
            row_tag[i] = t;
          }
          return row_val[i];
        },
        xstar);

    if (checkpoint && is_checkpoint(t, horizon)) {
      EquilibriumReport rep = evaluate_profile(game, pbar, qbar);
      rep.rounds = t;
      base.fill(game, rep);
      checkpoint(t, rep);
    }
  }

  EquilibriumReport rep = evaluate_profile(game, pbar, qbar);
  rep.rounds = horizon;
  base.fill(game, rep);
  return rep;
}

void save_game(const Eigen::MatrixXd& g, const std::string& path) {
  if (g.rows() != g.cols() || g.rows() < 1)
    throw std::invalid_argument("param-domain: game matrix must be square and nonempty");
  if (!g.allFinite() || g.minCoeff() < 0.0 || g.maxCoeff() > 1.0)
    throw std::invalid_argument("payoff-range: payoffs must lie in [0,1]");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("io: cannot open " + path + " for writing");
  const auto n = static_cast<std::uint32_t>(g.rows());
  out.write("ZSG1", 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  std::vector<double> row(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) row[j] = g(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * n));
  }
  if (!out) throw std::runtime_error("io: short write to " + path);
}

Eigen::MatrixXd load_game_dense(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ZSG1", 4) != 0)
    throw std::invalid_argument("spec-error: not a game file (bad magic)");
  std::uint32_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n) || n < 1 || n > (1u << 20))
    throw std::invalid_argument("spec-error: bad game size");
  Eigen::MatrixXd g(n, n);
  std::vector<double> row(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(sizeof(double) * n)))
      throw std::invalid_argument("spec-error: truncated game file");
    for (std::uint32_t j = 0; j < n; ++j) g(i, j) = row[j];
  }
  if (!g.allFinite() || g.minCoeff() < 0.0 || g.maxCoeff() > 1.0)
    throw std::invalid_argument("payoff-range: payoffs must lie in [0,1]");
  return g;
}

GameMatrix load_game(const std::string& path) {
  return GameMatrix::from_dense(load_game_dense(path));
}

}  // namespace optx
