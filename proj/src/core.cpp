#include "optx/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optx {

MixedStrategy MixedStrategy::uniform(int n) {
  if (n < 1) throw std::invalid_argument("param-domain: uniform distribution needs n >= 1");
  MixedStrategy q;
  q.atoms.reserve(static_cast<size_t>(n));
  const double m = 1.0 / n;
  for (int i = 0; i < n; ++i) q.atoms.push_back({static_cast<ExpertId>(i), m});
  return q;
}

MixedStrategy MixedStrategy::from_counts(const std::vector<std::int64_t>& counts, std::int64_t total) {
  if (total <= 0) throw std::invalid_argument("param-domain: from_counts needs a positive total");
  MixedStrategy q;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw std::invalid_argument("param-domain: negative count");
    if (counts[i] > 0)
      q.atoms.push_back({static_cast<ExpertId>(i), static_cast<double>(counts[i]) / static_cast<double>(total)});
  }
  return q;
}

bool MixedStrategy::contains(ExpertId i) const {
  auto it = std::lower_bound(atoms.begin(), atoms.end(), i,
                             [](const Atom& a, ExpertId v) { return a.index < v; });
  return it != atoms.end() && it->index == i;
}

void MixedStrategy::validate(int n) const {
  if (atoms.empty()) throw std::invalid_argument("empty-support: distribution has no atoms");
  double sum = 0;
  ExpertId prev = -1;
  for (const Atom& a : atoms) {
    if (a.index <= prev) throw std::invalid_argument("param-domain: atom indices must be sorted and unique");
    if (n >= 0 && (a.index < 0 || a.index >= n))
      throw std::invalid_argument("param-domain: atom index out of range");
    if (!(a.mass > 0) || !std::isfinite(a.mass))
      throw std::invalid_argument("param-domain: atom masses must be positive and finite");
    sum += a.mass;
    prev = a.index;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("param-domain: atom masses must sum to 1 within 1e-9");
}

OraclePair::OraclePair(int num_experts, ValueFn value, OptFn opt)
    : n_(num_experts), value_(std::move(value)), opt_(std::move(opt)), touched_(static_cast<size_t>(num_experts), false) {
  if (n_ < 1) throw std::invalid_argument("param-domain: oracle needs at least one expert");
}

void OraclePair::touch(ExpertId x) const {
  if (x >= 0 && x < n_ && !touched_[static_cast<size_t>(x)]) {
    touched_[static_cast<size_t>(x)] = true;
    ++counters_.distinct_experts;
  }
}

double OraclePair::value(ExpertId x, ExpertId action) const {
  if (x < 0 || x >= n_) throw std::invalid_argument("param-domain: expert index out of range");
  ++counters_.value_calls;
  touch(x);
  return value_(x, action);
}

ExpertId OraclePair::opt(const MixedStrategy& q) const {
  ++counters_.opt_calls;
  ExpertId x = opt_(q);
  touch(x);
  return x;
}

OraclePair table_oracle(const std::vector<std::vector<double>>& losses) {
  if (losses.empty()) throw std::invalid_argument("param-domain: empty loss table");
  const int n = static_cast<int>(losses.size());
  auto table = std::make_shared<std::vector<std::vector<double>>>(losses);
  auto value = [table](ExpertId x, ExpertId y) {
    return (*table)[static_cast<size_t>(x)].at(static_cast<size_t>(y));
  };
  auto opt = [table, n](const MixedStrategy& q) {
    q.validate();
    ExpertId best = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int x = 0; x < n; ++x) {
      double e = 0;
      for (const auto& a : q.atoms) e += a.mass * (*table)[static_cast<size_t>(x)].at(static_cast<size_t>(a.index));
      if (e < best_loss) {
        best_loss = e;
        best = static_cast<ExpertId>(x);
      }
    }
    return best;
  };
  return OraclePair(n, std::move(value), std::move(opt));
}

ExpertId compute_leader(const std::vector<ExpertId>& history, const OraclePair& oracle) {
  if (history.empty()) throw std::invalid_argument("no-rounds: leader undefined on empty history");
  std::vector<std::int64_t> counts;
  for (ExpertId y : history) {
    if (y < 0) throw std::invalid_argument("param-domain: negative action handle");
    if (static_cast<size_t>(y) >= counts.size()) counts.resize(static_cast<size_t>(y) + 1, 0);
    ++counts[static_cast<size_t>(y)];
  }
  MixedStrategy q = MixedStrategy::from_counts(counts, static_cast<std::int64_t>(history.size()));
  return oracle.opt(q);
}

ExpertId LeaderFeed::push(ExpertId action) {
  if (action < 0) throw std::invalid_argument("param-domain: negative action handle");
  if (static_cast<size_t>(action) >= counts_.size()) counts_.resize(static_cast<size_t>(action) + 1, 0);
  ++counts_[static_cast<size_t>(action)];
  ++rounds_;
  // Rebuild the sparse view in place; capacity is retained across rounds.
  scratch_.atoms.clear();
  const double inv = 1.0 / static_cast<double>(rounds_);
  for (size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] > 0)
      scratch_.atoms.push_back({static_cast<ExpertId>(i), static_cast<double>(counts_[i]) * inv});
  }
  leader_ = oracle_->opt(scratch_);
  return leader_;
}

ExpertId LeaderFeed::current_leader() const {
  if (rounds_ == 0) throw std::invalid_argument("no-rounds: leader undefined on empty history");
  return leader_;
}

RegretLedger::RegretLedger(int num_experts)
    : n_(num_experts),
      cum_(static_cast<size_t>(num_experts), 0.0),
      cum_c_(static_cast<size_t>(num_experts), 0.0) {
  if (n_ < 1) throw std::invalid_argument("param-domain: ledger needs at least one expert");
}

void RegretLedger::check_loss(double v) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("loss-range: ledger losses must lie in [0,1]");
}

double RegretLedger::best_cum_loss() const {
  double best = cum_[0];
  for (int x = 1; x < n_; ++x)
    if (cum_[static_cast<size_t>(x)] < best) best = cum_[static_cast<size_t>(x)];
  return best;
}

double RegretLedger::average_regret() const {
  if (round_ == 0) return 0.0;
  return (player_ - best_cum_loss()) / static_cast<double>(round_);
}

double RegretLedger::total_regret() const { return player_ - best_cum_loss(); }

}  // namespace optx
