#include "optx/instances.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace optx {

// ---------------------------------------------------------------------------
// Hard experts

HardExpertsInstance gen_hard_experts(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("param-domain: block size must be >= 1");
  if (n > 46340) throw std::invalid_argument("param-domain: n^2 experts must fit in an int");
  HardExpertsInstance inst;
  inst.n = n;
  inst.num_experts = n * n;
  inst.good.resize(static_cast<size_t>(n));
  inst.is_good.assign(static_cast<size_t>(inst.num_experts), 0);
  RngStream rng(derive_seed(seed, {stream_label("hard-experts")}));
  for (int i = 0; i < n; ++i) {
    const ExpertId g = n * i + rng.uniform_int(n);
    inst.good[static_cast<size_t>(i)] = g;
    inst.is_good[static_cast<size_t>(g)] = 1;
  }
  return inst;
}

OraclePair make_hard_oracle(std::shared_ptr<const HardExpertsInstance> inst) {
  if (!inst) throw std::invalid_argument("param-domain: null instance");
  const int n_experts = inst->num_experts;
  auto value = [inst, n_experts](ExpertId x, ExpertId action) {
    if (action < 0 || action >= n_experts)
      throw std::invalid_argument("param-domain: action index out of range");
    return inst->loss(x, action);
  };
  auto opt = [inst, n_experts](const MixedStrategy& p) {
    p.validate(n_experts);
    // Highest good expert in the support; highest support element if the
    // support holds no good expert. Either answer minimizes the empirical
    // loss (every expert outside the support ties at best).
    ExpertId ans = -1;
    for (auto it = p.atoms.rbegin(); it != p.atoms.rend(); ++it) {
      if (inst->is_good[static_cast<size_t>(it->index)]) {
        ans = it->index;
        break;
      }
    }
    if (ans < 0) ans = p.atoms.back().index;
    if (!p.contains(ans))
      throw std::logic_error("spec-error: answer oracle left the queried support");
    return ans;
  };
  return OraclePair(n_experts, std::move(value), std::move(opt));
}

// ---------------------------------------------------------------------------
// Hypercube functions

bool is_globally_consistent(const HypercubeFunction& f) {
  if (f.d < 1 || f.values.size() != static_cast<size_t>(1) << f.d)
    throw std::invalid_argument("param-domain: malformed hypercube function");
  const int size = f.size();
  int count = 0;
  for (int v = 0; v < size; ++v) {
    bool is_max = true;
    for (int b = 0; b < f.d && is_max; ++b)
      is_max = f.values[static_cast<size_t>(v)] >= f.values[static_cast<size_t>(v ^ (1 << b))];
    if (is_max && ++count > 1) return false;
  }
  return count == 1;
}

HypercubeFunction gen_staircase_function(int d, std::uint64_t seed) {
  if (d < 1 || d > 24) throw std::invalid_argument("param-domain: dimension must lie in [1,24]");
  HypercubeFunction f;
  f.d = d;
  const int size = 1 << d;
  f.values.resize(static_cast<size_t>(size));
  for (int v = 0; v < size; ++v)
    f.values[static_cast<size_t>(v)] = static_cast<std::uint32_t>(std::popcount(static_cast<unsigned>(v)));

  RngStream rng(derive_seed(seed, {stream_label("staircase")}));
  std::vector<int> perm(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) perm[static_cast<size_t>(i)] = i;
  for (int i = d - 1; i >= 1; --i)
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(rng.uniform_int(i + 1))]);

  // Walk a random chain 0 -> all-ones, assigning strictly increasing values
  // that clear the popcount ceiling d, with random step parity.
  std::uint32_t level = static_cast<std::uint32_t>(d);
  int v = 0;
  level += 1 + static_cast<std::uint32_t>(rng.uniform_int(2));
  f.values[0] = level;
  for (int j = 0; j < d; ++j) {
    v |= 1 << perm[static_cast<size_t>(j)];
    level += 1 + static_cast<std::uint32_t>(rng.uniform_int(2));
    f.values[static_cast<size_t>(v)] = level;
  }

  f.globally_consistent = true;  // chain tops every neighborhood except at all-ones
  if (d <= 16 && !is_globally_consistent(f))
    throw std::logic_error("spec-error: staircase construction lost consistency");
  return f;
}

// ---------------------------------------------------------------------------
// Local-max game

AldousCore::AldousCore(const HypercubeFunction& f) : d_(f.d), n_(1 << f.d), values_(f.values) {
  if (f.d < 1 || f.d > 24 || f.values.size() != static_cast<size_t>(n_))
    throw std::invalid_argument("param-domain: malformed hypercube function");
  local_max_.assign(static_cast<size_t>(n_), 0);
  std::uint32_t best = 0;
  for (int v = 0; v < n_; ++v) {
    bool is_max = true;
    for (int b = 0; b < d_ && is_max; ++b)
      is_max = values_[static_cast<size_t>(v)] >= values_[static_cast<size_t>(v ^ (1 << b))];
    local_max_[static_cast<size_t>(v)] = is_max ? 1 : 0;
    if (global_max_ < 0 || values_[static_cast<size_t>(v)] > best) {
      best = values_[static_cast<size_t>(v)];
      global_max_ = v;
    }
  }
}

int AldousCore::best_vertex(const MixedStrategy& p) const {
  p.validate(n_);
  int best = -1;
  std::uint32_t best_value = 0;
  for (const auto& a : p.atoms) {
    for (int c = 0; c <= d_; ++c) {
      const int v = c == 0 ? a.index : a.index ^ (1 << (c - 1));
      const std::uint32_t fv = read(v);
      if (best < 0 || fv > best_value || (fv == best_value && v < best)) {
        best = v;
        best_value = fv;
      }
    }
  }
  return best;
}

AldousGame gen_aldous_game(const HypercubeFunction& f) {
  if (f.d < 1 || f.d > 24 || f.values.size() != static_cast<size_t>(1) << f.d)
    throw std::invalid_argument("param-domain: malformed hypercube function");
  const bool consistent = f.d <= 16 ? is_globally_consistent(f) : f.globally_consistent;
  if (!consistent)
    throw std::invalid_argument(
        "not-globally-consistent: the game construction needs a unique local maximum");
  auto core = std::make_shared<AldousCore>(f);
  auto pay = [core](int i, int j) { return core->payoff(i, j); };
  auto br = [core](const MixedStrategy& p) { return core->best_vertex(p); };
  return AldousGame{core, GameMatrix(core->size(), pay, br, br)};
}

// ---------------------------------------------------------------------------
// Multilinear extension

CubeTable make_cube_table(int d, std::vector<double> values) {
  if (d < 1 || d > 24) throw std::invalid_argument("param-domain: dimension must lie in [1,24]");
  if (values.size() != static_cast<size_t>(1) << d)
    throw std::invalid_argument("param-domain: table size must be 2^d");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("domain: table values must be nonnegative and finite");
  return CubeTable{d, std::move(values)};
}

CubeTable normalize_to_unit(const HypercubeFunction& f) {
  std::vector<double> values(f.values.begin(), f.values.end());
  const double top = *std::max_element(values.begin(), values.end());
  if (top > 0.0)
    for (double& v : values) v /= top;
  return make_cube_table(f.d, std::move(values));
}

double extend_multilinear(const CubeTable& f, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != f.d) throw std::invalid_argument("param-domain: point dimension mismatch");
  for (int i = 0; i < f.d; ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw std::invalid_argument("domain: coordinates must lie in [0,1]");
  thread_local std::vector<double> buf;
  buf.assign(f.values.begin(), f.values.end());
  // Contract one coordinate at a time: after folding bit i, buf[m] holds the
  // partial interpolation for the remaining low i bits.
  for (int i = f.d - 1; i >= 0; --i) {
    const int half = 1 << i;
    const double xi = x[i];
    for (int m = 0; m < half; ++m)
      buf[static_cast<size_t>(m)] = buf[static_cast<size_t>(m)] * (1.0 - xi) +
                                    buf[static_cast<size_t>(m + half)] * xi;
  }
  return buf[0] / std::sqrt(static_cast<double>(f.d));
}

ExtensionMinima min_extension_check(const CubeTable& f, std::uint64_t seed, int starts) {
  if (f.d > 12) throw std::invalid_argument("param-domain: exhaustive scan limited to d <= 12");
  if (starts < 1) throw std::invalid_argument("param-domain: need at least one start");
  ExtensionMinima out;
  out.vertex_min = *std::min_element(f.values.begin(), f.values.end()) /
                   std::sqrt(static_cast<double>(f.d));

  RngStream rng(derive_seed(seed, {stream_label("extension-min")}));
  Eigen::VectorXd x(f.d);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    for (int i = 0; i < f.d; ++i) x[i] = rng.uniform();
    // The extension is linear in each coordinate, so the best move along a
    // coordinate is always an endpoint; passes strictly decrease until the
    // point sits at a locally minimal vertex.
    for (int pass = 0; pass < 4 * f.d + 8; ++pass) {
      bool moved = false;
      for (int i = 0; i < f.d; ++i) {
        const double old = x[i];
        x[i] = 0.0;
        const double v0 = extend_multilinear(f, x);
        x[i] = 1.0;
        const double v1 = extend_multilinear(f, x);
        const double pick = v0 <= v1 ? 0.0 : 1.0;
        x[i] = pick;
        if (pick != old) moved = true;
      }
      if (!moved) break;
    }
    best = std::min(best, extend_multilinear(f, x));
  }
  out.cube_min = best;
  return out;
}

int randomized_round(const Eigen::Ref<const Eigen::VectorXd>& x, int d, RngStream& rng) {
  if (d < 1 || d > 24 || x.size() != d)
    throw std::invalid_argument("param-domain: point dimension mismatch");
  for (int i = 0; i < d; ++i)
    if (!(x[i] >= 0.0 && x[i] <= 1.0))
      throw std::invalid_argument("domain: coordinates must lie in [0,1]");
  int v = 0;
  for (int i = 0; i < d; ++i)
    if (rng.bernoulli(x[i])) v |= 1 << i;
  return v;
}

// ---------------------------------------------------------------------------
// Binary classification

BinaryClassificationInstance gen_binary_classification(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("param-domain: block size must be >= 1");
  if (n > 46340) throw std::invalid_argument("param-domain: n^2 hypotheses must fit in an int");
  BinaryClassificationInstance inst;
  inst.n = n;
  inst.num_hypotheses = n * n;
  inst.good.resize(static_cast<size_t>(n));
  inst.is_good.assign(static_cast<size_t>(inst.num_hypotheses), 0);
  inst.label.resize(static_cast<size_t>(inst.num_hypotheses));
  RngStream rng(derive_seed(seed, {stream_label("binary-cls")}));
  for (int i = 0; i < n; ++i) {
    const ExpertId g = n * i + rng.uniform_int(n);
    inst.good[static_cast<size_t>(i)] = g;
    inst.is_good[static_cast<size_t>(g)] = 1;
  }
  for (int x = 0; x < inst.num_hypotheses; ++x)
    inst.label[static_cast<size_t>(x)] = rng.bernoulli(0.5) ? 1 : 0;
  return inst;
}

OraclePair make_binary_oracle(std::shared_ptr<const BinaryClassificationInstance> inst) {
  if (!inst) throw std::invalid_argument("param-domain: null instance");
  const int n_hyp = inst->num_hypotheses;
  auto value = [inst, n_hyp](ExpertId h, ExpertId action) {
    if (action < 0 || action >= 2 * n_hyp)
      throw std::invalid_argument("param-domain: action index out of range");
    return inst->loss(h, BinaryClassificationInstance::feature_of(action),
                      BinaryClassificationInstance::label_of(action));
  };
  auto opt = [inst, n_hyp](const MixedStrategy& p) {
    p.validate(2 * n_hyp);
    const int n = inst->n;
    // Mass per good block, split by whether the example carries the good
    // label. Non-good features cost every hypothesis the same, so they
    // cannot move the argmin.
    std::vector<double> with_label(static_cast<size_t>(n), 0.0);
    std::vector<double> flipped(static_cast<size_t>(n), 0.0);
    for (const auto& a : p.atoms) {
      const ExpertId x = BinaryClassificationInstance::feature_of(a.index);
      const int y = BinaryClassificationInstance::label_of(a.index);
      if (!inst->is_good[static_cast<size_t>(x)]) continue;
      const int block = x / n;
      if (y == inst->label[static_cast<size_t>(x)])
        with_label[static_cast<size_t>(block)] += a.mass;
      else
        flipped[static_cast<size_t>(block)] += a.mass;
    }
    // Expected loss of the j-th good hypothesis is
    //   sum_{i<=j} flipped_i + sum_{i>j} with_label_i   (j = 1..n),
    // and j = 0 stands for every hypothesis outside the good set. Smallest
    // minimizing prefix wins.
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += with_label[static_cast<size_t>(i)];
    double best = s;
    int best_j = 0;
    for (int j = 1; j <= n; ++j) {
      s += flipped[static_cast<size_t>(j - 1)] - with_label[static_cast<size_t>(j - 1)];
      if (s < best) {
        best = s;
        best_j = j;
      }
    }
    if (best_j == 0) {
      for (ExpertId h = 0; h < n_hyp; ++h)
        if (!inst->is_good[static_cast<size_t>(h)]) return h;
      return inst->good[0];  // n = 1: the single hypothesis is good
    }
    return inst->good[static_cast<size_t>(best_j - 1)];
  };
  return OraclePair(n_hyp, std::move(value), std::move(opt));
}

// ---------------------------------------------------------------------------
// Instance specs

namespace {

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw std::invalid_argument("spec-error: bad integer for key '" + key + "': " + text);
  return v;
}

}  // namespace

InstanceSpec parse_instance_spec(const std::string& text) {
  InstanceSpec spec;
  bool seen_family = false, seen_n = false, seen_d = false, seen_seed = false, seen_file = false;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("spec-error: expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "family") {
      if (seen_family) throw std::invalid_argument("spec-error: duplicate key 'family'");
      seen_family = true;
      if (val != "hard_experts" && val != "aldous" && val != "binary_cls" && val != "random" &&
          val != "file")
        throw std::invalid_argument("spec-error: unknown family '" + val + "'");
      spec.family = val;
    } else if (key == "n") {
      if (seen_n) throw std::invalid_argument("spec-error: duplicate key 'n'");
      seen_n = true;
      spec.n = static_cast<long long>(parse_u64(key, val));
    } else if (key == "d") {
      if (seen_d) throw std::invalid_argument("spec-error: duplicate key 'd'");
      seen_d = true;
      spec.d = static_cast<int>(parse_u64(key, val));
    } else if (key == "seed") {
      if (seen_seed) throw std::invalid_argument("spec-error: duplicate key 'seed'");
      seen_seed = true;
      spec.seed = parse_u64(key, val);
    } else if (key == "file") {
      if (seen_file) throw std::invalid_argument("spec-error: duplicate key 'file'");
      seen_file = true;
      if (val.empty()) throw std::invalid_argument("spec-error: empty file path");
      spec.file = val;
    } else {
      throw std::invalid_argument("spec-error: unknown key '" + key + "'");
    }
  }
  if (!seen_family) throw std::invalid_argument("spec-error: missing required key 'family'");
  return spec;
}

std::string format_instance_spec(const InstanceSpec& spec) {
  if (spec.family.empty()) throw std::invalid_argument("spec-error: missing family");
  std::ostringstream out;
  out << "family=" << spec.family;
  if (spec.n > 0) out << " n=" << spec.n;
  if (spec.d > 0) out << " d=" << spec.d;
  out << " seed=" << spec.seed;
  if (!spec.file.empty()) out << " file=" << spec.file;
  return out.str();
}

}  // namespace optx
