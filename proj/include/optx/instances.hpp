// Constructive hard instances and reductions.
//
//   - Hard experts: N = n^2 experts, one hidden "good" expert per block of
//     n; losses are 0/1 and only good experts comparing >= the good action
//     escape loss. The canonical adversary walks the good experts in block
//     order, which forces any follow-the-leader style player to pay every
//     round while the final good expert pays nothing.
//   - Local-max game: a zero-sum game over hypercube vertices built from a
//     function f with a unique local maximum. Value and best-response
//     oracles only need f on the 1-neighborhoods of supports, so solving
//     the game locates f's global maximum with local queries.
//   - Multilinear extension: the smooth interpolation of a vertex table to
//     the solid cube, scaled by 1/sqrt(d) to make it 1-Lipschitz; its
//     minimum sits at a vertex and randomized rounding is unbiased.
//   - Binary classification: the hard experts construction wearing an ERM
//     hat, with per-feature random good labels and a label-flip
//     antisymmetric loss; the empirical risk minimizer reduces to a prefix
//     scan over good-block masses.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "optx/core.hpp"
#include "optx/games.hpp"
#include "optx/rng.hpp"

namespace optx {

// ---------------------------------------------------------------------------
// Hard experts

struct HardExpertsInstance {
  int n = 0;                         // block size
  int num_experts = 0;               // n^2
  std::vector<ExpertId> good;        // good[i] lies in block [n*i, n*(i+1))
  std::vector<std::uint8_t> is_good; // flag per expert

  // 0 iff both x and the action are good and x >= action, else 1.
  double loss(ExpertId x, ExpertId action) const {
    return (is_good[static_cast<size_t>(x)] && is_good[static_cast<size_t>(action)] &&
            x >= action)
               ? 0.0
               : 1.0;
  }

  // Round-t action of the canonical adversary (1-based t): the good experts
  // in block order, then the last good expert forever.
  ExpertId canonical_action(std::int64_t t) const {
    if (t < 1) throw std::invalid_argument("param-domain: rounds are 1-based");
    return t <= n ? good[static_cast<size_t>(t - 1)] : good.back();
  }

  // Zero total loss on any canonical-adversary prefix.
  ExpertId best_expert() const { return good.back(); }
};

HardExpertsInstance gen_hard_experts(int n, std::uint64_t seed);

// Value oracle is the 0/1 loss table; the answer oracle returns the highest
// good expert in the support, or the highest support element if the support
// contains no good expert. Every answer is checked to lie in the support.
OraclePair make_hard_oracle(std::shared_ptr<const HardExpertsInstance> inst);

// ---------------------------------------------------------------------------
// Hypercube functions and the local-max game

// f: {0,1}^d -> naturals, vertex index bit i = coordinate i.
struct HypercubeFunction {
  int d = 0;
  std::vector<std::uint32_t> values;  // size 2^d
  bool globally_consistent = false;   // exactly one local maximum

  int size() const { return 1 << d; }
  std::uint32_t value(int v) const { return values[static_cast<size_t>(v)]; }
};

// Exhaustive scan: true iff exactly one vertex beats-or-ties all neighbors.
bool is_globally_consistent(const HypercubeFunction& f);

// Random monotone path overlay on popcount: strictly increasing values along
// a random chain from all-zeros to all-ones, everything off the chain keeps
// its popcount. The unique local maximum is the all-ones vertex and the
// parity of the maximum value is random. Deterministic per seed; 1 <= d <= 24.
HypercubeFunction gen_staircase_function(int d, std::uint64_t seed);

// Shared state behind the game closures: f's values, precomputed local-max
// flags (so payoffs are O(1)), and instrumented f reads for the best
// response's locality guarantee.
class AldousCore {
 public:
  AldousCore(const HypercubeFunction& f);

  int dimension() const { return d_; }
  int size() const { return n_; }
  std::uint32_t value(int v) const { return values_[static_cast<size_t>(v)]; }
  bool local_max(int v) const { return local_max_[static_cast<size_t>(v)] != 0; }
  int global_max_vertex() const { return global_max_; }

  // Payoff of the row action i against column action j:
  //   both local maxima -> lambda(f(i)); f(i) >= f(j) -> 0; else 1,
  // with lambda = 1/4 for even values and 3/4 for odd.
  double payoff(int i, int j) const {
    if (local_max_[static_cast<size_t>(i)] && local_max_[static_cast<size_t>(j)])
      return (values_[static_cast<size_t>(i)] & 1u) ? 0.75 : 0.25;
    return values_[static_cast<size_t>(i)] >= values_[static_cast<size_t>(j)] ? 0.0 : 1.0;
  }

  // argmax of f over the support and its bit-flip neighbors, lowest vertex
  // index on ties. Both players' best response (row exploits that a strict
  // local max among candidates wins; ties cannot hide the unique optimum).
  int best_vertex(const MixedStrategy& p) const;

  std::uint64_t f_reads() const { return f_reads_; }
  // Records the vertices read by subsequent best_vertex calls.
  void set_read_recording(bool on) const { record_ = on; last_reads_.clear(); }
  const std::vector<int>& last_reads() const { return last_reads_; }

 private:
  std::uint32_t read(int v) const {
    ++f_reads_;
    if (record_) last_reads_.push_back(v);
    return values_[static_cast<size_t>(v)];
  }

  int d_, n_;
  std::vector<std::uint32_t> values_;
  std::vector<std::uint8_t> local_max_;
  int global_max_ = -1;
  mutable std::uint64_t f_reads_ = 0;
  mutable bool record_ = false;
  mutable std::vector<int> last_reads_;
};

struct AldousGame {
  std::shared_ptr<AldousCore> core;
  GameMatrix game;
};

// Requires a function with a unique local maximum: verified exhaustively for
// d <= 16, trusted from the flag above that ("not-globally-consistent"
// otherwise).
AldousGame gen_aldous_game(const HypercubeFunction& f);

// ---------------------------------------------------------------------------
// Multilinear extension

// Dense vertex table f: {0,1}^d -> nonnegative reals (the unit range [0,1]
// is what the Lipschitz certificate needs; nonneg combinations of unit
// tables are still valid extension inputs).
struct CubeTable {
  int d = 0;
  std::vector<double> values;  // size 2^d

  int size() const { return 1 << d; }
};

CubeTable make_cube_table(int d, std::vector<double> values);

// Unit-range copy of a staircase-style function: divide by the maximum.
// Monotone, so local-max structure is unchanged.
CubeTable normalize_to_unit(const HypercubeFunction& f);

// f~(x) = (1/sqrt(d)) sum_xi f(xi) prod_{xi_i=1} x_i prod_{xi_i=0} (1-x_i),
// evaluated by tensor contraction in O(2^d). Coordinates outside [0,1]
// raise "domain".
double extend_multilinear(const CubeTable& f, const Eigen::Ref<const Eigen::VectorXd>& x);

struct ExtensionMinima {
  double cube_min = 0.0;    // multistart coordinate descent estimate
  double vertex_min = 0.0;  // exhaustive vertex scan / sqrt(d)
};

// The extension is linear in each coordinate, so coordinate descent moves
// vertex to vertex and the two minima agree for every input we generate.
ExtensionMinima min_extension_check(const CubeTable& f, std::uint64_t seed = 0x6d696e31u,
                                    int starts = 32);

// Independent per-coordinate Bernoulli(x_i) rounding to a vertex index.
// E[f(vertex)] = sqrt(d) * f~(x) for every base table.
int randomized_round(const Eigen::Ref<const Eigen::VectorXd>& x, int d, RngStream& rng);

// ---------------------------------------------------------------------------
// Binary classification

struct BinaryClassificationInstance {
  int n = 0;
  int num_hypotheses = 0;            // n^2; features share the same index set
  std::vector<ExpertId> good;        // good hypothesis per block
  std::vector<std::uint8_t> is_good;
  std::vector<std::uint8_t> label;   // good label y*(x) per feature

  // Appendix-style base loss: 0 iff h and x are both good and h >= x.
  double base_loss(ExpertId h, ExpertId x) const {
    return (is_good[static_cast<size_t>(h)] && is_good[static_cast<size_t>(x)] && h >= x)
               ? 0.0
               : 1.0;
  }

  // Labeled loss: base loss when the label is the good one, flipped
  // otherwise, so loss(h;x,y) + loss(h;x,1-y) = 1 always.
  double loss(ExpertId h, ExpertId x, int y) const {
    const double b = base_loss(h, x);
    return y == label[static_cast<size_t>(x)] ? b : 1.0 - b;
  }

  // Labeled examples are encoded as single action ids for the oracle layer.
  static ExpertId action_of(ExpertId x, int y) { return 2 * x + y; }
  static ExpertId feature_of(ExpertId action) { return action >> 1; }
  static int label_of(ExpertId action) { return action & 1; }

  // Canonical stream: good features in block order with their good labels,
  // then the last one forever.
  ExpertId canonical_action(std::int64_t t) const {
    if (t < 1) throw std::invalid_argument("param-domain: rounds are 1-based");
    const ExpertId x = t <= n ? good[static_cast<size_t>(t - 1)] : good.back();
    return action_of(x, label[static_cast<size_t>(x)]);
  }

  ExpertId best_expert() const { return good.back(); }
};

BinaryClassificationInstance gen_binary_classification(int n, std::uint64_t seed);

// Value oracle over action ids 2x+y; the answer oracle is the empirical
// risk minimizer computed by the prefix-scan rule over good-block masses
// (smallest minimizing prefix; prefix 0 means "any non-good hypothesis").
OraclePair make_binary_oracle(std::shared_ptr<const BinaryClassificationInstance> inst);

// ---------------------------------------------------------------------------
// Instance specs (CLI / harness)

// Text form: whitespace-separated key=value pairs. Keys: family (required:
// hard_experts | aldous | binary_cls | random | file), n, d, seed, file.
struct InstanceSpec {
  std::string family;
  long long n = 0;
  int d = 0;
  std::uint64_t seed = 0;
  std::string file;
};

InstanceSpec parse_instance_spec(const std::string& text);
std::string format_instance_spec(const InstanceSpec& spec);

}  // namespace optx
