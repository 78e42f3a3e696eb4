// Seeded random streams with pure, keyed derivation.
//
// Every randomized component takes an injected RngStream so parallel trials
// are reproducible. Substreams are derived as a pure function of
// (base seed, key path), which lets e.g. a per-(round, cell) sample be
// regenerated independently of everything else. The generator is splitmix64
// (the java.util.SplittableRandom algorithm): constant-time construction is
// load-bearing here because hot loops derive fresh substreams every round.

#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>

namespace optx {

// splitmix64 output/mixing function. Bijective on 64-bit ints.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Compile-time FNV-1a of a string literal, used to tag stream labels.
constexpr std::uint64_t stream_label(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s != '\0'; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
  return h;
}

// Pure derivation: fold each key into the seed with one mixing round.
// derive_seed(b, {k1, k2}) != derive_seed(b, {k2, k1}) by construction.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix64(base + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t k : keys) s = mix64(s ^ (k + 0x9e3779b97f4a7c15ULL));
  return s;
}

// Incremental state-digest helpers: fold values into a running 64-bit hash.
// Used by the learners to fingerprint their update-side state so tests can
// assert two replicas evolved identically.
inline std::uint64_t digest_mix(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL));
}
inline std::uint64_t digest_mix(std::uint64_t h, double v) {
  return digest_mix(h, std::bit_cast<std::uint64_t>(v));
}

class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~static_cast<result_type>(0); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform int in [0, n), unbiased (Lemire multiply-shift with rejection).
  int uniform_int(int n) {
    if (n < 1) throw std::invalid_argument("param-domain: uniform_int needs n >= 1");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    std::uint64_t x = (*this)();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = (*this)();
        m = static_cast<unsigned __int128>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<int>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Child stream at the given key path; this stream is not advanced.
  RngStream child(std::initializer_list<std::uint64_t> keys) const {
    return RngStream(derive_seed(state_, keys));
  }

 private:
  std::uint64_t state_;
};

}  // namespace optx
